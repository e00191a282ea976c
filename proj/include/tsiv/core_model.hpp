#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace tsiv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Individual-level two-sample design. Sample a observes (z, x); sample b
// observes (z, y). The exposure of sample b and the outcome of sample a are
// never part of this type.
class TwoSampleData {
 public:
  // Throws Error(InvalidInput) when shapes disagree, q == 0, a sample has
  // fewer than q + 1 rows, or any entry is non-finite.
  TwoSampleData(Matrix z_a, Vector x_a, Matrix z_b, Vector y_b);

  const Matrix& z_a() const { return z_a_; }
  const Vector& x_a() const { return x_a_; }
  const Matrix& z_b() const { return z_b_; }
  const Vector& y_b() const { return y_b_; }

  Eigen::Index n_a() const { return x_a_.size(); }
  Eigen::Index n_b() const { return y_b_.size(); }
  Eigen::Index q() const { return z_a_.cols(); }

 private:
  Matrix z_a_;
  Vector x_a_;
  Matrix z_b_;
  Vector y_b_;
};

// Cross-moments divided by n (never n - 1), plus the residual variances of
// the per-sample instrument regressions.
struct SampleMoments {
  Matrix s_zz_a;
  Vector s_zx_a;
  Matrix s_zz_b;
  Vector s_zy_b;
  Eigen::Index n_a = 0;
  Eigen::Index n_b = 0;
  double var_x_given_z_a = 0.0;
  double var_y_given_z_b = 0.0;
  // Second moments x_a'x_a/n_a and y_b'y_b/n_b (variances when centered).
  double var_x_a = 0.0;
  double var_y_b = 0.0;
  bool centered = true;
  // Set when the moments were rebuilt from summary statistics and the
  // residual variances are upper bounds.
  bool conservative = false;

  Eigen::Index q() const { return s_zx_a.size(); }
};

// Simulation-side ground truth of the linear structural model.
struct NoiseParams {
  double sigma_vv = 1.0;  // Var(v)
  double sigma_uv = 0.5;  // Cov(u, v)
  double sigma_uu = 1.0;  // SD(u)

  // Throws Error(InvalidInput) unless [[vv, uv], [uv, uu^2]] is PSD.
  void validate() const;
};

struct StructuralParams {
  double beta = 1.0;
  Vector gamma;
  NoiseParams noise_a;
  NoiseParams noise_b;
};

// Reciprocal-condition floor below which a moment matrix counts as singular.
inline constexpr double kSingularRcond = 1e-12;

// Computes the moments of `data`. With `center`, column means are removed
// first and residual variances use n - q - 1; otherwise n - q.
// Throws Error(DegenerateMoments) if either S_zz is numerically singular.
SampleMoments compute_moments(const TwoSampleData& data, bool center = true);

}  // namespace tsiv
