#pragma once

#include "tsiv/core_model.hpp"
#include "tsiv/estimators.hpp"

namespace tsiv {

// GWAS-style inputs: per-instrument marginal regression coefficients of the
// exposure (sample a) and outcome (sample b), instrument correlation (LD)
// matrices and instrument SDs, plus total variances used as upper bounds for
// the residual variances.
struct SummaryInputs {
  Vector gamma_marginal;  // x on z_j, sample a
  Vector Gamma_marginal;  // y on z_j, sample b
  Vector se_gamma;
  Vector se_Gamma;
  Matrix ld_a;
  Matrix ld_b;
  Vector scale_z_a;
  Vector scale_z_b;
  double var_x_total_a = 1.0;
  double var_y_total_b = 1.0;
  Eigen::Index n_a = 0;
  Eigen::Index n_b = 0;

  Eigen::Index q() const { return gamma_marginal.size(); }
  // Throws Error(InvalidInput) on shape or sign violations.
  void validate() const;
};

inline constexpr double kLdTolerance = 1e-8;
inline constexpr double kLdMaxRepair = 1e-3;

struct LdRepair {
  Matrix ld;
  double max_shift = 0.0;  // largest eigenvalue change
  bool repaired = false;
};

// Clips eigenvalues of a correlation matrix to kLdTolerance and restores the
// unit diagonal. Throws LdNotPsd when an eigenvalue moves by more than
// kLdMaxRepair, InvalidInput when the matrix is asymmetric or its diagonal is
// not 1.
LdRepair repair_ld(const Matrix& ld);

// S_zz^s = D_s LD_s D_s, S_zx^a_j = gamma_j sd_j^2, S_zy^b_j = Gamma_j sd_j^2;
// residual variances replaced by the total variances.
SampleMoments reconstruct_moments(const SummaryInputs& in);

// estimate() on the reconstructed moments; the result is flagged
// conservative.
TsivEstimate conservative_estimate(const SummaryInputs& in, const WeightSpec& weight);

// Approximate first-stage F from the marginal z statistics, mean_j (gamma_j / se_j)^2.
double summary_first_stage_f(const SummaryInputs& in);

// Summary statistics of an individual-level dataset (centered, denominators
// n); the inverse of reconstruct_moments up to the residual variances.
SummaryInputs summarize(const TwoSampleData& data);

}  // namespace tsiv
