#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsiv/core_model.hpp"

namespace tsiv {

// Weighting matrix of the GMM criterion m(beta)' W m(beta).
struct WeightSpec {
  enum class Kind { Tstsls, Identity, Optimal, Custom };

  Kind kind = Kind::Tstsls;
  Matrix custom;  // used only when kind == Custom

  static WeightSpec tstsls() { return {Kind::Tstsls, {}}; }
  static WeightSpec identity() { return {Kind::Identity, {}}; }
  static WeightSpec optimal() { return {Kind::Optimal, {}}; }
  static WeightSpec custom_matrix(Matrix w) { return {Kind::Custom, std::move(w)}; }
};

const char* to_string(WeightSpec::Kind kind);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v) const { return lower <= v && v <= upper; }
};

inline constexpr double kNormalQuantile975 = 1.96;
inline constexpr double kWeakInstrumentF = 10.0;

struct TsivEstimate {
  WeightSpec::Kind weight_kind = WeightSpec::Kind::Tstsls;
  double beta_hat = 0.0;
  Matrix weight_used;
  Matrix omega_hat;
  double se_sandwich = 0.0;
  std::optional<double> se_efficient;  // Optimal only
  std::optional<double> se_naive;      // Tstsls only
  Interval ci_95;
  Vector gamma_hat_a;
  double first_stage_f = 0.0;
  bool weak_instrument = false;
  // Standard errors are upper bounds (summary-data mode).
  bool conservative = false;
  std::vector<std::string> warnings;
};

// (S_zz^a)^{-1} S_zx^a, the first-stage coefficients of sample a.
Vector first_stage_coefficients(const SampleMoments& m);
// (S_zz^b)^{-1} S_zy^b, the reduced-form coefficients of sample b.
Vector reduced_form_coefficients(const SampleMoments& m);

// m(beta) = (S_zz^b)^{-1} S_zy^b - (S_zz^a)^{-1} S_zx^a beta.
Vector moment_function(const SampleMoments& m, double beta);

// Variance of the moment function at `beta`:
//   (1/n_b) (S_zz^b)^{-1} Var(y|z) + (1/n_a) (S_zz^a)^{-1} beta^2 Var(x|z).
Matrix estimate_omega(const SampleMoments& m, double beta);

// Outcome-only part (1/n_b) (S_zz^b)^{-1} Var(y|z), the limit the naive
// second-stage variance corresponds to. Equals estimate_omega(m, 0).
Matrix naive_omega(const SampleMoments& m);

// Bread-meat-bread variance of the estimator with weight W when the moment
// function has variance `omega`.
double sandwich_variance(const SampleMoments& m, const Matrix& weight, const Matrix& omega);

// [gamma' omega^{-1} gamma]^{-1}, the variance under W = omega^{-1}.
double efficient_variance(const SampleMoments& m, const Matrix& omega);

// Second-stage OLS variance of TSTSLS: residual variance of y_b on the
// predicted exposure over the predicted exposure's sum of squares.
double naive_tstsls_variance(const SampleMoments& m, double beta_hat);

// Closed-form minimiser of m(beta)' W m(beta) for an explicit W.
double closed_form_beta(const SampleMoments& m, const Matrix& weight);

// Point estimate and variances for the given weight. Optimal weighting is
// two-step: a TSTSLS pilot, then one re-solve with W = Omega(pilot)^{-1}.
TsivEstimate estimate(const SampleMoments& m, const WeightSpec& weight);

// First-stage F statistic of the instrument regression in sample a.
double first_stage_f(const SampleMoments& m);

// Single-instrument helpers. Both throw UnsupportedDimension when q > 1.
// TSCOV (s_zx^a)^{-1} s_zy^b ignores the instrument variances and is
// inconsistent whenever they differ between samples.
double tscov_estimate(const SampleMoments& m);
// Delta-method SE of the TSCOV ratio treating the instrument as fixed.
double tscov_standard_error(const SampleMoments& m);
inline constexpr const char* kTscovWarning = "inconsistent under heterogeneous Sigma_zz";

// (s_zy^b / s_zz^b) / (s_zx^a / s_zz^a) with the single-moment variance.
TsivEstimate wald_ratio(const SampleMoments& m);

}  // namespace tsiv
