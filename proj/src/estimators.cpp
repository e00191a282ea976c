#include "tsiv/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tsiv/error.hpp"
#include "tsiv/linalg.hpp"

namespace tsiv {

namespace {

struct Factors {
  SpdFactor a;
  SpdFactor b;

  explicit Factors(const SampleMoments& m)
      : a(m.s_zz_a, "S_zz (sample a)"), b(m.s_zz_b, "S_zz (sample b)") {}
};

void require_single_instrument(const SampleMoments& m, const char* what) {
  if (m.q() != 1) {
    throw Error(ErrorCode::UnsupportedDimension,
                std::string(what) + " requires exactly one instrument, got q = " +
                    std::to_string(m.q()));
  }
}

double checked_denominator(double d) {
  if (!(std::abs(d) > 0.0) || !std::isfinite(d)) {
    throw Error(ErrorCode::DegenerateMoments,
                "first-stage coefficients are zero under the chosen weight");
  }
  return d;
}

void finish(const SampleMoments& m, TsivEstimate& est) {
  const double half = kNormalQuantile975 * est.se_sandwich;
  est.ci_95 = {est.beta_hat - half, est.beta_hat + half};
  est.first_stage_f = first_stage_f(m);
  est.weak_instrument = est.first_stage_f < kWeakInstrumentF;
  est.conservative = m.conservative;
  if (est.weak_instrument) {
    est.warnings.push_back("weak instrument: first-stage F = " +
                           std::to_string(est.first_stage_f) + " < 10");
  }
  if (m.conservative) {
    est.warnings.push_back("standard errors are a conservative upper bound");
  }
}

}  // namespace

const char* to_string(WeightSpec::Kind kind) {
  switch (kind) {
    case WeightSpec::Kind::Tstsls: return "tstsls";
    case WeightSpec::Kind::Identity: return "identity";
    case WeightSpec::Kind::Optimal: return "optimal";
    case WeightSpec::Kind::Custom: return "custom";
  }
  return "unknown";
}

Vector first_stage_coefficients(const SampleMoments& m) {
  return SpdFactor(m.s_zz_a, "S_zz (sample a)").solve(m.s_zx_a);
}

Vector reduced_form_coefficients(const SampleMoments& m) {
  return SpdFactor(m.s_zz_b, "S_zz (sample b)").solve(m.s_zy_b);
}

Vector moment_function(const SampleMoments& m, double beta) {
  return reduced_form_coefficients(m) - first_stage_coefficients(m) * beta;
}

Matrix estimate_omega(const SampleMoments& m, double beta) {
  const Factors f(m);
  Matrix omega = f.b.inverse() * (m.var_y_given_z_b / static_cast<double>(m.n_b)) +
                 f.a.inverse() * (beta * beta * m.var_x_given_z_a / static_cast<double>(m.n_a));
  // Symmetrise away rounding from the two solves.
  return 0.5 * (omega + omega.transpose());
}

Matrix naive_omega(const SampleMoments& m) {
  const SpdFactor fb(m.s_zz_b, "S_zz (sample b)");
  const Matrix omega = fb.inverse() * (m.var_y_given_z_b / static_cast<double>(m.n_b));
  return 0.5 * (omega + omega.transpose());
}

double sandwich_variance(const SampleMoments& m, const Matrix& weight, const Matrix& omega) {
  if (weight.rows() != m.q() || omega.rows() != m.q() || !is_symmetric(weight) ||
      !is_symmetric(omega)) {
    throw Error(ErrorCode::InvalidInput, "weight and omega must be symmetric q x q matrices");
  }
  const Vector gamma = first_stage_coefficients(m);
  const Vector wg = weight * gamma;
  const double bread = checked_denominator(gamma.dot(wg));
  const double meat = wg.dot(omega * wg);
  return meat / (bread * bread);
}

double efficient_variance(const SampleMoments& m, const Matrix& omega) {
  const Vector gamma = first_stage_coefficients(m);
  const SpdFactor fo(omega, "Omega", ErrorCode::OmegaSingular);
  return 1.0 / checked_denominator(gamma.dot(fo.solve(gamma)));
}

double naive_tstsls_variance(const SampleMoments& m, double beta_hat) {
  const Vector gamma = first_stage_coefficients(m);
  const double n_b = static_cast<double>(m.n_b);
  const double fitted_ss = gamma.dot(m.s_zz_b * gamma);  // per observation
  checked_denominator(fitted_ss);
  const double rss_per_obs = m.var_y_b - 2.0 * beta_hat * gamma.dot(m.s_zy_b) +
                             beta_hat * beta_hat * fitted_ss;
  // Second stage: slope (and intercept when centered).
  const double dof = n_b - (m.centered ? 2.0 : 1.0);
  const double sigma2 = std::max(rss_per_obs, 0.0) * n_b / dof;
  return sigma2 / (n_b * fitted_ss);
}

double closed_form_beta(const SampleMoments& m, const Matrix& weight) {
  const Factors f(m);
  const Vector gamma_a = f.a.solve(m.s_zx_a);
  const Vector gamma_b = f.b.solve(m.s_zy_b);
  const Vector wg = weight * gamma_a;
  return wg.dot(gamma_b) / checked_denominator(wg.dot(gamma_a));
}

double first_stage_f(const SampleMoments& m) {
  const Vector gamma = first_stage_coefficients(m);
  const double explained = gamma.dot(m.s_zz_a * gamma);
  const double q = static_cast<double>(m.q());
  if (m.var_x_given_z_a <= 0.0) return std::numeric_limits<double>::infinity();
  return explained / q / m.var_x_given_z_a;
}

TsivEstimate estimate(const SampleMoments& m, const WeightSpec& weight) {
  TsivEstimate est;
  est.weight_kind = weight.kind;
  est.gamma_hat_a = first_stage_coefficients(m);
  const Eigen::Index q = m.q();

  switch (weight.kind) {
    case WeightSpec::Kind::Tstsls:
      est.weight_used = m.s_zz_b;
      break;
    case WeightSpec::Kind::Identity:
      est.weight_used = Matrix::Identity(q, q);
      break;
    case WeightSpec::Kind::Custom:
      if (weight.custom.rows() != q || weight.custom.cols() != q ||
          !is_symmetric(weight.custom)) {
        throw Error(ErrorCode::NonPositiveDefiniteWeight,
                    "custom weight must be a symmetric " + std::to_string(q) + " x " +
                        std::to_string(q) + " matrix");
      }
      SpdFactor(weight.custom, "custom weight", ErrorCode::NonPositiveDefiniteWeight);
      est.weight_used = weight.custom;
      break;
    case WeightSpec::Kind::Optimal: {
      const double pilot = closed_form_beta(m, m.s_zz_b);
      est.omega_hat = estimate_omega(m, pilot);
      const SpdFactor fo(est.omega_hat, "Omega", ErrorCode::OmegaSingular);
      est.weight_used = fo.inverse();
      est.weight_used = 0.5 * (est.weight_used + est.weight_used.transpose());
      const Vector gamma_b = reduced_form_coefficients(m);
      const Vector wg = fo.solve(est.gamma_hat_a);
      const double info = checked_denominator(wg.dot(est.gamma_hat_a));
      est.beta_hat = wg.dot(gamma_b) / info;
      // The weight and the variance share Omega(pilot), so the sandwich
      // collapses to the efficient form.
      est.se_sandwich = std::sqrt(sandwich_variance(m, est.weight_used, est.omega_hat));
      est.se_efficient = std::sqrt(1.0 / info);
      finish(m, est);
      return est;
    }
  }

  est.beta_hat = closed_form_beta(m, est.weight_used);
  est.omega_hat = estimate_omega(m, est.beta_hat);
  est.se_sandwich = std::sqrt(sandwich_variance(m, est.weight_used, est.omega_hat));
  if (weight.kind == WeightSpec::Kind::Tstsls) {
    est.se_naive = std::sqrt(naive_tstsls_variance(m, est.beta_hat));
  }
  finish(m, est);
  return est;
}

double tscov_estimate(const SampleMoments& m) {
  require_single_instrument(m, "TSCOV");
  return m.s_zy_b(0) / checked_denominator(m.s_zx_a(0));
}

double tscov_standard_error(const SampleMoments& m) {
  const double t = tscov_estimate(m);
  const double var_num = m.s_zz_b(0, 0) * m.var_y_given_z_b / static_cast<double>(m.n_b);
  const double var_den = m.s_zz_a(0, 0) * m.var_x_given_z_a / static_cast<double>(m.n_a);
  return std::sqrt((var_num + t * t * var_den) / (m.s_zx_a(0) * m.s_zx_a(0)));
}

TsivEstimate wald_ratio(const SampleMoments& m) {
  require_single_instrument(m, "Wald ratio");
  TsivEstimate est;
  est.weight_kind = WeightSpec::Kind::Identity;
  est.weight_used = Matrix::Identity(1, 1);
  const double first = m.s_zx_a(0) / m.s_zz_a(0, 0);
  const double reduced = m.s_zy_b(0) / m.s_zz_b(0, 0);
  if (!(m.s_zz_a(0, 0) > 0.0) || !(m.s_zz_b(0, 0) > 0.0)) {
    throw Error(ErrorCode::DegenerateMoments, "instrument has zero variance");
  }
  est.gamma_hat_a = Vector::Constant(1, first);
  est.beta_hat = reduced / checked_denominator(first);
  est.omega_hat = estimate_omega(m, est.beta_hat);
  est.se_sandwich = std::sqrt(est.omega_hat(0, 0) / (first * first));
  finish(m, est);
  return est;
}

}  // namespace tsiv
