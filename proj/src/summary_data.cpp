#include "tsiv/summary_data.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "tsiv/error.hpp"
#include "tsiv/linalg.hpp"

namespace tsiv {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidInput, what);
}

Matrix scaled(const Matrix& ld, const Vector& sd) {
  return sd.asDiagonal() * ld * sd.asDiagonal();
}

}  // namespace

void SummaryInputs::validate() const {
  const Eigen::Index k = q();
  require(k >= 1, "at least one instrument is required");
  require(Gamma_marginal.size() == k && se_gamma.size() == k && se_Gamma.size() == k,
          "coefficient vectors differ in length");
  require(scale_z_a.size() == k && scale_z_b.size() == k, "instrument SD vectors differ in length");
  require(ld_a.rows() == k && ld_a.cols() == k, "ld_a must be q x q");
  require(ld_b.rows() == k && ld_b.cols() == k, "ld_b must be q x q");
  require((scale_z_a.array() > 0).all() && (scale_z_b.array() > 0).all(),
          "instrument SDs must be positive");
  require((se_gamma.array() > 0).all() && (se_Gamma.array() > 0).all(),
          "standard errors must be positive");
  require(var_x_total_a > 0 && var_y_total_b > 0, "total variances must be positive");
  require(n_a > k && n_b > k, "sample sizes must exceed q");
  require(gamma_marginal.allFinite() && Gamma_marginal.allFinite() && ld_a.allFinite() &&
              ld_b.allFinite(),
          "summary inputs contain non-finite entries");
}

LdRepair repair_ld(const Matrix& ld) {
  require(ld.rows() == ld.cols(), "LD matrix must be square");
  require(is_symmetric(ld, kLdTolerance), "LD matrix is not symmetric");
  require((ld.diagonal().array() - 1.0).abs().maxCoeff() <= kLdTolerance,
          "LD matrix must have a unit diagonal");

  const Matrix sym = 0.5 * (ld + ld.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& values = eig.eigenvalues();
  LdRepair out;
  if (values.minCoeff() >= kLdTolerance) {
    out.ld = sym;
    return out;
  }
  const Vector clipped = values.cwiseMax(kLdTolerance);
  out.max_shift = (clipped - values).cwiseAbs().maxCoeff();
  if (out.max_shift > kLdMaxRepair) {
    throw Error(ErrorCode::LdNotPsd,
                "LD matrix needs an eigenvalue shift of " + std::to_string(out.max_shift) +
                    " (> " + std::to_string(kLdMaxRepair) + ")");
  }
  Matrix fixed = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  const Vector inv_sd = fixed.diagonal().cwiseSqrt().cwiseInverse();
  fixed = inv_sd.asDiagonal() * fixed * inv_sd.asDiagonal();
  out.ld = 0.5 * (fixed + fixed.transpose());
  out.repaired = true;
  return out;
}

SampleMoments reconstruct_moments(const SummaryInputs& in) {
  in.validate();
  const Matrix ld_a = repair_ld(in.ld_a).ld;
  const Matrix ld_b = repair_ld(in.ld_b).ld;

  SampleMoments m;
  m.n_a = in.n_a;
  m.n_b = in.n_b;
  m.centered = true;
  m.conservative = true;
  m.s_zz_a = scaled(ld_a, in.scale_z_a);
  m.s_zz_b = scaled(ld_b, in.scale_z_b);
  m.s_zx_a = in.gamma_marginal.cwiseProduct(in.scale_z_a.cwiseAbs2());
  m.s_zy_b = in.Gamma_marginal.cwiseProduct(in.scale_z_b.cwiseAbs2());
  m.var_x_given_z_a = in.var_x_total_a;
  m.var_y_given_z_b = in.var_y_total_b;
  m.var_x_a = in.var_x_total_a;
  m.var_y_b = in.var_y_total_b;
  SpdFactor(m.s_zz_a, "reconstructed S_zz (sample a)");
  SpdFactor(m.s_zz_b, "reconstructed S_zz (sample b)");
  return m;
}

double summary_first_stage_f(const SummaryInputs& in) {
  return in.gamma_marginal.cwiseQuotient(in.se_gamma).squaredNorm() /
         static_cast<double>(in.q());
}

TsivEstimate conservative_estimate(const SummaryInputs& in, const WeightSpec& weight) {
  const SampleMoments m = reconstruct_moments(in);
  TsivEstimate est = estimate(m, weight);
  // The individual-level F needs Var(x|z); use the marginal z statistics.
  const double f = summary_first_stage_f(in);
  std::erase_if(est.warnings, [](const std::string& w) { return w.rfind("weak", 0) == 0; });
  est.first_stage_f = f;
  est.weak_instrument = f < kWeakInstrumentF;
  if (est.weak_instrument) {
    est.warnings.push_back("weak instrument: first-stage F = " + std::to_string(f) + " < 10");
  }
  return est;
}

namespace {

struct Marginals {
  Vector coef;
  Vector se;
  Vector sd;
  Matrix corr;
  double var_total = 0.0;
};

Marginals marginal_regressions(const Matrix& z, const Vector& w) {
  const double n = static_cast<double>(z.rows());
  Matrix zc = z.rowwise() - z.colwise().mean();
  Vector wc = w.array() - w.mean();
  const Matrix cov = zc.transpose() * zc / n;
  Marginals out;
  out.sd = cov.diagonal().cwiseSqrt();
  out.corr = out.sd.cwiseInverse().asDiagonal() * cov * out.sd.cwiseInverse().asDiagonal();
  out.corr.diagonal().setOnes();
  const Vector cross = zc.transpose() * wc / n;
  out.coef = cross.cwiseQuotient(cov.diagonal());
  out.var_total = wc.squaredNorm() / (n - 1.0);
  out.se.resize(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const Vector resid = wc - zc.col(j) * out.coef(j);
    const double s2 = resid.squaredNorm() / (n - 2.0);
    out.se(j) = std::sqrt(s2 / (n * cov(j, j)));
  }
  return out;
}

}  // namespace

SummaryInputs summarize(const TwoSampleData& data) {
  const Marginals a = marginal_regressions(data.z_a(), data.x_a());
  const Marginals b = marginal_regressions(data.z_b(), data.y_b());
  SummaryInputs in;
  in.gamma_marginal = a.coef;
  in.Gamma_marginal = b.coef;
  in.se_gamma = a.se;
  in.se_Gamma = b.se;
  in.ld_a = a.corr;
  in.ld_b = b.corr;
  in.scale_z_a = a.sd;
  in.scale_z_b = b.sd;
  in.var_x_total_a = a.var_total;
  in.var_y_total_b = b.var_total;
  in.n_a = data.n_a();
  in.n_b = data.n_b();
  return in;
}

}  // namespace tsiv
