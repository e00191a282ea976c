#include "tsiv/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsiv/error.hpp"
#include "tsiv/linalg.hpp"

namespace tsiv {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidInput, what);
}

struct CenteredSample {
  Matrix z;
  Vector w;
};

CenteredSample prepare(const Matrix& z, const Vector& w, bool center) {
  CenteredSample out{z, w};
  if (center) {
    out.z.rowwise() -= z.colwise().mean();
    out.w.array() -= w.mean();
  }
  return out;
}

double residual_dof(Eigen::Index n, Eigen::Index q, bool center) {
  return static_cast<double>(std::max<Eigen::Index>(n - q - (center ? 1 : 0), 1));
}

}  // namespace

TwoSampleData::TwoSampleData(Matrix z_a, Vector x_a, Matrix z_b, Vector y_b)
    : z_a_(std::move(z_a)), x_a_(std::move(x_a)), z_b_(std::move(z_b)), y_b_(std::move(y_b)) {
  require(z_a_.cols() >= 1, "at least one instrument is required");
  require(z_a_.cols() == z_b_.cols(), "instrument count differs between samples (" +
                                          std::to_string(z_a_.cols()) + " vs " +
                                          std::to_string(z_b_.cols()) + ")");
  require(z_a_.rows() == x_a_.size(), "z_a and x_a row counts differ");
  require(z_b_.rows() == y_b_.size(), "z_b and y_b row counts differ");
  require(n_a() >= q() + 1, "sample a needs at least q + 1 rows");
  require(n_b() >= q() + 1, "sample b needs at least q + 1 rows");
  require(z_a_.allFinite() && x_a_.allFinite(), "sample a contains non-finite entries");
  require(z_b_.allFinite() && y_b_.allFinite(), "sample b contains non-finite entries");
}

void NoiseParams::validate() const {
  require(std::isfinite(sigma_vv) && std::isfinite(sigma_uv) && std::isfinite(sigma_uu),
          "noise parameters must be finite");
  require(sigma_vv >= 0.0 && sigma_uu >= 0.0, "noise variances must be nonnegative");
  require(sigma_uv * sigma_uv <= sigma_vv * sigma_uu * sigma_uu * (1.0 + 1e-12),
          "noise covariance matrix is not positive semidefinite");
}

SampleMoments compute_moments(const TwoSampleData& data, bool center) {
  const CenteredSample a = prepare(data.z_a(), data.x_a(), center);
  const CenteredSample b = prepare(data.z_b(), data.y_b(), center);
  const double n_a = static_cast<double>(data.n_a());
  const double n_b = static_cast<double>(data.n_b());

  SampleMoments m;
  m.n_a = data.n_a();
  m.n_b = data.n_b();
  m.centered = center;
  m.s_zz_a = a.z.transpose() * a.z / n_a;
  m.s_zx_a = a.z.transpose() * a.w / n_a;
  m.s_zz_b = b.z.transpose() * b.z / n_b;
  m.s_zy_b = b.z.transpose() * b.w / n_b;
  m.var_x_a = a.w.squaredNorm() / n_a;
  m.var_y_b = b.w.squaredNorm() / n_b;

  const SpdFactor fa(m.s_zz_a, "S_zz (sample a)");
  const SpdFactor fb(m.s_zz_b, "S_zz (sample b)");
  const Vector gamma_a = fa.solve(m.s_zx_a);
  const Vector gamma_b = fb.solve(m.s_zy_b);
  m.var_x_given_z_a =
      (a.w - a.z * gamma_a).squaredNorm() / residual_dof(m.n_a, data.q(), center);
  m.var_y_given_z_b =
      (b.w - b.z * gamma_b).squaredNorm() / residual_dof(m.n_b, data.q(), center);
  return m;
}

}  // namespace tsiv
