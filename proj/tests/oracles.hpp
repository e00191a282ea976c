// Independent reference routines for the tests. Plain loops and Gaussian
// elimination over std::vector; nothing here calls into the library's
// linear algebra.
#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tsiv/core_model.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat to_mat(const tsiv::Matrix& m) {
  Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Vec to_vec(const tsiv::Vector& v) { return Vec(v.data(), v.data() + v.size()); }

// Solves A x = b by Gaussian elimination with partial pivoting.
inline Vec solve(Mat a, Vec b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    if (a[piv][k] == 0.0) throw std::runtime_error("oracle: singular system");
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  Vec x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

inline Mat inverse(const Mat& a) {
  const std::size_t n = a.size();
  Mat inv(n, Vec(n));
  for (std::size_t c = 0; c < n; ++c) {
    Vec e(n, 0.0);
    e[c] = 1.0;
    const Vec col = solve(a, e);
    for (std::size_t r = 0; r < n; ++r) inv[r][c] = col[r];
  }
  return inv;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec matvec(const Mat& a, const Vec& v) {
  Vec out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = dot(a[i], v);
  return out;
}

struct Moments {
  Mat s_zz_a, s_zz_b;
  Vec s_zx_a, s_zy_b;
  double var_x_given_z_a = 0.0;
  double var_y_given_z_b = 0.0;
};

// Column-centred copy (when `center`) of a sample, row-major.
inline std::pair<Mat, Vec> prepared(const tsiv::Matrix& z, const tsiv::Vector& w, bool center) {
  const std::size_t n = static_cast<std::size_t>(z.rows());
  const std::size_t q = static_cast<std::size_t>(z.cols());
  Mat zz = to_mat(z);
  Vec ww = to_vec(w);
  if (center) {
    for (std::size_t j = 0; j < q; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += zz[i][j];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) zz[i][j] -= mean;
    }
    double mean = 0.0;
    for (double v : ww) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : ww) v -= mean;
  }
  return {zz, ww};
}

// Cross-moments by explicit double loops; residual variances via the OLS
// normal equations solved by elimination.
inline void sample_moments(const tsiv::Matrix& z, const tsiv::Vector& w, bool center, Mat& s_zz,
                           Vec& s_zw, double& resid_var) {
  auto [zz, ww] = prepared(z, w, center);
  const std::size_t n = zz.size();
  const std::size_t q = zz[0].size();
  s_zz.assign(q, Vec(q, 0.0));
  s_zw.assign(q, 0.0);
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t k = 0; k < q; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += zz[i][j] * zz[i][k];
      s_zz[j][k] = s / static_cast<double>(n);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += zz[i][j] * ww[i];
    s_zw[j] = s / static_cast<double>(n);
  }
  const Vec coef = solve(s_zz, s_zw);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ww[i] - dot(zz[i], coef);
    rss += r * r;
  }
  resid_var = rss / static_cast<double>(n - q - (center ? 1 : 0));
}

inline Moments brute_force_moments(const tsiv::TwoSampleData& d, bool center) {
  Moments m;
  sample_moments(d.z_a(), d.x_a(), center, m.s_zz_a, m.s_zx_a, m.var_x_given_z_a);
  sample_moments(d.z_b(), d.y_b(), center, m.s_zz_b, m.s_zy_b, m.var_y_given_z_b);
  return m;
}

struct TwoStage {
  double beta = 0.0;
  double se = 0.0;   // textbook second-stage OLS standard error
  Vec gamma;         // first stage
};

// Literal TSTSLS on centred data: OLS of x_a on z_a, predict on z_b, then
// OLS of y_b on the prediction with an intercept.
inline TwoStage literal_two_stage(const tsiv::TwoSampleData& d) {
  auto [za, xa] = prepared(d.z_a(), d.x_a(), true);
  auto [zb, yb] = prepared(d.z_b(), d.y_b(), true);
  const std::size_t q = za[0].size();
  Mat gram(q, Vec(q, 0.0));
  Vec cross(q, 0.0);
  for (std::size_t i = 0; i < za.size(); ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      cross[j] += za[i][j] * xa[i];
      for (std::size_t k = 0; k < q; ++k) gram[j][k] += za[i][j] * za[i][k];
    }
  }
  TwoStage out;
  out.gamma = solve(gram, cross);
  const std::size_t n = zb.size();
  Vec xhat(n);
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xhat[i] = dot(zb[i], out.gamma);
    xbar += xhat[i];
    ybar += yb[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xhat[i] - xbar) * (xhat[i] - xbar);
    sxy += (xhat[i] - xbar) * (yb[i] - ybar);
  }
  out.beta = sxy / sxx;
  const double alpha = ybar - out.beta * xbar;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = yb[i] - alpha - out.beta * xhat[i];
    rss += r * r;
  }
  out.se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return out;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b)));
}

// Random design with correlated Gaussian instruments and a confounded
// linear exposure/outcome pair; used by property-style loops.
inline tsiv::TwoSampleData random_dataset(std::mt19937_64& rng, Eigen::Index q, Eigen::Index n_a,
                                          Eigen::Index n_b, double beta = 0.7) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  tsiv::Vector gamma(q);
  for (Eigen::Index j = 0; j < q; ++j) gamma(j) = 0.3 + 0.5 * std::abs(ud(rng));
  auto draw = [&](Eigen::Index n, double shift, tsiv::Matrix& z, tsiv::Vector& x, tsiv::Vector& y) {
    z.resize(n, q);
    x.resize(n);
    y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double prev = 0.0;
      for (Eigen::Index j = 0; j < q; ++j) {
        prev = shift * prev + nd(rng);
        z(i, j) = prev + 0.5;
      }
      const double u = nd(rng);
      const double v = 0.5 * u + nd(rng);
      x(i) = z.row(i).dot(gamma) + v;
      y(i) = beta * x(i) + u;
    }
  };
  tsiv::Matrix za, zb;
  tsiv::Vector xa, ya, xb, yb;
  draw(n_a, 0.3 * ud(rng), za, xa, ya);
  draw(n_b, 0.6 * ud(rng), zb, xb, yb);
  return tsiv::TwoSampleData(za, xa, zb, yb);
}

}  // namespace oracle
