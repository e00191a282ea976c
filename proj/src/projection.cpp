#include "tsiv/projection.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>

#include "tsiv/error.hpp"
#include "tsiv/linalg.hpp"

namespace tsiv {

LinearProjection best_linear_projection(const Matrix& z, const Vector& x) {
  const Eigen::Index n = z.rows();
  const Eigen::Index q = z.cols();
  if (n != x.size() || q == 0 || n < q + 2) {
    throw Error(ErrorCode::InvalidInput, "projection needs n >= q + 2 rows matching x");
  }
  const Eigen::RowVectorXd z_mean = z.colwise().mean();
  const Matrix zc = z.rowwise() - z_mean;
  const double x_mean = x.mean();
  const Vector xc = x.array() - x_mean;
  const SpdFactor gram(zc.transpose() * zc, "instrument covariance");
  LinearProjection out;
  out.gamma = gram.solve(Vector(zc.transpose() * xc));
  out.intercept = x_mean - z_mean.dot(out.gamma);
  const double sigma2 = (xc - zc * out.gamma).squaredNorm() / static_cast<double>(n - q - 1);
  out.se = (gram.inverse().diagonal() * sigma2).cwiseSqrt();
  return out;
}

namespace {

Vector pooled_sd(const Matrix& z_a, const Matrix& z_b) {
  auto ss = [](const Matrix& z) {
    const Matrix zc = z.rowwise() - z.colwise().mean();
    return Vector(zc.colwise().squaredNorm().transpose());
  };
  const double dof = static_cast<double>(z_a.rows() + z_b.rows() - 2);
  Vector sd = ((ss(z_a) + ss(z_b)) / std::max(dof, 1.0)).cwiseSqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 0.0)) sd(j) = 1.0;  // constant column: distances in raw units
  }
  return sd;
}

// Remaining b rows ordered by their first standardized coordinate, so the
// nearest-neighbour search only visits rows within the current best radius
// along that axis.
class SortedPool {
 public:
  explicit SortedPool(const Matrix& points) : points_(points) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) keys_.insert({points(i, 0), i});
  }

  void erase(Eigen::Index i) { keys_.erase({points_(i, 0), i}); }

  // Nearest remaining row within `radius` of `query`; lowest index on ties.
  std::optional<std::pair<double, Eigen::Index>> nearest(const Eigen::RowVectorXd& query,
                                                          double radius) const {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_idx = -1;
    const double key = query(0);
    auto consider = [&](const Key& k) {
      const double d = (points_.row(k.second) - query).norm();
      if (d <= radius && (d < best || (d == best && k.second < best_idx))) {
        best = d;
        best_idx = k.second;
      }
    };
    auto bound = [&] { return std::min(best, radius); };
    const auto start = keys_.lower_bound({key, -1});
    for (auto it = start; it != keys_.end() && it->first - key <= bound(); ++it) consider(*it);
    for (auto it = start; it != keys_.begin();) {
      --it;
      if (key - it->first > bound()) break;
      consider(*it);
    }
    if (best_idx < 0) return std::nullopt;
    return std::make_pair(best, best_idx);
  }

 private:
  using Key = std::pair<double, Eigen::Index>;
  const Matrix& points_;
  std::set<Key> keys_;
};

}  // namespace

MatchResult match_samples(const Matrix& z_a, const Matrix& z_b, double caliper) {
  if (!(caliper > 0.0)) throw Error(ErrorCode::InvalidInput, "caliper must be positive");
  if (z_a.cols() != z_b.cols() || z_a.cols() == 0) {
    throw Error(ErrorCode::InvalidInput, "matching needs the same instruments in both samples");
  }
  if (z_a.rows() == 0 || z_b.rows() == 0) {
    throw Error(ErrorCode::NoMatches, "a sample is empty");
  }
  const Vector sd = pooled_sd(z_a, z_b);
  const Matrix std_a = z_a * sd.cwiseInverse().asDiagonal();
  const Matrix std_b = z_b * sd.cwiseInverse().asDiagonal();
  SortedPool pool(std_b);

  // Each a row holds a candidate at no more than its true current nearest
  // distance; stale candidates are refreshed when popped.
  using Candidate = std::tuple<double, Eigen::Index, Eigen::Index>;
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  for (Eigen::Index i = 0; i < std_a.rows(); ++i) {
    if (auto nn = pool.nearest(std_a.row(i), caliper)) heap.emplace(nn->first, i, nn->second);
  }
  std::vector<bool> used_b(static_cast<std::size_t>(z_b.rows()), false);
  MatchResult out;
  while (!heap.empty()) {
    const auto [d, ia, ib] = heap.top();
    heap.pop();
    if (used_b[static_cast<std::size_t>(ib)]) {
      if (auto nn = pool.nearest(std_a.row(ia), caliper)) heap.emplace(nn->first, ia, nn->second);
      continue;
    }
    used_b[static_cast<std::size_t>(ib)] = true;
    pool.erase(ib);
    out.idx_a.push_back(ia);
    out.idx_b.push_back(ib);
    out.distance.push_back(d);
  }
  if (out.idx_a.empty()) {
    throw Error(ErrorCode::NoMatches,
                "no pair of observations lies within caliper " + std::to_string(caliper));
  }
  return out;
}

ProjectionComparison compare_projections(const Vector& gamma_a, const Vector& gamma_b) {
  ProjectionComparison c{gamma_a, gamma_b, 0.0, false};
  const double scale = std::max(gamma_a.norm(), gamma_b.norm());
  const double gap = (gamma_a - gamma_b).norm();
  c.divergence = scale > 0.0 ? gap / scale : 0.0;
  for (Eigen::Index j = 0; j < gamma_a.size(); ++j) {
    if (gamma_a(j) * gamma_b(j) < 0.0) c.sign_flip = true;
  }
  return c;
}

namespace {

template <typename M>
M take_rows(const M& src, const std::vector<Eigen::Index>& idx) {
  M out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(idx[i]);
  return out;
}

}  // namespace

ProjectionReport conspiracy_report(const ValidationData& data, double caliper) {
  ProjectionReport r;
  r.caliper = caliper;
  r.before = compare_projections(best_linear_projection(data.z_a, data.x_a).gamma,
                                 best_linear_projection(data.z_b, data.x_b).gamma);
  r.matches = match_samples(data.z_a, data.z_b, caliper);
  r.matched_pairs = r.matches.idx_a.size();
  r.kept_fraction = static_cast<double>(r.matched_pairs) /
                    static_cast<double>(std::min(data.z_a.rows(), data.z_b.rows()));
  const Matrix za = take_rows(data.z_a, r.matches.idx_a);
  const Matrix zb = take_rows(data.z_b, r.matches.idx_b);
  const Vector xa = take_rows(Matrix(data.x_a), r.matches.idx_a).col(0);
  const Vector xb = take_rows(Matrix(data.x_b), r.matches.idx_b).col(0);
  r.after = compare_projections(best_linear_projection(za, xa).gamma,
                                best_linear_projection(zb, xb).gamma);
  return r;
}

}  // namespace tsiv
