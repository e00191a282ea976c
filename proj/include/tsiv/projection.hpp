#pragma once

#include <cstddef>
#include <vector>

#include "tsiv/core_model.hpp"

namespace tsiv {

struct LinearProjection {
  Vector gamma;        // slopes, intercept excluded
  double intercept = 0.0;
  Vector se;           // homoskedastic OLS standard errors of the slopes
};

// OLS of x on [1, z]. Throws DegenerateMoments for a singular design.
LinearProjection best_linear_projection(const Matrix& z, const Vector& x);

struct MatchResult {
  std::vector<Eigen::Index> idx_a;
  std::vector<Eigen::Index> idx_b;
  std::vector<double> distance;  // standardized Euclidean distance per pair
};

// Greedy caliper matching without replacement: repeatedly pairs the closest
// remaining (a, b) couple, ties broken by lowest a index then lowest b index,
// and stops once no remaining couple lies within the caliper. Distances use
// instrument columns standardized by their pooled within-sample SD. Pairs are
// returned in the order they were formed. Throws NoMatches when no couple is
// within the caliper.
MatchResult match_samples(const Matrix& z_a, const Matrix& z_b, double caliper);

// Both exposures observed, as in simulations or validation studies.
struct ValidationData {
  Matrix z_a;
  Vector x_a;
  Matrix z_b;
  Vector x_b;
};

struct ProjectionComparison {
  Vector gamma_a;
  Vector gamma_b;
  double divergence = 0.0;  // ||gamma_a - gamma_b|| / max(||gamma_a||, ||gamma_b||)
  bool sign_flip = false;
};

ProjectionComparison compare_projections(const Vector& gamma_a, const Vector& gamma_b);

struct ProjectionReport {
  ProjectionComparison before;
  ProjectionComparison after;
  double caliper = 0.0;
  std::size_t matched_pairs = 0;
  double kept_fraction = 0.0;  // pairs / min(n_a, n_b)
  MatchResult matches;
};

inline constexpr double kDefaultCaliper = 0.1;

ProjectionReport conspiracy_report(const ValidationData& data, double caliper = kDefaultCaliper);

}  // namespace tsiv
