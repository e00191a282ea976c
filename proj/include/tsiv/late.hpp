#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsiv/core_model.hpp"

namespace tsiv::late {

// Latent response classes of a binary exposure to a binary instrument.
enum class Class { AlwaysTaker = 0, Complier = 1, NeverTaker = 2, Defier = 3 };
inline constexpr std::array<Class, 4> kClasses = {Class::AlwaysTaker, Class::Complier,
                                                  Class::NeverTaker, Class::Defier};

const char* to_string(Class c);
// Accepts "at", "co", "nt", "de" and the long names.
std::optional<Class> parse_class(const std::string& s);

// Exposure taken by class `c` when the instrument equals z.
int exposure(Class c, int z);

struct ClassCell {
  double share = 0.0;   // P(t = c)
  double mean_g0 = 0.0; // E[g(0, u) | t = c]
  double mean_g1 = 0.0; // E[g(1, u) | t = c]
};

// Finite ground-truth world for one sample. The instrument is independent of
// the class and the potential outcomes, so the joint table is the product of
// P(z = 1) and the class shares.
struct DiscreteIvWorld {
  double p_z1 = 0.5;
  std::array<ClassCell, 4> cells{};

  const ClassCell& cell(Class c) const { return cells[static_cast<int>(c)]; }
  ClassCell& cell(Class c) { return cells[static_cast<int>(c)]; }
  double share(Class c) const { return cell(c).share; }

  // Throws Error(InvalidInput) unless shares lie in [0,1] and sum to 1 and
  // p_z1 lies strictly inside (0,1).
  void validate() const;

  // P(z, t); the brute-force route every estimand is checked against.
  double joint(int z, Class c) const;
  // E[y | z] and E[x | z] enumerated from the joint table.
  double mean_outcome_given_z(int z) const;
  double mean_exposure_given_z(int z) const;
};

// One row of the CSV world table: sample, z, class, p, mean_g0, mean_g1.
struct WorldRow {
  std::string sample;
  int z = 0;
  Class cls = Class::Complier;
  double p = 0.0;
  double mean_g0 = 0.0;
  double mean_g1 = 0.0;
};

// Builds a world from joint table rows, checking the product structure
// (P(z,t) = P(z) P(t)) and that class means do not vary with z.
DiscreteIvWorld world_from_rows(const std::vector<WorldRow>& rows);
std::vector<WorldRow> rows_from_world(const DiscreteIvWorld& world, const std::string& sample);

struct NormalizedWorld {
  DiscreteIvWorld world;
  bool flipped = false;
};

// Monotone-decreasing worlds (no compliers, some defiers) are re-expressed
// with exposure 1 - x so that the instrument increases the exposure.
NormalizedWorld normalize_direction(const DiscreteIvWorld& world);

struct OneSampleLate {
  double wald = 0.0;                     // (E[y|z=1]-E[y|z=0]) / (E[x|z=1]-E[x|z=0])
  std::optional<double> complier_effect; // E[g(1,u) - g(0,u) | t = co]
};

// Throws NoCompliers when P(co) = 0. With `require_monotone`, throws
// MonotonicityViolated when defiers are present; otherwise the complier
// reduction is omitted for such worlds. When both routes exist they are
// checked against each other to 1e-12.
OneSampleLate late_one_sample(const DiscreteIvWorld& world, bool require_monotone = true);

struct TwoSampleLate {
  double estimand = 0.0;  // cross-sample Wald expression
  double scaling = 0.0;   // P(t^b = co) / P(t^a = co)
  double late_b = 0.0;    // complier effect in sample b
};

// Throws NoCompliers / MonotonicityViolated. Verifies that the enumerated
// cross-sample Wald ratio equals late_b * scaling to 1e-12.
TwoSampleLate late_two_sample(const DiscreteIvWorld& world_a, const DiscreteIvWorld& world_b);

struct CellCheck {
  int x = 0;
  int z = 0;
  double probability = 0.0;                 // P(x, z)
  std::optional<double> observed_mean;      // E[y | x, z] from the joint table
  std::optional<double> decomposition_mean; // same mean from the class decomposition
  bool consistent = true;
};

struct IdentificationAudit {
  std::array<CellCheck, 4> cells{};  // (0,0), (0,1), (1,0), (1,1)
  bool all_consistent = true;
  bool identified = false;
  std::string verdict;
  // Complier means solved from the four observable cells (identified only).
  std::optional<double> complier_g0;
  std::optional<double> complier_g1;
  bool complier_means_match = false;
};

IdentificationAudit identification_audit(const DiscreteIvWorld& world);

struct BinarySample {
  Vector z;
  Vector x;
  Vector y;
};

// Draws n units: z ~ Bernoulli(p_z1), t ~ shares, x from (t, z),
// y = E[g(x, u) | t] + N(0, noise_sd^2).
BinarySample sample_world(const DiscreteIvWorld& world, Eigen::Index n, std::mt19937_64& rng,
                          double noise_sd = 1.0);

// Random monotone world (no defiers) with P(co) >= min_complier.
DiscreteIvWorld random_monotone_world(std::mt19937_64& rng, double min_complier = 0.1);

}  // namespace tsiv::late
