#include "tsiv/late.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "tsiv/error.hpp"

namespace tsiv::late {

namespace {

constexpr double kTableTol = 1e-9;
constexpr double kRouteTol = 1e-12;

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

double mean_g(const ClassCell& cell, int x) { return x == 1 ? cell.mean_g1 : cell.mean_g0; }

void require_compliers(const DiscreteIvWorld& w, const char* which) {
  if (!(w.share(Class::Complier) > 0.0)) {
    throw Error(ErrorCode::NoCompliers, std::string(which) + " has no compliers");
  }
}

void require_monotone(const DiscreteIvWorld& w, const char* which) {
  if (w.share(Class::Defier) > 0.0) {
    throw Error(ErrorCode::MonotonicityViolated,
                std::string(which) + " has defiers (P(de) = " +
                    std::to_string(w.share(Class::Defier)) + ")");
  }
}

}  // namespace

const char* to_string(Class c) {
  switch (c) {
    case Class::AlwaysTaker: return "at";
    case Class::Complier: return "co";
    case Class::NeverTaker: return "nt";
    case Class::Defier: return "de";
  }
  return "?";
}

std::optional<Class> parse_class(const std::string& s) {
  static const std::map<std::string, Class> names = {
      {"at", Class::AlwaysTaker}, {"always_taker", Class::AlwaysTaker},
      {"co", Class::Complier},    {"complier", Class::Complier},
      {"nt", Class::NeverTaker},  {"never_taker", Class::NeverTaker},
      {"de", Class::Defier},      {"defier", Class::Defier}};
  const auto it = names.find(s);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

int exposure(Class c, int z) {
  switch (c) {
    case Class::AlwaysTaker: return 1;
    case Class::Complier: return z;
    case Class::NeverTaker: return 0;
    case Class::Defier: return 1 - z;
  }
  return 0;
}

void DiscreteIvWorld::validate() const {
  double total = 0.0;
  for (const auto& c : cells) {
    if (!(c.share >= 0.0 && c.share <= 1.0) || !std::isfinite(c.mean_g0) ||
        !std::isfinite(c.mean_g1)) {
      throw Error(ErrorCode::InvalidInput, "class shares must lie in [0,1] with finite means");
    }
    total += c.share;
  }
  if (std::abs(total - 1.0) > kTableTol) {
    throw Error(ErrorCode::InvalidInput,
                "class shares sum to " + std::to_string(total) + ", expected 1");
  }
  if (!(p_z1 > 0.0 && p_z1 < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "P(z = 1) must lie strictly between 0 and 1");
  }
}

double DiscreteIvWorld::joint(int z, Class c) const {
  return (z == 1 ? p_z1 : 1.0 - p_z1) * share(c);
}

double DiscreteIvWorld::mean_outcome_given_z(int z) const {
  double num = 0.0;
  double den = 0.0;
  for (Class c : kClasses) {
    num += joint(z, c) * mean_g(cell(c), exposure(c, z));
    den += joint(z, c);
  }
  return num / den;
}

double DiscreteIvWorld::mean_exposure_given_z(int z) const {
  double num = 0.0;
  double den = 0.0;
  for (Class c : kClasses) {
    num += joint(z, c) * exposure(c, z);
    den += joint(z, c);
  }
  return num / den;
}

DiscreteIvWorld world_from_rows(const std::vector<WorldRow>& rows) {
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "world table is empty");
  std::array<std::array<double, 4>, 2> p{};
  std::array<std::array<std::optional<std::pair<double, double>>, 4>, 2> means{};
  for (const auto& r : rows) {
    if ((r.z != 0 && r.z != 1) || !(r.p >= 0.0)) {
      throw Error(ErrorCode::InvalidInput, "world rows need z in {0,1} and p >= 0");
    }
    const int k = static_cast<int>(r.cls);
    if (means[r.z][k]) {
      throw Error(ErrorCode::InvalidInput, std::string("duplicate row for z = ") +
                                               std::to_string(r.z) + ", class " +
                                               to_string(r.cls));
    }
    p[r.z][k] = r.p;
    means[r.z][k] = std::make_pair(r.mean_g0, r.mean_g1);
  }

  DiscreteIvWorld w;
  double pz1 = 0.0;
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    pz1 += p[1][k];
    total += p[0][k] + p[1][k];
  }
  if (std::abs(total - 1.0) > kTableTol) {
    throw Error(ErrorCode::InvalidInput,
                "world probabilities sum to " + std::to_string(total) + ", expected 1");
  }
  w.p_z1 = pz1;
  for (int k = 0; k < 4; ++k) {
    ClassCell& cell = w.cells[k];
    cell.share = p[0][k] + p[1][k];
    for (int z = 0; z < 2; ++z) {
      const double expected = (z == 1 ? pz1 : 1.0 - pz1) * cell.share;
      if (std::abs(p[z][k] - expected) > kTableTol) {
        throw Error(ErrorCode::InvalidInput,
                    "instrument is not independent of the class in the world table");
      }
    }
    const auto& m0 = means[0][k];
    const auto& m1 = means[1][k];
    if (m0 && m1 &&
        (!close(m0->first, m1->first, kTableTol) || !close(m0->second, m1->second, kTableTol))) {
      throw Error(ErrorCode::InvalidInput,
                  "potential outcome means depend on z for class " +
                      std::string(to_string(static_cast<Class>(k))));
    }
    const auto& m = m1 ? m1 : m0;
    if (m) {
      cell.mean_g0 = m->first;
      cell.mean_g1 = m->second;
    }
  }
  w.validate();
  return w;
}

std::vector<WorldRow> rows_from_world(const DiscreteIvWorld& world, const std::string& sample) {
  std::vector<WorldRow> rows;
  for (int z = 0; z < 2; ++z) {
    for (Class c : kClasses) {
      const ClassCell& cell = world.cell(c);
      rows.push_back({sample, z, c, world.joint(z, c), cell.mean_g0, cell.mean_g1});
    }
  }
  return rows;
}

NormalizedWorld normalize_direction(const DiscreteIvWorld& world) {
  if (!(world.share(Class::Complier) == 0.0 && world.share(Class::Defier) > 0.0)) {
    return {world, false};
  }
  // Exposure 1 - x swaps always/never takers and compliers/defiers, and the
  // potential outcomes trade places.
  auto flip = [](const ClassCell& c) { return ClassCell{c.share, c.mean_g1, c.mean_g0}; };
  DiscreteIvWorld out = world;
  out.cell(Class::AlwaysTaker) = flip(world.cell(Class::NeverTaker));
  out.cell(Class::NeverTaker) = flip(world.cell(Class::AlwaysTaker));
  out.cell(Class::Complier) = flip(world.cell(Class::Defier));
  out.cell(Class::Defier) = flip(world.cell(Class::Complier));
  return {out, true};
}

OneSampleLate late_one_sample(const DiscreteIvWorld& world, bool require_monotone_flag) {
  world.validate();
  require_compliers(world, "world");
  if (require_monotone_flag) require_monotone(world, "world");

  const double num = world.mean_outcome_given_z(1) - world.mean_outcome_given_z(0);
  const double den = world.mean_exposure_given_z(1) - world.mean_exposure_given_z(0);
  if (den == 0.0) {
    throw Error(ErrorCode::NoCompliers, "compliers and defiers cancel; first stage is zero");
  }
  OneSampleLate out;
  out.wald = num / den;
  if (world.share(Class::Defier) == 0.0) {
    const ClassCell& co = world.cell(Class::Complier);
    out.complier_effect = co.mean_g1 - co.mean_g0;
    if (!close(out.wald, *out.complier_effect, kRouteTol)) {
      throw std::logic_error("Wald ratio and complier effect disagree");
    }
  }
  return out;
}

TwoSampleLate late_two_sample(const DiscreteIvWorld& world_a, const DiscreteIvWorld& world_b) {
  world_a.validate();
  world_b.validate();
  require_compliers(world_a, "world a");
  require_compliers(world_b, "world b");
  require_monotone(world_a, "world a");
  require_monotone(world_b, "world b");

  TwoSampleLate out;
  const double num = world_b.mean_outcome_given_z(1) - world_b.mean_outcome_given_z(0);
  const double den = world_a.mean_exposure_given_z(1) - world_a.mean_exposure_given_z(0);
  out.estimand = num / den;
  out.scaling = world_b.share(Class::Complier) / world_a.share(Class::Complier);
  out.late_b = *late_one_sample(world_b).complier_effect;
  if (!close(out.estimand, out.late_b * out.scaling, kRouteTol)) {
    throw std::logic_error("cross-sample Wald ratio disagrees with scaled LATE");
  }
  return out;
}

IdentificationAudit identification_audit(const DiscreteIvWorld& world) {
  world.validate();
  using C = Class;
  // Classes contributing to each observable (x, z) cell.
  const std::array<std::array<C, 2>, 4> members = {{
      {C::NeverTaker, C::Complier},    // x=0, z=0
      {C::NeverTaker, C::Defier},      // x=0, z=1
      {C::AlwaysTaker, C::Defier},     // x=1, z=0
      {C::AlwaysTaker, C::Complier},   // x=1, z=1
  }};
  const std::array<std::pair<int, int>, 4> xz = {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

  IdentificationAudit audit;
  for (int i = 0; i < 4; ++i) {
    const auto [x, z] = xz[i];
    CellCheck& cc = audit.cells[i];
    cc.x = x;
    cc.z = z;
    double mass = 0.0;
    double weighted = 0.0;
    for (C c : kClasses) {
      if (exposure(c, z) != x) continue;
      mass += world.joint(z, c);
      weighted += world.joint(z, c) * mean_g(world.cell(c), x);
    }
    cc.probability = mass;
    double dmass = 0.0;
    double dweighted = 0.0;
    for (C c : members[i]) {
      dmass += world.share(c);
      dweighted += world.share(c) * mean_g(world.cell(c), x);
    }
    if (mass > 0.0) cc.observed_mean = weighted / mass;
    if (dmass > 0.0) cc.decomposition_mean = dweighted / dmass;
    cc.consistent = cc.observed_mean.has_value() == cc.decomposition_mean.has_value() &&
                    (!cc.observed_mean || close(*cc.observed_mean, *cc.decomposition_mean, kRouteTol));
    audit.all_consistent = audit.all_consistent && cc.consistent;
  }

  const double p_co = world.share(C::Complier);
  const double p_de = world.share(C::Defier);
  if (p_de > 0.0) {
    audit.verdict = "not identified: defiers present, six class means but four equations";
    return audit;
  }
  if (!(p_co > 0.0)) {
    audit.verdict = "not identified: no compliers";
    return audit;
  }
  audit.identified = true;
  audit.verdict = "identified";
  const double p_at = world.share(C::AlwaysTaker);
  const double p_nt = world.share(C::NeverTaker);
  const double m1_at = p_at > 0.0 ? *audit.cells[2].observed_mean : 0.0;
  const double m0_nt = p_nt > 0.0 ? *audit.cells[1].observed_mean : 0.0;
  audit.complier_g0 = (*audit.cells[0].observed_mean * (p_nt + p_co) - p_nt * m0_nt) / p_co;
  audit.complier_g1 = (*audit.cells[3].observed_mean * (p_at + p_co) - p_at * m1_at) / p_co;
  const ClassCell& co = world.cell(C::Complier);
  audit.complier_means_match =
      close(*audit.complier_g0, co.mean_g0, 1e-10) && close(*audit.complier_g1, co.mean_g1, 1e-10);
  return audit;
}

BinarySample sample_world(const DiscreteIvWorld& world, Eigen::Index n, std::mt19937_64& rng,
                          double noise_sd) {
  world.validate();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sd);
  BinarySample s{Vector(n), Vector(n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int z = unif(rng) < world.p_z1 ? 1 : 0;
    const double draw = unif(rng);
    double cum = 0.0;
    Class cls = Class::Defier;
    for (Class c : kClasses) {
      cum += world.share(c);
      if (draw < cum) {
        cls = c;
        break;
      }
    }
    // Round-off in the cumulative sum: fall back to the last class with mass.
    if (draw >= cum) {
      for (Class c : kClasses) {
        if (world.share(c) > 0.0) cls = c;
      }
    }
    const int x = exposure(cls, z);
    s.z(i) = z;
    s.x(i) = x;
    s.y(i) = mean_g(world.cell(cls), x) + noise(rng);
  }
  return s;
}

DiscreteIvWorld random_monotone_world(std::mt19937_64& rng, double min_complier) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> means(-2.0, 2.0);
  DiscreteIvWorld w;
  w.p_z1 = 0.2 + 0.6 * unif(rng);
  const double p_co = min_complier + (0.9 - min_complier) * unif(rng);
  const double split = unif(rng);
  w.cell(Class::Complier).share = p_co;
  w.cell(Class::AlwaysTaker).share = (1.0 - p_co) * split;
  w.cell(Class::NeverTaker).share = (1.0 - p_co) - w.cell(Class::AlwaysTaker).share;
  w.cell(Class::Defier).share = 0.0;
  for (auto& c : w.cells) {
    c.mean_g0 = means(rng);
    c.mean_g1 = means(rng);
  }
  return w;
}

}  // namespace tsiv::late
