#include "tsiv/simulation.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "tsiv/error.hpp"
#include "tsiv/estimators.hpp"
#include "tsiv/rng.hpp"

namespace tsiv::sim {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidInput, what);
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct NoiseDraw {
  double v;
  double u;
};

// (v, u) with Var(v) = sigma_vv, Cov(u, v) = sigma_uv, SD(u) = sigma_uu.
class NoiseSampler {
 public:
  explicit NoiseSampler(const NoiseParams& p) {
    sd_v_ = std::sqrt(p.sigma_vv);
    load_ = p.sigma_vv > 0.0 ? p.sigma_uv / sd_v_ : 0.0;
    resid_ = std::sqrt(std::max(p.sigma_uu * p.sigma_uu - load_ * load_, 0.0));
  }

  NoiseDraw draw(std::mt19937_64& rng, std::normal_distribution<double>& normal) const {
    const double e1 = normal(rng);
    const double e2 = normal(rng);
    return {sd_v_ * e1, load_ * e1 + resid_ * e2};
  }

 private:
  double sd_v_ = 1.0;
  double load_ = 0.0;
  double resid_ = 1.0;
};

struct SampleDraw {
  Matrix z;
  Vector x;
  Vector y;
};

SampleDraw draw_sample(const SimulationConfig& c, Eigen::Index n, double rho, double mean_z,
                       const NoiseParams& noise, double beta, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const NoiseSampler ns(noise);
  const bool conspiracy = c.scenario == Scenario::Conspiracy;
  const Eigen::Index q = conspiracy ? 1 : c.q;
  SampleDraw s{Matrix(n, q), Vector(n), Vector(n)};

  Matrix chol;
  if (!conspiracy) chol = Eigen::LLT<Matrix>(ar1_correlation(q, rho)).matrixL();
  Vector e(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) e(j) = normal(rng);
    const NoiseDraw nd = ns.draw(rng, normal);
    double x = 0.0;
    if (conspiracy) {
      const double zi = mean_z + e(0);
      s.z(i, 0) = zi;
      x = zi * zi + zi + nd.v;
    } else {
      const Vector latent = chol * e;
      double sum = 0.0;
      double sum_sq = 0.0;
      for (Eigen::Index j = 0; j < q; ++j) {
        const double zij = (1.0 + latent(j)) >= 0.0 ? 1.0 : -1.0;
        s.z(i, j) = zij;
        sum += zij;
        sum_sq += zij * zij;
      }
      const double linear = 0.2 * sum + nd.v;
      switch (c.scenario) {
        case Scenario::Sim1Linear: x = linear; break;
        // sum over ordered pairs j != k of z_j z_k
        case Scenario::Sim2Interaction: x = linear + 0.02 * (sum * sum - sum_sq); break;
        case Scenario::Sim3Threshold: x = linear > 0.0 ? 1.0 : 0.0; break;
        case Scenario::Conspiracy: break;
      }
    }
    s.x(i) = x;
    s.y(i) = beta * x + nd.u;
  }
  return s;
}

EstimatorSummary summarize(const std::string& name, double beta,
                           const std::vector<ReplicationRecord>& recs, bool optimal) {
  CompensatedSum sum_b, sum_se, sum_hit;
  std::size_t r = 0;
  for (const auto& rec : recs) {
    if (!rec.ok) continue;
    const double b = optimal ? rec.beta_optimal : rec.beta_tstsls;
    const double se = optimal ? rec.se_optimal : rec.se_tstsls;
    sum_b.add(b);
    sum_se.add(se);
    sum_hit.add(std::abs(b - beta) <= kNormalQuantile975 * se ? 1.0 : 0.0);
    ++r;
  }
  EstimatorSummary s;
  s.name = name;
  const double n = static_cast<double>(r);
  s.mean_estimate = sum_b.value() / n;
  s.mean_se = sum_se.value() / n;
  s.coverage = sum_hit.value() / n;
  s.bias = s.mean_estimate - beta;
  CompensatedSum ss_b, ss_se;
  for (const auto& rec : recs) {
    if (!rec.ok) continue;
    const double b = optimal ? rec.beta_optimal : rec.beta_tstsls;
    const double se = optimal ? rec.se_optimal : rec.se_tstsls;
    ss_b.add((b - s.mean_estimate) * (b - s.mean_estimate));
    ss_se.add((se - s.mean_se) * (se - s.mean_se));
  }
  s.sd = std::sqrt(ss_b.value() / (n - 1.0));
  s.mc_se_bias = s.sd / std::sqrt(n);
  s.mc_se_sd = s.sd / std::sqrt(2.0 * (n - 1.0));
  s.mc_se_mean_se = std::sqrt(ss_se.value() / (n - 1.0)) / std::sqrt(n);
  s.mc_se_coverage = std::sqrt(s.coverage * (1.0 - s.coverage) / n);
  return s;
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Sim1Linear: return "sim1";
    case Scenario::Sim2Interaction: return "sim2";
    case Scenario::Sim3Threshold: return "sim3";
    case Scenario::Conspiracy: return "conspiracy";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(const std::string& s) {
  if (s == "sim1") return Scenario::Sim1Linear;
  if (s == "sim2") return Scenario::Sim2Interaction;
  if (s == "sim3") return Scenario::Sim3Threshold;
  if (s == "conspiracy") return Scenario::Conspiracy;
  return std::nullopt;
}

SimulationConfig SimulationConfig::defaults(Scenario s) {
  SimulationConfig c;
  c.scenario = s;
  if (s == Scenario::Sim3Threshold) {
    c.noise_a = {1.0, 0.5, 1.0};
    c.noise_b = {2.0, 0.5 * std::sqrt(2.0), 1.0};
  } else if (s == Scenario::Conspiracy) {
    c.q = 1;
    c.noise_a = {1.0, 0.0, 1.0};
    c.noise_b = {1.0, 0.0, 1.0};
  }
  return c;
}

void SimulationConfig::validate() const {
  require(std::isfinite(beta) && (!beta_a || std::isfinite(*beta_a)), "beta must be finite");
  require(std::abs(rho_a) < 1.0 && std::abs(rho_b) < 1.0, "rho must lie in (-1, 1)");
  require(q >= 1, "q must be positive");
  require(scenario != Scenario::Conspiracy || q == 1, "the conspiracy design has q = 1");
  require(n_a >= q + 2 && n_b >= q + 2, "sample sizes must be at least q + 2");
  require(replications >= 2, "replications must be at least 2");
  require(std::isfinite(mean_z_a) && std::isfinite(mean_z_b), "instrument means must be finite");
  noise_a.validate();
  noise_b.validate();
}

Matrix ar1_correlation(Eigen::Index q, double rho) {
  Matrix s(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index k = 0; k < q; ++k) {
      s(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
    }
  }
  return s;
}

GeneratedSample generate(const SimulationConfig& c, std::uint64_t replicate_index) {
  c.validate();
  auto rng_a = make_stream(c.seed, replicate_index, 0);
  auto rng_b = make_stream(c.seed, replicate_index, 1);
  SampleDraw a = draw_sample(c, c.n_a, c.rho_a, c.mean_z_a, c.noise_a, c.beta_a.value_or(c.beta),
                             rng_a);
  SampleDraw b = draw_sample(c, c.n_b, c.rho_b, c.mean_z_b, c.noise_b, c.beta, rng_b);
  return {TwoSampleData(std::move(a.z), std::move(a.x), std::move(b.z), b.y), std::move(b.x),
          std::move(a.y)};
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TSIV_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SimulationReport run_study(const SimulationConfig& config, bool keep_replications) {
  config.validate();
  const std::size_t reps = static_cast<std::size_t>(config.replications);
  std::vector<ReplicationRecord> recs(reps);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      ReplicationRecord rec;
      try {
        const GeneratedSample g = generate(config, r);
        const SampleMoments m = compute_moments(g.data, true);
        const TsivEstimate t = estimate(m, WeightSpec::tstsls());
        const TsivEstimate o = estimate(m, WeightSpec::optimal());
        rec = {std::isfinite(t.beta_hat) && std::isfinite(o.beta_hat), t.beta_hat, t.se_sandwich,
               o.beta_hat, o.se_sandwich};
      } catch (const Error&) {
        rec.ok = false;
      }
      recs[r] = rec;
    }
  };
  const unsigned n_threads =
      std::min<unsigned>(resolve_threads(config.threads), static_cast<unsigned>(reps));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SimulationReport report;
  report.config = config;
  for (const auto& rec : recs) report.failures += rec.ok ? 0 : 1;
  report.failure_rate = static_cast<double>(report.failures) / static_cast<double>(reps);
  if (report.failure_rate > kMaxFailureRate || reps - report.failures < 2) {
    throw Error(ErrorCode::SimulationAborted,
                std::to_string(report.failures) + " of " + std::to_string(reps) +
                    " replications failed");
  }
  report.tstsls = summarize("TSTSLS", config.beta, recs, false);
  report.optimal = summarize("Optimal TSIV", config.beta, recs, true);
  if (keep_replications) report.replications = std::move(recs);
  return report;
}

HeterogeneousEstimandReport heterogeneous_estimand_demo(const SimulationConfig& config) {
  HeterogeneousEstimandReport out;
  out.beta_b = config.beta;
  out.beta_a = config.beta_a.value_or(config.beta);
  out.study = run_study(config);
  out.mean_estimate = out.study.tstsls.mean_estimate;
  out.mc_se = out.study.tstsls.mc_se_bias;
  out.z_beta_b = (out.mean_estimate - out.beta_b) / out.mc_se;
  out.z_beta_a = (out.mean_estimate - out.beta_a) / out.mc_se;
  out.concentrates_on_beta_b = std::abs(out.z_beta_b) <= 3.0;
  return out;
}

std::vector<SimulationConfig> table_grid(int table, int replications, std::uint64_t seed) {
  std::vector<SimulationConfig> grid;
  auto push = [&](Scenario s, double beta, double rho_b, Eigen::Index n_a, Eigen::Index n_b) {
    SimulationConfig c = SimulationConfig::defaults(s);
    c.beta = beta;
    c.rho_a = 0.5;
    c.rho_b = rho_b;
    c.n_a = n_a;
    c.n_b = n_b;
    c.replications = replications;
    c.seed = seed;
    grid.push_back(c);
  };
  const std::vector<Eigen::Index> small = {1000, 5000};
  switch (table) {
    case 1:
    case 2: {
      const Scenario s = table == 1 ? Scenario::Sim1Linear : Scenario::Sim2Interaction;
      const std::vector<double> betas = table == 1 ? std::vector<double>{1.0, 10.0}
                                                   : std::vector<double>{1.0};
      for (double beta : betas)
        for (double rho_b : {0.5, 0.0, -0.5})
          for (auto n_a : small)
            for (auto n_b : small) push(s, beta, rho_b, n_a, n_b);
      break;
    }
    case 3:
      for (Eigen::Index n_a : {1000, 5000, 20000})
        for (Eigen::Index n_b : {1000, 5000, 20000})
          push(Scenario::Sim3Threshold, 1.0, 0.5, n_a, n_b);
      break;
    default:
      throw Error(ErrorCode::InvalidInput, "table must be 1, 2 or 3");
  }
  return grid;
}

}  // namespace tsiv::sim
