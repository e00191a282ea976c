#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsiv/core_model.hpp"

namespace tsiv::sim {

enum class Scenario { Sim1Linear, Sim2Interaction, Sim3Threshold, Conspiracy };

const char* to_string(Scenario s);
// Accepts "sim1", "sim2", "sim3", "conspiracy".
std::optional<Scenario> parse_scenario(const std::string& s);

struct SimulationConfig {
  Scenario scenario = Scenario::Sim1Linear;
  double beta = 1.0;               // outcome equation of sample b
  std::optional<double> beta_a;    // outcome equation of (hidden) y_a; defaults to beta
  double rho_a = 0.5;
  double rho_b = 0.5;
  Eigen::Index n_a = 1000;
  Eigen::Index n_b = 1000;
  Eigen::Index q = 10;
  NoiseParams noise_a;
  NoiseParams noise_b;
  double mean_z_a = -1.0;  // Conspiracy only: z^s ~ N(mean, 1)
  double mean_z_b = 1.0;
  int replications = 2000;
  std::uint64_t seed = 1;
  // Worker threads; 0 reads TSIV_THREADS, falling back to the core count.
  unsigned threads = 0;

  // Default noise for the scenario (Sim3 uses unequal Var(v) across samples).
  static SimulationConfig defaults(Scenario s);
  // Throws Error(InvalidInput).
  void validate() const;
};

// AR(1) correlation matrix Sigma_jk = rho^|j-k|.
Matrix ar1_correlation(Eigen::Index q, double rho);

struct GeneratedSample {
  TwoSampleData data;
  Vector x_b;  // hidden: oracle checks only
  Vector y_a;  // hidden
};

// Deterministic in (config.seed, replicate_index).
GeneratedSample generate(const SimulationConfig& config, std::uint64_t replicate_index);

struct EstimatorSummary {
  std::string name;
  double bias = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  double mean_estimate = 0.0;
  double mc_se_bias = 0.0;
  double mc_se_sd = 0.0;
  double mc_se_mean_se = 0.0;
  double mc_se_coverage = 0.0;
};

struct ReplicationRecord {
  bool ok = false;
  double beta_tstsls = 0.0;
  double se_tstsls = 0.0;
  double beta_optimal = 0.0;
  double se_optimal = 0.0;
};

struct SimulationReport {
  SimulationConfig config;
  EstimatorSummary tstsls;
  EstimatorSummary optimal;
  int failures = 0;
  double failure_rate = 0.0;
  std::vector<ReplicationRecord> replications;  // filled when requested
};

inline constexpr double kMaxFailureRate = 0.01;

unsigned resolve_threads(unsigned requested);

// Centers each replicate, fits TSTSLS and two-step optimal TSIV with sandwich
// SEs and aggregates bias / SD / mean SE / coverage against config.beta.
// Failed replicates are excluded; throws SimulationAborted above 1% failures.
SimulationReport run_study(const SimulationConfig& config, bool keep_replications = false);

struct HeterogeneousEstimandReport {
  double beta_a = 0.0;
  double beta_b = 0.0;
  SimulationReport study;
  double mean_estimate = 0.0;
  double mc_se = 0.0;
  double z_beta_b = 0.0;  // (mean - beta_b) / mc_se
  double z_beta_a = 0.0;
  bool concentrates_on_beta_b = false;  // |z_beta_b| <= 3
};

// Sim1 with distinct outcome equations per sample; the estimators only see
// sample b's outcome, so they should centre on beta (sample b).
HeterogeneousEstimandReport heterogeneous_estimand_demo(const SimulationConfig& config);

// Built-in scenario grids: 1 is Sim1 over beta in {1, 10}, rho_b and both
// sample sizes; 2 is Sim2 at beta = 1; 3 is Sim3 over n_a and n_b.
std::vector<SimulationConfig> table_grid(int table, int replications, std::uint64_t seed);

}  // namespace tsiv::sim
