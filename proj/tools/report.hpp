#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsiv/estimators.hpp"
#include "tsiv/late.hpp"
#include "tsiv/projection.hpp"
#include "tsiv/simulation.hpp"

namespace tsiv::cli {

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_file(const std::string& path);

// Command echo, input/output digests, seed, library version and timestamp.
// The timestamp honours SOURCE_DATE_EPOCH when set.
struct RunManifest {
  std::vector<std::string> command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;

  nlohmann::ordered_json to_json() const;
};

// Writes `<out_dir>/<name>.manifest.json` and returns its path.
std::string write_manifest(const RunManifest& m, const std::string& out_dir, const std::string& name);

nlohmann::ordered_json to_json(const TsivEstimate& e, const std::string& label);
// One line with the point estimate, its SE, CI and warnings.
std::string describe(const TsivEstimate& e, const std::string& label);

// Box's M test of equal instrument covariance matrices across samples.
struct BoxMTest {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool heterogeneous = false;
};
BoxMTest box_m_test(const Matrix& z_a, const Matrix& z_b, double alpha);

nlohmann::ordered_json to_json(const late::IdentificationAudit& a);
nlohmann::ordered_json to_json(const sim::EstimatorSummary& s);
nlohmann::ordered_json to_json(const sim::SimulationConfig& c);
// Reads keys named like the fields of SimulationConfig; absent keys keep `base`.
sim::SimulationConfig config_from_json(const nlohmann::json& j, sim::SimulationConfig base);
nlohmann::ordered_json to_json(const ProjectionComparison& p);

// Header and rows: design columns, then bias/SD/SE/coverage per estimator.
std::string simulation_csv_header();
std::string simulation_csv_row(const sim::SimulationReport& r);

}  // namespace tsiv::cli
