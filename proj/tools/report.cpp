#include "report.hpp"

#include <openssl/evp.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>

#include "csv.hpp"
#include "tsiv/error.hpp"

namespace tsiv::cli {

using nlohmann::ordered_json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = std::strtoll(epoch, nullptr, 10);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json digests(const std::vector<std::string>& paths) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  return arr;
}

double log_det(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Matrix covariance(const Matrix& z) {
  const Matrix c = z.rowwise() - z.colwise().mean();
  return c.transpose() * c / static_cast<double>(z.rows() - 1);
}

}  // namespace

ordered_json RunManifest::to_json() const {
  ordered_json j;
  j["command"] = command;
  j["inputs"] = digests(inputs);
  j["outputs"] = digests(outputs);
  j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
  j["version"] = kVersion;
  j["timestamp"] = utc_timestamp();
  return j;
}

std::string write_manifest(const RunManifest& m, const std::string& out_dir, const std::string& name) {
  const std::string path = out_dir + "/" + name + ".manifest.json";
  write_text(path, m.to_json().dump(2) + "\n");
  return path;
}

ordered_json to_json(const TsivEstimate& e, const std::string& label) {
  ordered_json j;
  j["estimator"] = label;
  j["weight"] = to_string(e.weight_kind);
  j["beta_hat"] = e.beta_hat;
  j["se_sandwich"] = e.se_sandwich;
  j["se_efficient"] = e.se_efficient ? ordered_json(*e.se_efficient) : ordered_json(nullptr);
  j["se_naive"] = e.se_naive ? ordered_json(*e.se_naive) : ordered_json(nullptr);
  j["ci_95"] = {e.ci_95.lower, e.ci_95.upper};
  j["first_stage_f"] = e.first_stage_f;
  j["weak_instrument"] = e.weak_instrument;
  j["conservative"] = e.conservative;
  j["warnings"] = e.warnings;
  return j;
}

std::string describe(const TsivEstimate& e, const std::string& label) {
  std::string s = label + ": beta=" + format_double(e.beta_hat) +
                  " se=" + format_double(e.se_sandwich) + " ci95=[" +
                  format_double(e.ci_95.lower) + ", " + format_double(e.ci_95.upper) + "]";
  if (e.se_naive) s += " se_naive=" + format_double(*e.se_naive);
  if (e.se_efficient) s += " se_efficient=" + format_double(*e.se_efficient);
  s += " F=" + format_double(e.first_stage_f);
  s += " warnings=";
  if (e.warnings.empty()) s += "none";
  for (std::size_t i = 0; i < e.warnings.size(); ++i) s += (i ? "; " : "") + e.warnings[i];
  return s;
}

BoxMTest box_m_test(const Matrix& z_a, const Matrix& z_b, double alpha) {
  const double p = static_cast<double>(z_a.cols());
  const double na = static_cast<double>(z_a.rows()), nb = static_cast<double>(z_b.rows());
  const Matrix sa = covariance(z_a), sb = covariance(z_b);
  const Matrix pooled = ((na - 1) * sa + (nb - 1) * sb) / (na + nb - 2);
  BoxMTest t;
  const double m = (na + nb - 2) * log_det(pooled) - (na - 1) * log_det(sa) - (nb - 1) * log_det(sb);
  const double c = (2 * p * p + 3 * p - 1) / (6 * (p + 1)) *
                   (1 / (na - 1) + 1 / (nb - 1) - 1 / (na + nb - 2));
  t.statistic = m * (1 - c);
  t.df = p * (p + 1) / 2;
  if (!std::isfinite(t.statistic)) return t;
  boost::math::chi_squared dist(t.df);
  t.p_value = boost::math::cdf(boost::math::complement(dist, std::max(t.statistic, 0.0)));
  t.heterogeneous = t.p_value < alpha;
  return t;
}

ordered_json to_json(const late::IdentificationAudit& a) {
  ordered_json j;
  j["identified"] = a.identified;
  j["verdict"] = a.verdict;
  j["all_consistent"] = a.all_consistent;
  ordered_json cells = ordered_json::array();
  for (const auto& c : a.cells) {
    cells.push_back({{"x", c.x},
                     {"z", c.z},
                     {"probability", c.probability},
                     {"observed_mean", c.observed_mean ? ordered_json(*c.observed_mean) : ordered_json(nullptr)},
                     {"decomposition_mean",
                      c.decomposition_mean ? ordered_json(*c.decomposition_mean) : ordered_json(nullptr)},
                     {"consistent", c.consistent}});
  }
  j["cells"] = cells;
  j["complier_g0"] = a.complier_g0 ? ordered_json(*a.complier_g0) : ordered_json(nullptr);
  j["complier_g1"] = a.complier_g1 ? ordered_json(*a.complier_g1) : ordered_json(nullptr);
  j["complier_means_match"] = a.complier_means_match;
  return j;
}

ordered_json to_json(const sim::EstimatorSummary& s) {
  return {{"name", s.name},
          {"bias", s.bias},
          {"sd", s.sd},
          {"mean_se", s.mean_se},
          {"coverage", s.coverage},
          {"mean_estimate", s.mean_estimate},
          {"mc_se_bias", s.mc_se_bias},
          {"mc_se_sd", s.mc_se_sd},
          {"mc_se_mean_se", s.mc_se_mean_se},
          {"mc_se_coverage", s.mc_se_coverage}};
}

namespace {

ordered_json noise_json(const NoiseParams& n) {
  return {{"sigma_vv", n.sigma_vv}, {"sigma_uv", n.sigma_uv}, {"sigma_uu", n.sigma_uu}};
}

NoiseParams noise_from(const nlohmann::json& j, NoiseParams n) {
  n.sigma_vv = j.value("sigma_vv", n.sigma_vv);
  n.sigma_uv = j.value("sigma_uv", n.sigma_uv);
  n.sigma_uu = j.value("sigma_uu", n.sigma_uu);
  return n;
}

}  // namespace

ordered_json to_json(const sim::SimulationConfig& c) {
  ordered_json j;
  j["scenario"] = sim::to_string(c.scenario);
  j["beta"] = c.beta;
  j["beta_a"] = c.beta_a ? ordered_json(*c.beta_a) : ordered_json(nullptr);
  j["rho_a"] = c.rho_a;
  j["rho_b"] = c.rho_b;
  j["n_a"] = c.n_a;
  j["n_b"] = c.n_b;
  j["q"] = c.q;
  j["noise_a"] = noise_json(c.noise_a);
  j["noise_b"] = noise_json(c.noise_b);
  j["mean_z_a"] = c.mean_z_a;
  j["mean_z_b"] = c.mean_z_b;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  return j;
}

sim::SimulationConfig config_from_json(const nlohmann::json& j, sim::SimulationConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "simulation config must be a JSON object");
  static const std::vector<std::string> known = {
      "scenario", "beta",     "beta_a",   "rho_a",        "rho_b", "n_a", "n_b", "q",
      "noise_a",  "noise_b",  "mean_z_a", "mean_z_b",     "replications", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::InvalidInput, "unknown simulation config key '" + key + "'");
  }
  try {
    if (j.contains("scenario")) {
      const auto s = sim::parse_scenario(j["scenario"].get<std::string>());
      if (!s) throw Error(ErrorCode::InvalidInput, "unknown scenario in config");
      const auto fresh = sim::SimulationConfig::defaults(*s);
      c.scenario = *s;
      c.noise_a = fresh.noise_a;
      c.noise_b = fresh.noise_b;
    }
    c.beta = j.value("beta", c.beta);
    if (j.contains("beta_a") && !j["beta_a"].is_null()) c.beta_a = j["beta_a"].get<double>();
    c.rho_a = j.value("rho_a", c.rho_a);
    c.rho_b = j.value("rho_b", c.rho_b);
    c.n_a = j.value("n_a", c.n_a);
    c.n_b = j.value("n_b", c.n_b);
    c.q = j.value("q", c.q);
    if (j.contains("noise_a")) c.noise_a = noise_from(j["noise_a"], c.noise_a);
    if (j.contains("noise_b")) c.noise_b = noise_from(j["noise_b"], c.noise_b);
    c.mean_z_a = j.value("mean_z_a", c.mean_z_a);
    c.mean_z_b = j.value("mean_z_b", c.mean_z_b);
    c.replications = j.value("replications", c.replications);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("simulation config: ") + e.what());
  }
  return c;
}

ordered_json to_json(const ProjectionComparison& p) {
  return {{"gamma_a", std::vector<double>(p.gamma_a.data(), p.gamma_a.data() + p.gamma_a.size())},
          {"gamma_b", std::vector<double>(p.gamma_b.data(), p.gamma_b.data() + p.gamma_b.size())},
          {"divergence", p.divergence},
          {"sign_flip", p.sign_flip}};
}

std::string simulation_csv_header() {
  return "beta,rho_a,rho_b,n_a,n_b,tstsls_bias,tstsls_sd,tstsls_se,tstsls_cover,"
         "optimal_bias,optimal_sd,optimal_se,optimal_cover,scenario,replications,failures\n";
}

std::string simulation_csv_row(const sim::SimulationReport& r) {
  const auto& c = r.config;
  std::string s;
  auto add = [&](const std::string& v) { s += (s.empty() ? "" : ",") + v; };
  add(format_double(c.beta));
  add(format_double(c.rho_a));
  add(format_double(c.rho_b));
  add(std::to_string(c.n_a));
  add(std::to_string(c.n_b));
  for (const auto* e : {&r.tstsls, &r.optimal}) {
    add(format_double(e->bias));
    add(format_double(e->sd));
    add(format_double(e->mean_se));
    add(format_double(e->coverage));
  }
  add(sim::to_string(c.scenario));
  add(std::to_string(c.replications));
  add(std::to_string(r.failures));
  return s + "\n";
}

}  // namespace tsiv::cli
