#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "csv.hpp"
#include "report.hpp"
#include "tsiv/error.hpp"
#include "tsiv/summary_data.hpp"

namespace tsiv::cli {

using nlohmann::ordered_json;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput:
    case ErrorCode::NonPositiveDefiniteWeight:
    case ErrorCode::UnsupportedDimension:
      return kSchema;
    case ErrorCode::DegenerateMoments:
    case ErrorCode::OmegaSingular:
    case ErrorCode::NoCompliers:
    case ErrorCode::NoMatches:
      return kDegenerate;
    case ErrorCode::LdNotPsd:
      return kLdNotPsd;
    case ErrorCode::MonotonicityViolated:
      return kMonotonicity;
    case ErrorCode::SimulationAborted:
      return kFailure;
  }
  return kFailure;
}

[[noreturn]] void schema_error(const std::string& msg) { throw Error(ErrorCode::InvalidInput, msg); }

struct Common {
  std::string out_dir = ".";
  std::vector<std::string> echo;

  std::string path(const std::string& name) const { return out_dir + "/" + name; }
  void prepare() const { std::filesystem::create_directories(out_dir); }
};

// Individual-level file: instrument columns followed by one named outcome column.
struct IndividualFile {
  std::vector<std::string> instruments;
  Matrix z;
  Vector v;
};

IndividualFile read_individual(const std::string& path, const std::string& last) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2) schema_error(path + ": need at least one instrument column and '" + last + "'");
  if (t.header.back() != last) {
    schema_error(path + ": last column must be '" + last + "', found '" + t.header.back() + "'");
  }
  IndividualFile f;
  f.instruments.assign(t.header.begin(), t.header.end() - 1);
  f.z = t.numeric_columns(0, f.instruments.size());
  f.v = t.numeric_column(t.header.size() - 1);
  return f;
}

void require_same_instruments(const IndividualFile& a, const IndividualFile& b,
                              const std::string& pa, const std::string& pb) {
  if (a.instruments.size() != b.instruments.size()) {
    schema_error("instrument count differs: " + pa + " has q=" + std::to_string(a.instruments.size()) +
                 ", " + pb + " has q=" + std::to_string(b.instruments.size()));
  }
  for (std::size_t j = 0; j < a.instruments.size(); ++j) {
    if (a.instruments[j] != b.instruments[j]) {
      schema_error("instrument column " + std::to_string(j + 1) + " is '" + a.instruments[j] + "' in " +
                   pa + " but '" + b.instruments[j] + "' in " + pb);
    }
  }
}

WeightSpec parse_weight(const std::string& spec, Eigen::Index q) {
  if (spec == "tstsls") return WeightSpec::tstsls();
  if (spec == "optimal") return WeightSpec::optimal();
  if (spec == "identity") return WeightSpec::identity();
  const std::string prefix = "custom=";
  if (spec.rfind(prefix, 0) == 0) {
    const CsvTable t = read_csv(spec.substr(prefix.size()));
    if (static_cast<Eigen::Index>(t.header.size()) != q || static_cast<Eigen::Index>(t.rows.size()) != q) {
      schema_error(t.path + ": custom weight must be " + std::to_string(q) + "x" + std::to_string(q) +
                   " with a header row");
    }
    return WeightSpec::custom_matrix(t.numeric_columns(0, static_cast<std::size_t>(q)));
  }
  schema_error("unknown --weight '" + spec + "' (tstsls|optimal|identity|custom=FILE)");
}

std::string weight_label(const WeightSpec& w) { return to_string(w.kind); }

void emit_estimate(std::ostream& out, ordered_json& list, const TsivEstimate& e, const std::string& label) {
  list.push_back(to_json(e, label));
  out << describe(e, label) << "\n";
}

ordered_json tscov_json(const SampleMoments& m, std::ostream& out) {
  const double t = tscov_estimate(m);
  const double se = tscov_standard_error(m);
  out << "tscov: beta=" << format_double(t) << " se=" << format_double(se)
      << " warnings=" << kTscovWarning << "\n";
  return {{"estimator", "tscov"},
          {"beta_hat", t},
          {"se", se},
          {"ci_95", {t - kNormalQuantile975 * se, t + kNormalQuantile975 * se}},
          {"warnings", {kTscovWarning}}};
}

void finish_run(const Common& c, const std::string& name, std::vector<std::string> inputs,
                std::vector<std::string> outputs, std::optional<std::uint64_t> seed, std::ostream& out) {
  RunManifest m{c.echo, std::move(inputs), std::move(outputs), seed};
  out << "manifest: " << write_manifest(m, c.out_dir, name) << "\n";
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string sample_a, sample_b;
  std::string weight = "tstsls";
  bool no_center = false;
  double alpha = 0.01;
};

int cmd_estimate(const EstimateArgs& a, const Common& c, std::ostream& out) {
  const IndividualFile fa = read_individual(a.sample_a, "x");
  const IndividualFile fb = read_individual(a.sample_b, "y");
  require_same_instruments(fa, fb, a.sample_a, a.sample_b);
  const TwoSampleData data(fa.z, fa.v, fb.z, fb.v);
  const SampleMoments m = compute_moments(data, !a.no_center);
  const WeightSpec selected = parse_weight(a.weight, data.q());

  ordered_json report;
  report["q"] = data.q();
  report["n_a"] = data.n_a();
  report["n_b"] = data.n_b();
  report["centered"] = m.centered;
  report["instruments"] = fa.instruments;
  ordered_json list = ordered_json::array();
  emit_estimate(out, list, estimate(m, WeightSpec::tstsls()), "tstsls");
  emit_estimate(out, list, estimate(m, WeightSpec::optimal()), "optimal");
  if (selected.kind == WeightSpec::Kind::Identity || selected.kind == WeightSpec::Kind::Custom) {
    emit_estimate(out, list, estimate(m, selected), weight_label(selected));
  }
  if (data.q() == 1) emit_estimate(out, list, wald_ratio(m), "wald");
  report["selected_weight"] = weight_label(selected);
  report["estimates"] = list;
  if (data.q() == 1) report["tscov"] = tscov_json(m, out);

  const BoxMTest box = box_m_test(data.z_a(), data.z_b(), a.alpha);
  ordered_json het = {{"test", "box_m"},
                      {"statistic", box.statistic},
                      {"df", box.df},
                      {"p_value", box.p_value},
                      {"alpha", a.alpha},
                      {"heterogeneous", box.heterogeneous}};
  if (box.heterogeneous) {
    het["note"] = "instrument covariance differs between samples; estimators remain valid";
    out << "note: instrument covariance differs between samples (Box's M p="
        << format_double(box.p_value) << ")\n";
  }
  report["heterogeneity"] = het;

  c.prepare();
  const std::string path = c.path("estimate.json");
  write_text(path, report.dump(2) + "\n");
  finish_run(c, "estimate", {a.sample_a, a.sample_b}, {path}, std::nullopt, out);
  return kOk;
}

// ---------------------------------------------------------------- summarize

int cmd_summarize(const std::string& pa, const std::string& pb, const Common& c, std::ostream& out) {
  const IndividualFile fa = read_individual(pa, "x");
  const IndividualFile fb = read_individual(pb, "y");
  require_same_instruments(fa, fb, pa, pb);
  const SummaryInputs s = summarize(TwoSampleData(fa.z, fa.v, fb.z, fb.v));
  c.prepare();

  auto coef_file = [&](const Vector& coef, const Vector& se, const Vector& sd) {
    std::string t = "id,coef,se,sd_z\n";
    for (Eigen::Index j = 0; j < coef.size(); ++j) {
      t += fa.instruments[static_cast<std::size_t>(j)] + "," + format_double(coef(j)) + "," +
           format_double(se(j)) + "," + format_double(sd(j)) + "\n";
    }
    return t;
  };
  auto ld_file = [&](const Matrix& ld) {
    std::string t;
    for (std::size_t j = 0; j < fa.instruments.size(); ++j) t += (j ? "," : "") + fa.instruments[j];
    t += "\n";
    for (Eigen::Index i = 0; i < ld.rows(); ++i) {
      for (Eigen::Index j = 0; j < ld.cols(); ++j) t += (j ? "," : "") + format_double(ld(i, j));
      t += "\n";
    }
    return t;
  };
  const std::vector<std::pair<std::string, std::string>> files = {
      {"gamma.csv", coef_file(s.gamma_marginal, s.se_gamma, s.scale_z_a)},
      {"Gamma.csv", coef_file(s.Gamma_marginal, s.se_Gamma, s.scale_z_b)},
      {"ld_a.csv", ld_file(s.ld_a)},
      {"ld_b.csv", ld_file(s.ld_b)},
  };
  std::vector<std::string> outputs;
  for (const auto& [name, text] : files) {
    outputs.push_back(c.path(name));
    write_text(outputs.back(), text);
  }
  const ordered_json totals = {{"var_x_total", s.var_x_total_a},
                               {"var_y_total", s.var_y_total_b},
                               {"n_a", s.n_a},
                               {"n_b", s.n_b}};
  outputs.push_back(c.path("totals.json"));
  write_text(outputs.back(), totals.dump(2) + "\n");
  out << "summaries written for q=" << s.q() << "\n";
  finish_run(c, "summarize", {pa, pb}, outputs, std::nullopt, out);
  return kOk;
}

// ---------------------------------------------------------------- summary

struct SummaryArgs {
  std::string gamma, Gamma, ld_a, ld_b;
  double var_x_total = 0.0, var_y_total = 0.0;
  long long n_a = 0, n_b = 0;
};

struct CoefFile {
  std::vector<std::string> ids;
  Vector coef, se, sd;
};

CoefFile read_coef(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t id = t.column("id"), coef = t.column("coef"), se = t.column("se"), sd = t.column("sd_z");
  if (t.rows.empty()) schema_error(path + ": no instrument rows");
  CoefFile f;
  for (const auto& r : t.rows) f.ids.push_back(r[id]);
  f.coef = t.numeric_column(coef);
  f.se = t.numeric_column(se);
  f.sd = t.numeric_column(sd);
  return f;
}

Matrix read_ld(const std::string& path, const std::vector<std::string>& ids) {
  const CsvTable t = read_csv(path);
  std::size_t offset = 0;
  if (t.header.size() == ids.size() + 1 && t.header.front() == "id") offset = 1;
  if (t.header.size() - offset != ids.size() || t.rows.size() != ids.size()) {
    schema_error(path + ": LD matrix must be " + std::to_string(ids.size()) + "x" +
                 std::to_string(ids.size()));
  }
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (t.header[j + offset] != ids[j]) {
      schema_error(path + ": column " + std::to_string(j + 1) + " is '" + t.header[j + offset] +
                   "', expected instrument '" + ids[j] + "'");
    }
  }
  return t.numeric_columns(offset, ids.size());
}

int cmd_summary(const SummaryArgs& a, const Common& c, std::ostream& out) {
  const CoefFile g = read_coef(a.gamma);
  const CoefFile G = read_coef(a.Gamma);
  if (g.ids != G.ids) schema_error("instrument ids differ between " + a.gamma + " and " + a.Gamma);
  const auto q = static_cast<Eigen::Index>(g.ids.size());
  if (q > 1 && (a.ld_a.empty() || a.ld_b.empty())) {
    schema_error("q=" + std::to_string(q) +
                 " instruments: LD matrices for both samples are required, the instrument covariance "
                 "is necessary to compute any estimator with more than one instrument");
  }
  SummaryInputs in;
  in.gamma_marginal = g.coef;
  in.Gamma_marginal = G.coef;
  in.se_gamma = g.se;
  in.se_Gamma = G.se;
  in.scale_z_a = g.sd;
  in.scale_z_b = G.sd;
  in.ld_a = a.ld_a.empty() ? Matrix::Identity(q, q) : read_ld(a.ld_a, g.ids);
  in.ld_b = a.ld_b.empty() ? Matrix::Identity(q, q) : read_ld(a.ld_b, g.ids);
  in.var_x_total_a = a.var_x_total;
  in.var_y_total_b = a.var_y_total;
  in.n_a = a.n_a;
  in.n_b = a.n_b;
  in.validate();

  ordered_json report;
  report["q"] = q;
  report["conservative"] = true;
  ordered_json repairs;
  for (const auto& [name, ld] : {std::pair{"ld_a", &in.ld_a}, std::pair{"ld_b", &in.ld_b}}) {
    const LdRepair r = repair_ld(*ld);
    repairs[name] = {{"repaired", r.repaired}, {"max_eigenvalue_shift", r.max_shift}};
  }
  report["ld_repair"] = repairs;
  ordered_json list = ordered_json::array();
  emit_estimate(out, list, conservative_estimate(in, WeightSpec::tstsls()), "tstsls");
  emit_estimate(out, list, conservative_estimate(in, WeightSpec::optimal()), "optimal");
  if (q == 1) {
    TsivEstimate w = wald_ratio(reconstruct_moments(in));
    w.conservative = true;
    w.first_stage_f = summary_first_stage_f(in);
    w.weak_instrument = w.first_stage_f < kWeakInstrumentF;
    std::erase_if(w.warnings, [](const std::string& s) { return s.find("weak") != std::string::npos; });
    w.warnings.push_back("conservative: residual variances replaced by total variances");
    if (w.weak_instrument) w.warnings.push_back("weak instrument: first-stage F below 10");
    emit_estimate(out, list, w, "wald");
  }
  report["estimates"] = list;

  c.prepare();
  const std::string path = c.path("summary.json");
  write_text(path, report.dump(2) + "\n");
  std::vector<std::string> inputs = {a.gamma, a.Gamma};
  if (!a.ld_a.empty()) inputs.push_back(a.ld_a);
  if (!a.ld_b.empty()) inputs.push_back(a.ld_b);
  finish_run(c, "summary", inputs, {path}, std::nullopt, out);
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config_file, dump_name;
  std::string scenario = "sim1";
  double beta = 1.0, beta_a = 0.0, rho_a = 0.5, rho_b = 0.5;
  long long n_a = 1000, n_b = 1000, q = 10;
  int replications = 2000;
  std::uint64_t seed = 1;
  int grid = 0;
  // Options the user actually passed override the config file.
  CLI::Option *o_scenario = nullptr, *o_beta = nullptr, *o_beta_a = nullptr, *o_rho_a = nullptr,
              *o_rho_b = nullptr, *o_n_a = nullptr, *o_n_b = nullptr, *o_q = nullptr, *o_r = nullptr,
              *o_seed = nullptr, *o_dump = nullptr;
};

std::vector<sim::SimulationConfig> simulation_configs(const SimulateArgs& a) {
  if (a.grid != 0) {
    if (a.grid < 1 || a.grid > 3) schema_error("--grid must be 1, 2 or 3");
    auto grid = sim::table_grid(a.grid, a.replications, a.seed);
    for (auto& g : grid) g.validate();
    return grid;
  }
  const auto scenario = sim::parse_scenario(a.scenario);
  if (!scenario) schema_error("unknown --scenario '" + a.scenario + "' (sim1|sim2|sim3|conspiracy)");
  sim::SimulationConfig c = sim::SimulationConfig::defaults(*scenario);
  if (!a.config_file.empty()) {
    std::ifstream in(a.config_file);
    if (!in) schema_error("cannot open " + a.config_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      schema_error(a.config_file + ": " + e.what());
    }
    c = config_from_json(j, c);
  }
  if (a.o_scenario->count() && c.scenario != *scenario) {
    const auto base = sim::SimulationConfig::defaults(*scenario);
    c.scenario = *scenario;
    c.noise_a = base.noise_a;
    c.noise_b = base.noise_b;
    c.q = base.q;
  }
  if (a.o_beta->count()) c.beta = a.beta;
  if (a.o_beta_a->count()) c.beta_a = a.beta_a;
  if (a.o_rho_a->count()) c.rho_a = a.rho_a;
  if (a.o_rho_b->count()) c.rho_b = a.rho_b;
  if (a.o_n_a->count()) c.n_a = a.n_a;
  if (a.o_n_b->count()) c.n_b = a.n_b;
  if (a.o_q->count()) c.q = a.q;
  if (a.o_r->count()) c.replications = a.replications;
  if (a.o_seed->count()) c.seed = a.seed;
  c.validate();
  return {c};
}

int cmd_simulate(const SimulateArgs& a, const Common& c, std::ostream& out) {
  const auto configs = simulation_configs(a);
  const bool dump = a.o_dump->count() > 0;
  std::string csv = simulation_csv_header();
  std::string dump_csv = "row,replicate,ok,beta_tstsls,se_tstsls,beta_optimal,se_optimal\n";
  ordered_json rows = ordered_json::array();
  out << csv;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const sim::SimulationReport r = sim::run_study(configs[i], dump);
    const std::string line = simulation_csv_row(r);
    csv += line;
    out << line;
    rows.push_back({{"config", to_json(r.config)},
                    {"tstsls", to_json(r.tstsls)},
                    {"optimal", to_json(r.optimal)},
                    {"failures", r.failures},
                    {"failure_rate", r.failure_rate}});
    if (dump) {
      for (std::size_t k = 0; k < r.replications.size(); ++k) {
        const auto& rec = r.replications[k];
        dump_csv += std::to_string(i + 1) + "," + std::to_string(k) + "," + (rec.ok ? "1" : "0") + "," +
                    format_double(rec.beta_tstsls) + "," + format_double(rec.se_tstsls) + "," +
                    format_double(rec.beta_optimal) + "," + format_double(rec.se_optimal) + "\n";
      }
    }
  }
  c.prepare();
  std::vector<std::string> outputs = {c.path("simulation.csv"), c.path("simulation.json")};
  write_text(outputs[0], csv);
  write_text(outputs[1], ordered_json{{"rows", rows}}.dump(2) + "\n");
  if (dump) {
    outputs.push_back(c.path(a.dump_name.empty() ? "replications.csv" : a.dump_name));
    write_text(outputs.back(), dump_csv);
  }
  std::vector<std::string> inputs;
  if (!a.config_file.empty()) inputs.push_back(a.config_file);
  finish_run(c, "simulate", inputs, outputs, configs.front().seed, out);
  return kOk;
}

// ---------------------------------------------------------------- late

late::DiscreteIvWorld read_world(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cs = t.column("sample"), cz = t.column("z"), cc = t.column("class"), cp = t.column("p"),
                    c0 = t.column("mean_g0"), c1 = t.column("mean_g1");
  std::vector<late::WorldRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    late::WorldRow w;
    w.sample = t.rows[r][cs];
    const double z = t.number(r, cz);
    if (z != 0.0 && z != 1.0) schema_error(path + ": column 'z' row " + std::to_string(r + 1) + " must be 0 or 1");
    w.z = static_cast<int>(z);
    const auto cls = late::parse_class(t.rows[r][cc]);
    if (!cls) schema_error(path + ": column 'class' row " + std::to_string(r + 1) + " unknown class '" + t.rows[r][cc] + "'");
    w.cls = *cls;
    w.p = t.number(r, cp);
    w.mean_g0 = t.number(r, c0);
    w.mean_g1 = t.number(r, c1);
    rows.push_back(w);
  }
  return late::world_from_rows(rows);
}

int cmd_late(const std::string& pa, const std::string& pb, bool strict, const Common& c, std::ostream& out) {
  const auto na = late::normalize_direction(read_world(pa));
  const auto nb = late::normalize_direction(read_world(pb));
  const auto& wa = na.world;
  const auto& wb = nb.world;
  ordered_json report;
  std::vector<std::string> warnings;
  if (na.flipped != nb.flipped) warnings.push_back("instrument moves the exposure in opposite directions in the two samples");
  report["flipped"] = {{"a", na.flipped}, {"b", nb.flipped}};
  const bool defiers = wa.share(late::Class::Defier) > 0.0 || wb.share(late::Class::Defier) > 0.0;
  if (strict || !defiers) {
    const late::TwoSampleLate t = late::late_two_sample(wa, wb);
    report["late_b"] = t.late_b;
    report["scaling"] = t.scaling;
    report["estimand"] = t.estimand;
    out << "late_b=" << format_double(t.late_b) << " scaling=" << format_double(t.scaling)
        << " estimand=" << format_double(t.estimand);
  } else {
    const double den = wa.mean_exposure_given_z(1) - wa.mean_exposure_given_z(0);
    if (den == 0.0) throw Error(ErrorCode::NoCompliers, pa + ": instrument does not move the exposure");
    const double est = (wb.mean_outcome_given_z(1) - wb.mean_outcome_given_z(0)) / den;
    warnings.push_back("monotonicity violated: the estimand is not a complier effect");
    report["late_b"] = nullptr;
    report["scaling"] = nullptr;
    report["estimand"] = est;
    out << "estimand=" << format_double(est);
  }
  // Population quantities: no sampling error, so the SE is exactly zero.
  report["se"] = 0.0;
  report["audit"] = {{"a", to_json(late::identification_audit(wa))}, {"b", to_json(late::identification_audit(wb))}};
  report["warnings"] = warnings;
  out << " se=0 warnings=";
  if (warnings.empty()) out << "none";
  for (std::size_t i = 0; i < warnings.size(); ++i) out << (i ? "; " : "") << warnings[i];
  out << "\n";

  c.prepare();
  const std::string path = c.path("late.json");
  write_text(path, report.dump(2) + "\n");
  finish_run(c, "late", {pa, pb}, {path}, std::nullopt, out);
  return kOk;
}

// ---------------------------------------------------------------- project

int cmd_project(const std::string& pa, const std::string& pb, double caliper, const Common& c, std::ostream& out) {
  const IndividualFile fa = read_individual(pa, "x");
  const IndividualFile fb = read_individual(pb, "x");
  require_same_instruments(fa, fb, pa, pb);
  const ProjectionReport r = conspiracy_report({fa.z, fa.v, fb.z, fb.v}, caliper);
  const ordered_json report = {{"caliper", r.caliper},
                               {"matched_pairs", r.matched_pairs},
                               {"kept_fraction", r.kept_fraction},
                               {"before", to_json(r.before)},
                               {"after", to_json(r.after)}};
  std::string pairs = "idx_a,idx_b,distance\n";
  for (std::size_t i = 0; i < r.matches.idx_a.size(); ++i) {
    pairs += std::to_string(r.matches.idx_a[i]) + "," + std::to_string(r.matches.idx_b[i]) + "," +
             format_double(r.matches.distance[i]) + "\n";
  }
  out << "divergence before=" << format_double(r.before.divergence)
      << " after=" << format_double(r.after.divergence) << " pairs=" << r.matched_pairs
      << (r.before.sign_flip ? " warnings=sign flip between samples" : " warnings=none") << "\n";
  c.prepare();
  const std::vector<std::string> outputs = {c.path("projection.json"), c.path("matched_pairs.csv")};
  write_text(outputs[0], report.dump(2) + "\n");
  write_text(outputs[1], pairs);
  finish_run(c, "project", {pa, pb}, outputs, std::nullopt, out);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-sample instrumental variable estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  common.echo.push_back("tsiv");
  common.echo.insert(common.echo.end(), args.begin(), args.end());
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  };

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate the causal effect from two individual-level samples");
  est->add_option("sample_a", ea.sample_a, "CSV with instruments and x")->required();
  est->add_option("sample_b", ea.sample_b, "CSV with instruments and y")->required();
  est->add_option("--weight", ea.weight, "tstsls|optimal|identity|custom=FILE")->capture_default_str();
  est->add_flag("--no-center", ea.no_center, "Use uncentered moments");
  est->add_option("--alpha", ea.alpha, "Level of the covariance heterogeneity test")->capture_default_str();
  add_out(est);

  std::string sa, sb;
  auto* smz = app.add_subcommand("summarize", "Export summary statistics from individual-level samples");
  smz->add_option("sample_a", sa)->required();
  smz->add_option("sample_b", sb)->required();
  add_out(smz);

  SummaryArgs su;
  auto* sum = app.add_subcommand("summary", "Estimate from per-instrument summary statistics");
  sum->add_option("gamma", su.gamma, "Exposure coefficients (id,coef,se,sd_z)")->required();
  sum->add_option("Gamma", su.Gamma, "Outcome coefficients (id,coef,se,sd_z)")->required();
  sum->add_option("ld_a", su.ld_a, "Instrument correlation matrix of sample a");
  sum->add_option("ld_b", su.ld_b, "Instrument correlation matrix of sample b");
  sum->add_option("--var-x-total", su.var_x_total, "Total exposure variance in sample a")->required();
  sum->add_option("--var-y-total", su.var_y_total, "Total outcome variance in sample b")->required();
  sum->add_option("--n-a", su.n_a)->required();
  sum->add_option("--n-b", su.n_b)->required();
  add_out(sum);

  SimulateArgs si;
  auto* simc = app.add_subcommand("simulate", "Run a Monte Carlo study");
  si.o_scenario = simc->add_option("--scenario", si.scenario, "sim1|sim2|sim3|conspiracy");
  si.o_beta = simc->add_option("--beta", si.beta);
  si.o_beta_a = simc->add_option("--beta-a", si.beta_a, "Outcome coefficient of the hidden sample-a outcome");
  si.o_rho_a = simc->add_option("--rho-a", si.rho_a);
  si.o_rho_b = simc->add_option("--rho-b", si.rho_b);
  si.o_n_a = simc->add_option("--n-a", si.n_a);
  si.o_n_b = simc->add_option("--n-b", si.n_b);
  si.o_q = simc->add_option("--q", si.q);
  si.o_r = simc->add_option("-R,--replications", si.replications);
  si.o_seed = simc->add_option("--seed", si.seed);
  simc->add_option("--grid", si.grid, "Run a built-in table grid (1, 2 or 3)");
  simc->add_option("--config", si.config_file, "JSON simulation config");
  si.o_dump = simc->add_option("--dump", si.dump_name, "Write per-replication estimates to this file")
                  ->expected(0, 1);
  add_out(simc);

  std::string la, lb;
  bool strict = false;
  auto* lt = app.add_subcommand("late", "Two-sample LATE for binary instrument and exposure");
  lt->add_option("world_a", la)->required();
  lt->add_option("world_b", lb)->required();
  lt->add_flag("--strict", strict, "Fail when defiers are present");
  add_out(lt);

  std::string pa, pb;
  double caliper = kDefaultCaliper;
  auto* pj = app.add_subcommand("project", "Compare exposure projections across samples before and after matching");
  pj->add_option("sample_a", pa)->required();
  pj->add_option("sample_b", pb)->required();
  pj->add_option("--caliper", caliper)->capture_default_str();
  add_out(pj);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kOk;
    err << "error: " << e.what() << "\n";
    return kSchema;
  }

  try {
    if (est->parsed()) return cmd_estimate(ea, common, out);
    if (smz->parsed()) return cmd_summarize(sa, sb, common, out);
    if (sum->parsed()) return cmd_summary(su, common, out);
    if (simc->parsed()) return cmd_simulate(si, common, out);
    if (lt->parsed()) return cmd_late(la, lb, strict, common, out);
    if (pj->parsed()) return cmd_project(pa, pb, caliper, common, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace tsiv::cli
