#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bvs/datagen.hpp"
#include "bvs/diagnostics.hpp"
#include "bvs/enumerate.hpp"
#include "bvs/run.hpp"

namespace bvs {

using Json = nlohmann::ordered_json;

struct CsvSource {
  std::string path;
  std::string response;
  bool standardize = false;
  bool expand = false;
};

using DataSource = std::variant<SimSpec, CsvSource>;

//! Prior description as configured; `fixed_ratio` resolves h = c/p against
//! the dataset (capped at 1/2 so small-p problems keep a proper prior).
struct PriorConfig {
  std::string preset;  // empty when given explicitly
  double g = 9.0;
  VForm v_form = VForm::identity;
  std::string gamma_kind = "fixed";  // fixed | fixed_ratio | betabinomial
  double h = 0.5;
  double ratio_c = 10.0;
  double a = 1.0;
  double b = 1.0;

  PriorSpec resolve(int p) const {
    PriorConfig c = *this;
    if (!preset.empty()) {
      if (preset == "yang_sim") {
        c = PriorConfig{.preset = "", .g = 9.0, .v_form = VForm::identity,
                        .gamma_kind = "fixed_ratio", .ratio_c = 10.0};
      } else if (preset == "tecator_like") {
        c = PriorConfig{.preset = "", .g = 100.0, .v_form = VForm::identity,
                        .gamma_kind = "fixed", .h = 5.0 / 100.0};
      } else if (preset == "pcr_like") {
        c = PriorConfig{.preset = "", .g = 0.5, .v_form = VForm::identity,
                        .gamma_kind = "betabinomial", .a = 1.0,
                        .b = (static_cast<double>(p) - 5.0) / 5.0};
      } else if (preset == "snp_like") {
        c = PriorConfig{.preset = "", .g = 0.25, .v_form = VForm::identity,
                        .gamma_kind = "fixed_ratio", .ratio_c = 5.0};
      } else {
        throw std::invalid_argument("prior: unknown preset '" + preset + "'");
      }
    }
    PriorSpec spec;
    spec.g = c.g;
    spec.v_form = c.v_form;
    if (c.gamma_kind == "fixed") {
      spec.gamma_prior = GammaPrior::fixed(c.h);
    } else if (c.gamma_kind == "fixed_ratio") {
      spec.gamma_prior = GammaPrior::fixed(std::min(c.ratio_c / static_cast<double>(p), 0.5));
    } else if (c.gamma_kind == "betabinomial") {
      spec.gamma_prior = GammaPrior::betabinomial(c.a, c.b);
    } else {
      throw std::invalid_argument("prior: unknown gamma prior kind '" + c.gamma_kind + "'");
    }
    spec.validate();
    return spec;
  }
};

//! One experiment: data source, prior, sampler, and run controls.
struct ExperimentConfig {
  DataSource data;
  PriorConfig prior;
  std::string sampler = "parni_kw";
  std::string balancing = "hastings";
  int L = 25;
  long iterations = 5000;
  long burn_in = 1000;
  std::uint64_t seed = 1;
  double tau = 0.65;
  double s = 5.0;
  double pi0 = 1e-3;
  double eps = 1e-3;
  int max_pk = 12;
  std::string output_dir = ".";
  int threads = 1;
  bool fix_omega = false;
  double omega_init = 0.5;
  double time_budget_s = 0.0;

  SamplerKind sampler_kind() const {
    if (sampler == "ads") return SamplerKind::ads;
    if (sampler == "asi") return SamplerKind::asi;
    if (sampler == "arn") return SamplerKind::arn;
    if (sampler == "arni") return SamplerKind::arni;
    if (sampler == "parni_rm") return SamplerKind::parni_rm;
    if (sampler == "parni_kw") return SamplerKind::parni_kw;
    throw std::invalid_argument("config: unknown sampler '" + sampler + "'");
  }

  Balancing balancing_kind() const {
    if (balancing == "hastings") return Balancing::hastings;
    if (balancing == "barker") return Balancing::barker;
    if (balancing == "sqrt") return Balancing::sqrt;
    throw std::invalid_argument("config: unknown balancing function '" + balancing + "'");
  }

  RunConfig run_config() const {
    RunConfig rc;
    rc.sampler = sampler_kind();
    rc.balancing = balancing_kind();
    rc.chains = L;
    rc.iterations = iterations;
    rc.burn_in = burn_in;
    rc.seed = seed;
    rc.tau = tau;
    rc.s = s;
    rc.pi0 = pi0;
    rc.eps = eps;
    rc.max_pk = max_pk;
    rc.threads = threads;
    rc.fix_omega = fix_omega;
    rc.omega_init = omega_init;
    rc.time_budget_s = time_budget_s;
    return rc;
  }

  Dataset load_data() const {
    if (std::holds_alternative<SimSpec>(data)) return generate_yang(std::get<SimSpec>(data)).first;
    const auto& c = std::get<CsvSource>(data);
    return load_csv(c.path, c.response, c.standardize, c.expand);
  }
};

namespace detail {

inline SimSpec sim_from_json(const Json& j) {
  SimSpec s;
  if (j.contains("preset")) {
    const std::string name = j.at("preset");
    if (name == "snr2_small") {
      s.n = 200; s.p = 10; s.snr = 2.0; s.sigma2 = 1.0; s.rho = 0.6;
    } else if (name == "snr2_medium") {
      s.n = 500; s.p = 100; s.snr = 2.0; s.sigma2 = 1.0; s.rho = 0.6;
    } else {
      throw std::invalid_argument("config: unknown sim preset '" + name + "'");
    }
  }
  if (j.contains("n")) s.n = j.at("n");
  if (j.contains("p")) s.p = j.at("p");
  if (j.contains("snr")) s.snr = j.at("snr");
  if (j.contains("sigma2")) s.sigma2 = j.at("sigma2");
  if (j.contains("rho")) s.rho = j.at("rho");
  if (j.contains("seed")) s.seed = j.at("seed");
  return s;
}

inline Json sim_to_json(const SimSpec& s) {
  return Json{{"type", "sim"}, {"n", s.n},         {"p", s.p},      {"snr", s.snr},
              {"sigma2", s.sigma2}, {"rho", s.rho}, {"seed", s.seed}};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  if (!j.contains("data")) throw std::invalid_argument("config: missing 'data'");
  const auto& jd = j.at("data");
  const std::string type = jd.value("type", jd.contains("path") ? "csv" : "sim");
  if (type == "sim") {
    c.data = detail::sim_from_json(jd);
  } else if (type == "csv") {
    CsvSource src;
    src.path = jd.at("path");
    src.response = jd.at("response");
    src.standardize = jd.value("standardize", false);
    src.expand = jd.value("expand", false);
    c.data = src;
  } else {
    throw std::invalid_argument("config: data type must be 'sim' or 'csv'");
  }

  if (j.contains("prior")) {
    const auto& jp = j.at("prior");
    if (jp.contains("preset")) c.prior.preset = jp.at("preset");
    if (jp.contains("g")) c.prior.g = jp.at("g");
    if (jp.contains("v_form")) {
      const std::string v = jp.at("v_form");
      if (v == "identity") c.prior.v_form = VForm::identity;
      else if (v == "gprior") c.prior.v_form = VForm::gprior;
      else throw std::invalid_argument("config: v_form must be 'identity' or 'gprior'");
    }
    if (jp.contains("gamma")) {
      const auto& jg = jp.at("gamma");
      c.prior.gamma_kind = jg.at("type");
      if (jg.contains("h")) c.prior.h = jg.at("h");
      if (jg.contains("c")) c.prior.ratio_c = jg.at("c");
      if (jg.contains("a")) c.prior.a = jg.at("a");
      if (jg.contains("b")) c.prior.b = jg.at("b");
    }
  }

  if (j.contains("sampler")) c.sampler = j.at("sampler");
  if (j.contains("balancing")) c.balancing = j.at("balancing");
  if (j.contains("L")) c.L = j.at("L");
  if (j.contains("iterations")) c.iterations = j.at("iterations");
  if (j.contains("burn_in")) c.burn_in = j.at("burn_in");
  if (j.contains("seed")) c.seed = j.at("seed");
  if (j.contains("tau")) c.tau = j.at("tau");
  if (j.contains("s")) c.s = j.at("s");
  if (j.contains("pi0")) c.pi0 = j.at("pi0");
  if (j.contains("eps")) c.eps = j.at("eps");
  if (j.contains("max_pk")) c.max_pk = j.at("max_pk");
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir");
  if (j.contains("threads")) c.threads = j.at("threads");
  if (j.contains("fix_omega")) c.fix_omega = j.at("fix_omega");
  if (j.contains("omega_init")) c.omega_init = j.at("omega_init");
  if (j.contains("time_budget_s")) c.time_budget_s = j.at("time_budget_s");

  c.sampler_kind();
  c.balancing_kind();
  return c;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  if (std::holds_alternative<SimSpec>(c.data)) {
    j["data"] = detail::sim_to_json(std::get<SimSpec>(c.data));
  } else {
    const auto& src = std::get<CsvSource>(c.data);
    j["data"] = Json{{"type", "csv"},
                     {"path", src.path},
                     {"response", src.response},
                     {"standardize", src.standardize},
                     {"expand", src.expand}};
  }
  Json jp;
  if (!c.prior.preset.empty()) jp["preset"] = c.prior.preset;
  jp["g"] = c.prior.g;
  jp["v_form"] = c.prior.v_form == VForm::gprior ? "gprior" : "identity";
  Json jg{{"type", c.prior.gamma_kind}};
  if (c.prior.gamma_kind == "fixed") jg["h"] = c.prior.h;
  if (c.prior.gamma_kind == "fixed_ratio") jg["c"] = c.prior.ratio_c;
  if (c.prior.gamma_kind == "betabinomial") {
    jg["a"] = c.prior.a;
    jg["b"] = c.prior.b;
  }
  jp["gamma"] = jg;
  j["prior"] = jp;
  j["sampler"] = c.sampler;
  j["balancing"] = c.balancing;
  j["L"] = c.L;
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["seed"] = c.seed;
  j["tau"] = c.tau;
  j["s"] = c.s;
  j["pi0"] = c.pi0;
  j["eps"] = c.eps;
  j["max_pk"] = c.max_pk;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  j["fix_omega"] = c.fix_omega;
  j["omega_init"] = c.omega_init;
  j["time_budget_s"] = c.time_budget_s;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  Json j;
  in >> j;
  return config_from_json(j);
}

//! Runs the configured experiment and writes pips.csv, trace.jsonl and
//! summary.json into output_dir.
inline RunOutput run_experiment(const ExperimentConfig& cfg) {
  const Dataset data = cfg.load_data();
  const PriorSpec prior = cfg.prior.resolve(static_cast<int>(data.p));
  const RunConfig rc = cfg.run_config();

  std::filesystem::create_directories(cfg.output_dir);
  const auto out_path = [&](const char* name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
  };

  JsonlTraceWriter trace(out_path("trace.jsonl"));
  RunOutput out = run_chains(data, prior, rc, [&trace](const TraceRecord& r) { trace(r); });
  trace.close();

  write_pips_csv(out_path("pips.csv"), out, data.column_names);

  Json summary;
  summary["sampler"] = cfg.sampler;
  summary["n"] = data.n;
  summary["p"] = data.p;
  summary["L"] = cfg.L;
  summary["iterations"] = out.iterations_run;
  summary["burn_in"] = cfg.burn_in;
  summary["seed"] = cfg.seed;
  summary["acceptance_rate"] = out.acceptance_rate;
  summary["mean_asjd"] = out.mean_asjd;
  summary["wall_time_s"] = out.wall_time_s;
  summary["omega_final"] = out.omega_final;
  summary["config"] = config_to_json(cfg);  // resolved defaults, reproducibility record
  std::ofstream sf(out_path("summary.json"));
  sf << summary.dump(2) << '\n';
  return out;
}

//! Reference PIPs for compare_samplers: exact enumeration or a pips.csv from
//! an earlier (long) run.
inline Eigen::VectorXd load_reference_pips(const std::string& reference, const Dataset& data,
                                           const PriorSpec& prior) {
  if (reference == "exact") return enumerate_posterior(data, prior).pips;
  std::ifstream in(reference);
  if (!in) throw std::runtime_error("compare: cannot open reference " + reference);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("compare: empty reference " + reference);
  std::vector<double> pips;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() < 2) throw std::runtime_error("compare: malformed reference row");
    pips.push_back(std::stod(cells[1]));
  }
  if (static_cast<Eigen::Index>(pips.size()) != data.p)
    throw std::runtime_error("compare: reference has " + std::to_string(pips.size()) +
                             " rows, expected " + std::to_string(data.p));
  Eigen::VectorXd v(static_cast<Eigen::Index>(pips.size()));
  for (std::size_t i = 0; i < pips.size(); ++i) v[static_cast<Eigen::Index>(i)] = pips[i];
  return v;
}

struct ComparisonRow {
  std::string sampler;
  std::optional<double> mse_important;
  std::optional<double> mse_unimportant;
  std::optional<double> rel_log10_important;    // vs first config
  std::optional<double> rel_log10_unimportant;
};

//! Runs each config against the shared dataset and scores RB PIP estimates
//! against the reference; log10 ratios are relative to the first config.
inline std::vector<ComparisonRow> compare_samplers(const std::vector<ExperimentConfig>& configs,
                                                   const std::string& reference,
                                                   const std::string& table_path,
                                                   double threshold = 0.01) {
  if (configs.empty()) throw std::invalid_argument("compare: no configs");
  const Dataset data = configs.front().load_data();
  const PriorSpec prior = configs.front().prior.resolve(static_cast<int>(data.p));
  for (const auto& c : configs)
    if (config_to_json(c).at("data") != config_to_json(configs.front()).at("data"))
      throw std::invalid_argument("compare: configs must share the same data source");

  const Eigen::VectorXd ref = load_reference_pips(reference, data, prior);

  std::vector<ComparisonRow> rows;
  for (const auto& c : configs) {
    const RunOutput out = run_chains(data, prior, c.run_config());
    const PipMse mse = pip_mse(out.pip_rb, ref, threshold);
    ComparisonRow row;
    row.sampler = c.sampler;
    row.mse_important = mse.important;
    row.mse_unimportant = mse.unimportant;
    rows.push_back(row);
  }
  for (auto& row : rows) {
    if (row.mse_important && rows.front().mse_important)
      row.rel_log10_important = relative_log10_mse(*row.mse_important, *rows.front().mse_important);
    if (row.mse_unimportant && rows.front().mse_unimportant)
      row.rel_log10_unimportant =
          relative_log10_mse(*row.mse_unimportant, *rows.front().mse_unimportant);
  }

  std::ofstream f(table_path);
  if (!f) throw std::runtime_error("compare: cannot write " + table_path);
  f << "sampler,mse_important,mse_unimportant,rel_log10_important,rel_log10_unimportant\n";
  const auto cell = [](const std::optional<double>& v) {
    return v ? detail::json_double(*v) : std::string();
  };
  for (const auto& row : rows)
    f << row.sampler << ',' << cell(row.mse_important) << ',' << cell(row.mse_unimportant) << ','
      << cell(row.rel_log10_important) << ',' << cell(row.rel_log10_unimportant) << '\n';
  return rows;
}

}  // namespace bvs
