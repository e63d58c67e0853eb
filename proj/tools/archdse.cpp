// Operator entry point: config-driven exploration runs, rule reports from
// checkpoints, single-design evaluation, and oracle / baseline tables.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "archdse/config.hpp"
#include "archdse/errors.hpp"
#include "archdse/fnn.hpp"
#include "archdse/harness.hpp"
#include "archdse/rule_extract.hpp"

using namespace archdse;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitEvaluator = 4;

/// One machine-parsable line on stderr.
void emit_error(const std::string& kind, const std::string& message) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  ordered_json j;
  j["error"] = kind;
  j["message"] = flat;
  std::cerr << j.dump() << "\n";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

struct GlobalArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

RunConfig load(const GlobalArgs& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required for this subcommand");
  return load_config(g.config_path, g.overrides, g.seed, g.out);
}

int cmd_explore(const GlobalArgs& g) {
  RunConfig cfg = load(g);
  ExperimentReport rep = run_experiment(cfg);
  std::cout << rep.text;
  return kExitOk;
}

int cmd_rules(const GlobalArgs& g, const std::string& checkpoint_path, double theta_c,
              double theta_norm) {
  FnnWeights weights = FnnWeights::from_checkpoint_text(read_file(checkpoint_path));
  RuleBase rb = extract(weights, theta_c, theta_norm);
  rb.provenance = "checkpoint " + checkpoint_path;
  const std::string report = render_report(rb, weights);
  std::cout << report;
  const std::filesystem::path out_dir(g.out.value_or("out"));
  write_file(out_dir / "rules.txt", report);
  write_file(out_dir / "rules.jsonl", rules_jsonl(rb));
  return kExitOk;
}

int cmd_eval(const GlobalArgs& g, const std::vector<double>& design_values,
             const std::string& fidelity, std::string workload) {
  RunConfig cfg = load(g);
  const DesignSpace& space = cfg.space;
  if (design_values.size() != space.param_count())
    throw ConfigError("--design needs " + std::to_string(space.param_count()) +
                      " comma-separated values, got " + std::to_string(design_values.size()));
  DesignPoint p;
  p.indices.resize(space.param_count());
  for (std::size_t j = 0; j < space.param_count(); ++j) {
    const ParameterSpec& spec = space.params()[j];
    auto it = std::find(spec.values.begin(), spec.values.end(), design_values[j]);
    if (it == spec.values.end()) {
      std::string legal;
      for (double v : spec.values) legal += (legal.empty() ? "" : ", ") + fmt(v);
      throw ConfigError(fmt(design_values[j]) + " is not a candidate for '" + spec.name +
                        "'; legal values: " + legal);
    }
    p.indices[j] = static_cast<std::size_t>(it - spec.values.begin());
  }
  if (workload.empty()) workload = cfg.experiment_workloads.front();
  if (!cfg.workloads.count(workload)) throw ConfigError("unknown workload '" + workload + "'");

  LfModel lf(space, cfg.model);
  AreaModel area(space, cfg.area, cfg.model);
  const double a = area.area(p);
  std::cout << "design:";
  for (std::size_t j = 0; j < space.param_count(); ++j)
    std::cout << " " << space.params()[j].name << "=" << fmt(design_values[j]);
  std::cout << "\narea: " << fmt(a) << " mm^2"
            << (a <= cfg.area_limit ? "" : " (exceeds the limit)") << "\n";
  if (fidelity == "lf") {
    LfResult r = lf.evaluate(p, cfg.workloads.at(workload));
    std::cout << "workload " << workload << ": cpi " << fmt(r.cpi) << ", ipc " << fmt(r.ipc)
              << "\nbounds:\n";
    for (const auto& [name, value] : r.bounds)
      std::cout << "  " << name << ": " << fmt(value) << "\n";
  } else {
    std::unique_ptr<HfEvaluator> hf = make_evaluator(cfg, space, lf);
    const double cpi = hf->evaluate(p, workload);
    std::cout << "workload " << workload << ": hf cpi " << fmt(cpi) << ", ipc "
              << fmt(1.0 / cpi) << "\n";
  }
  return kExitOk;
}

int cmd_oracle(const GlobalArgs& g) {
  RunConfig cfg = load(g);
  const DesignSpace& space = cfg.space;
  LfModel lf(space, cfg.model);
  AreaModel area(space, cfg.area, cfg.model);
  std::ostringstream os;
  for (std::size_t wi = 0; wi < cfg.experiment_workloads.size(); ++wi) {
    const std::string& name = cfg.experiment_workloads[wi];
    OracleConfig ocfg;
    ocfg.exhaustive_cap = cfg.harness.exhaustive_cap;
    ocfg.sample_floor = cfg.harness.sample_floor;
    ocfg.seed = 0x5eedull + wi;
    std::unique_ptr<HfEvaluator> eval =
        cfg.trainer.hf_budget > 0
            ? make_evaluator(cfg, space, lf)
            : std::unique_ptr<HfEvaluator>(std::make_unique<LfCpiEvaluator>(lf, cfg.workloads));
    OracleResult res = oracle(space, area, cfg.area_limit, name, *eval, ocfg);
    os << "workload " << name << ": oracle cpi " << fmt(res.best_cpi) << " ("
       << (res.method == OracleMethod::Exhaustive ? "exhaustive" : "sampled") << ", "
       << res.samples_evaluated << " designs evaluated), design:";
    for (double v : space.values(res.best_point)) os << " " << fmt(v);
    os << "\n";
  }
  std::cout << os.str();
  write_file(std::filesystem::path(cfg.output_dir) / "oracle.txt", os.str());
  return kExitOk;
}

int cmd_compare(const GlobalArgs& g) {
  RunConfig cfg = load(g);
  const DesignSpace& space = cfg.space;
  LfModel lf(space, cfg.model);
  AreaModel area(space, cfg.area, cfg.model);

  std::vector<BaselineRow> external;
  for (const std::string& path : cfg.harness.baseline_files) {
    std::vector<BaselineRow> rows = load_baseline_file(path);
    external.insert(external.end(), rows.begin(), rows.end());
  }

  const bool hf_phase = cfg.trainer.hf_budget > 0;
  std::ostringstream os;
  for (std::size_t wi = 0; wi < cfg.experiment_workloads.size(); ++wi) {
    const std::string& name = cfg.experiment_workloads[wi];
    auto fresh_eval = [&]() {
      return hf_phase ? make_evaluator(cfg, space, lf)
                      : std::unique_ptr<HfEvaluator>(
                            std::make_unique<LfCpiEvaluator>(lf, cfg.workloads));
    };
    OracleConfig ocfg;
    ocfg.exhaustive_cap = cfg.harness.exhaustive_cap;
    ocfg.sample_floor = cfg.harness.sample_floor;
    ocfg.seed = 0x5eedull + wi;
    std::unique_ptr<HfEvaluator> oeval = fresh_eval();
    OracleResult orc = oracle(space, area, cfg.area_limit, name, *oeval, ocfg);
    os << "workload " << name << ":\n";
    os << "  oracle: cpi " << fmt(orc.best_cpi) << " ("
       << (orc.method == OracleMethod::Exhaustive ? "exhaustive" : "sampled") << ")\n";

    std::unique_ptr<HfEvaluator> climb_eval;
    if (hf_phase) climb_eval = fresh_eval();
    HillClimbResult hc = hill_climb_baseline(space, lf, area, cfg.area_limit,
                                             cfg.workloads.at(name), climb_eval.get());
    os << "  hill-climb: lf cpi " << fmt(hc.lf_cpi);
    if (hc.hf_cpi) os << ", hf cpi " << fmt(*hc.hf_cpi);
    os << "\n";

    const std::size_t rs_budget = cfg.harness.random_search_budget
                                      ? cfg.harness.random_search_budget
                                      : cfg.trainer.hf_budget;
    if (rs_budget > 0)
      for (std::uint64_t seed : cfg.seeds) {
        std::unique_ptr<HfEvaluator> ev = fresh_eval();
        SearchResult rs =
            random_search_baseline(space, area, cfg.area_limit, name, *ev, rs_budget, seed);
        os << "  random-search seed " << seed << ": cpi " << fmt(rs.best_cpi) << " ("
           << rs.evaluations << " evaluations)\n";
      }
    for (const BaselineRow& row : external)
      os << "  external " << row.method << " seed " << row.seed << ": cpi "
         << fmt(row.best_cpi) << "\n";
  }
  std::cout << os.str();
  write_file(std::filesystem::path(cfg.output_dir) / "compare.txt", os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-space exploration with an explainable fuzzy policy"};
  app.require_subcommand(1);

  GlobalArgs g;
  std::uint64_t seed_value = 0;
  std::string out_value;
  app.add_option("--config", g.config_path, "Run configuration file");
  app.add_option("--override", g.overrides,
                 "Dotted-path config override, e.g. trainer.max_episodes=500");
  CLI::Option* seed_opt = app.add_option("--seed", seed_value, "Run only this seed");
  CLI::Option* out_opt = app.add_option("--out", out_value, "Output directory override");

  app.add_subcommand("explore", "Run the full LF->HF exploration experiment")->fallthrough();

  std::string checkpoint_path;
  double theta_c = 0.1;
  double theta_norm = -1.0;
  CLI::App* rules = app.add_subcommand("rules", "Extract IF-THEN rules from a checkpoint");
  rules->fallthrough();
  rules->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  rules->add_option("--theta-c", theta_c, "Consequent threshold");
  rules->add_option("--theta-norm", theta_norm, "Column-norm threshold (negative = auto)");

  std::vector<double> design_values;
  std::string fidelity = "lf";
  std::string workload;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate one design");
  eval->fallthrough();
  eval->add_option("--design", design_values, "Comma-separated parameter values")
      ->required()
      ->delimiter(',');
  eval->add_option("--fidelity", fidelity, "lf or hf")
      ->check(CLI::IsMember({"lf", "hf"}));
  eval->add_option("--workload", workload, "Workload name (default: first configured)");

  app.add_subcommand("oracle", "Compute the sampled-optimal reference")->fallthrough();
  app.add_subcommand("compare", "Run baseline searches against the oracle")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::stringstream out, err;
    const int rc = app.exit(e, out, err);
    (void)rc;
    emit_error("config", err.str().empty() ? e.what() : err.str());
    return kExitConfig;
  }

  if (*seed_opt) g.seed = seed_value;
  if (*out_opt) g.out = out_value;

  try {
    if (app.got_subcommand("explore")) return cmd_explore(g);
    if (app.got_subcommand("rules")) return cmd_rules(g, checkpoint_path, theta_c, theta_norm);
    if (app.got_subcommand("eval")) return cmd_eval(g, design_values, fidelity, workload);
    if (app.got_subcommand("oracle")) return cmd_oracle(g);
    if (app.got_subcommand("compare")) return cmd_compare(g);
    emit_error("config", "no subcommand given");
    return kExitConfig;
  } catch (const ConfigError& e) {
    emit_error("config", e.what());
    return kExitConfig;
  } catch (const InfeasibleSpace& e) {
    emit_error("config", e.what());
    return kExitConfig;
  } catch (const EvaluatorError& e) {
    emit_error("evaluator", e.what());
    return kExitEvaluator;
  } catch (const std::exception& e) {
    emit_error("runtime", e.what());
    return kExitRuntime;
  }
}
