#include "archdse/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include "archdse/errors.hpp"
#include "archdse/rule_extract.hpp"
#include "archdse/rng.hpp"

#include "json.hpp"

namespace archdse {
namespace {

using ordered_json = nlohmann::ordered_json;

DesignPoint sample_point(const DesignSpace& space, SplitMix64& rng) {
  DesignPoint p;
  p.indices.resize(space.param_count());
  for (std::size_t j = 0; j < space.param_count(); ++j)
    p.indices[j] = static_cast<std::size_t>(rng.next() % space.params()[j].values.size());
  return p;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-') c = '_';
  return out;
}

}  // namespace

OracleResult oracle(const DesignSpace& space, const AreaModel& area, double area_limit,
                    const std::string& workload, HfEvaluator& eval, const OracleConfig& cfg,
                    const std::vector<DesignPoint>& pool) {
  OracleResult res;
  bool have_best = false;
  auto consider = [&](const DesignPoint& p, double cpi) {
    if (!have_best || cpi < res.best_cpi) {
      res.best_point = p;
      res.best_cpi = cpi;
      have_best = true;
    }
  };

  if (space.size() <= cfg.exhaustive_cap) {
    res.method = OracleMethod::Exhaustive;
    DesignPoint p = space.smallest_point();
    do {
      if (area.area(p) > area_limit) continue;
      consider(p, eval.evaluate(p, workload));
      ++res.samples_evaluated;
    } while (space.next_point(p));
    if (!have_best) throw InfeasibleSpace("oracle: no design satisfies the area limit");
    return res;
  }

  res.method = OracleMethod::RandomSampled;
  SplitMix64 rng(cfg.seed);
  std::size_t valid = 0;
  const std::uint64_t attempt_cap =
      std::max<std::uint64_t>(100000, 2000 * static_cast<std::uint64_t>(cfg.sample_floor));
  for (std::uint64_t attempts = 0; valid < cfg.sample_floor; ++attempts) {
    if (attempts >= attempt_cap) {
      if (valid == 0) throw InfeasibleSpace("oracle: rejection sampling found no valid design");
      throw Error("oracle: rejection sampling could not reach the sample floor");
    }
    DesignPoint p = sample_point(space, rng);
    if (area.area(p) > area_limit) continue;
    consider(p, eval.evaluate(p, workload));
    ++valid;
    ++res.samples_evaluated;
  }

  // Pool in designs the search itself already evaluated, so the sampled
  // oracle never knows less than the method it judges.
  std::set<std::vector<std::size_t>> seen;
  for (const DesignPoint& p : pool) {
    if (!space.valid(p) || area.area(p) > area_limit) continue;
    if (!seen.insert(p.indices).second) continue;
    consider(p, eval.evaluate(p, workload));
    ++res.samples_evaluated;
  }
  return res;
}

SearchResult random_search_baseline(const DesignSpace& space, const AreaModel& area,
                                    double area_limit, const std::string& workload,
                                    HfEvaluator& eval, std::size_t budget, std::uint64_t seed) {
  if (budget == 0) throw ConfigError("random_search_baseline: budget must be >= 1");
  SearchResult res;
  SplitMix64 rng(seed);
  bool have_best = false;
  const std::uint64_t attempt_cap =
      std::max<std::uint64_t>(100000, 2000 * static_cast<std::uint64_t>(budget));
  for (std::uint64_t attempts = 0; res.evaluations < budget; ++attempts) {
    if (attempts >= attempt_cap)
      throw Error("random_search_baseline: rejection sampling could not fill the budget");
    DesignPoint p = sample_point(space, rng);
    if (area.area(p) > area_limit) continue;
    const double cpi = eval.evaluate(p, workload);
    ++res.evaluations;
    if (!have_best || cpi < res.best_cpi) {
      res.best_point = p;
      res.best_cpi = cpi;
      have_best = true;
    }
  }
  return res;
}

HillClimbResult hill_climb_baseline(const DesignSpace& space, const LfModel& lf,
                                    const AreaModel& area, double area_limit,
                                    const WorkloadProfile& workload, HfEvaluator* hf) {
  HillClimbResult res;
  DesignPoint p = space.smallest_point();
  if (area.area(p) > area_limit)
    throw InfeasibleSpace("hill_climb_baseline: smallest design exceeds the area limit");
  double cpi = lf.evaluate(p, workload).cpi;
  ++res.lf_evaluations;
  for (;;) {
    bool improved = false;
    DesignPoint best_next;
    double best_cpi = cpi;
    for (std::size_t j = 0; j < space.param_count(); ++j) {
      if (space.at_maximum(p, j)) continue;
      DesignPoint q = space.increment(p, j);
      if (area.area(q) > area_limit) continue;
      const double c = lf.evaluate(q, workload).cpi;
      ++res.lf_evaluations;
      if (c < best_cpi) {
        best_cpi = c;
        best_next = q;
        improved = true;
      }
    }
    if (!improved) break;
    p = std::move(best_next);
    cpi = best_cpi;
  }
  res.best_point = p;
  res.lf_cpi = cpi;
  if (hf) res.hf_cpi = hf->evaluate(p, workload.name);
  return res;
}

std::vector<BaselineRow> load_baseline_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("baseline file: cannot open " + path);
  std::vector<BaselineRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw ConfigError("baseline file " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("method") || !j["method"].is_string() ||
        !j.contains("seed") || !j["seed"].is_number() || !j.contains("best_cpi") ||
        !j["best_cpi"].is_number())
      throw ConfigError("baseline file " + path + ":" + std::to_string(lineno) +
                        ": expected {method, seed, best_cpi}");
    BaselineRow r;
    r.method = j["method"].get<std::string>();
    r.seed = j["seed"].get<std::uint64_t>();
    r.best_cpi = j["best_cpi"].get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

std::unique_ptr<HfEvaluator> make_evaluator(const RunConfig& cfg, const DesignSpace& space,
                                            const LfModel& lf) {
  switch (cfg.hf.kind) {
    case HfKind::Synthetic:
      return std::make_unique<SyntheticHf>(lf, cfg.hf.synthetic, cfg.workloads);
    case HfKind::Lf:
      return std::make_unique<LfCpiEvaluator>(lf, cfg.workloads);
    case HfKind::Subprocess:
      return std::make_unique<SubprocessHf>(space, cfg.hf.subprocess);
  }
  throw Error("harness: unknown evaluator kind");
}

namespace {

SeedOutcome run_seed(const RunConfig& cfg, const DesignSpace& space, const LfModel& lf,
                     const AreaModel& area, const WorkloadProfile& prof,
                     const std::string& workload, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  const bool hf_phase = cfg.trainer.hf_budget > 0;
  try {
    SplitMix64 wrng(seed);
    FnnWeights weights = make_default_fnn(space, cfg.fnn.init, wrng);
    for (const PreferenceSpec& pref : cfg.fnn.preferences) {
      const auto target = space.param_index(pref.param);
      if (!target) throw ConfigError("preference: unknown parameter " + pref.param);
      weights.set_preference(pref.group, pref.boundary, *target, pref.strength);
    }

    Trainer tr(space, lf, area, prof, cfg.area_limit, std::move(weights), cfg.trainer, seed);
    tr.lf_train();
    out.lf_point = tr.converged_point();
    out.lf_cpi = lf.evaluate(out.lf_point, prof).cpi;

    if (hf_phase) {
      std::unique_ptr<HfEvaluator> hf = make_evaluator(cfg, space, lf);
      tr.hf_transition(*hf);
      tr.hf_train(*hf);
      out.cpi_h0 = tr.hf_records().front().cpi;
      double best = tr.hf_records().front().cpi;
      for (const HfRecord& r : tr.hf_records()) best = std::min(best, r.cpi);
      out.best_hf_cpi = best;
      out.hf_used = cfg.trainer.hf_budget - tr.hf_budget_remaining();
    }
    out.episodes = tr.episodes_run();

    // Pool of designs this run actually evaluated, for the sampled oracle.
    std::set<std::vector<std::size_t>> seen;
    auto pool_in = [&](const DesignPoint& p) {
      if (seen.insert(p.indices).second) out.evaluated.push_back(p);
    };
    pool_in(out.lf_point);
    for (const auto& [p, ipc] : tr.best_set().entries()) pool_in(p);
    for (const HfRecord& r : tr.hf_records()) pool_in(r.point);

    const std::size_t rs_budget =
        cfg.harness.random_search_budget ? cfg.harness.random_search_budget
                                         : cfg.trainer.hf_budget;
    if (rs_budget > 0) {
      std::unique_ptr<HfEvaluator> ev =
          hf_phase ? make_evaluator(cfg, space, lf)
                   : std::unique_ptr<HfEvaluator>(
                         std::make_unique<LfCpiEvaluator>(lf, cfg.workloads));
      out.random_search = random_search_baseline(space, area, cfg.area_limit, workload, *ev,
                                                 rs_budget, seed);
      pool_in(out.random_search->best_point);
    }

    out.log_lines = tr.log_lines();
    out.checkpoint_text = tr.weights().to_checkpoint_text();
    RuleBase rb = extract(tr.weights(), 0.1);
    rb.provenance = "workload " + workload + ", seed " + std::to_string(seed) + ", " +
                    std::to_string(tr.episodes_run()) + " episodes";
    out.rule_report = render_report(rb, tr.weights());
    out.rules_jsonl_text = rules_jsonl(rb);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

void append_workload_text(std::ostringstream& os, const RunConfig& cfg,
                          const WorkloadReport& wr, bool hf_phase) {
  os << "=== workload " << wr.workload << " ===\n";
  os << "oracle: cpi " << fmt(wr.oracle.best_cpi) << " ("
     << (wr.oracle.method == OracleMethod::Exhaustive ? "exhaustive" : "sampled") << ", "
     << wr.oracle.samples_evaluated << " designs evaluated)\n";
  os << "hill-climb: lf cpi " << fmt(wr.hill_climb.lf_cpi);
  if (wr.hill_climb.hf_cpi) os << ", hf cpi " << fmt(*wr.hill_climb.hf_cpi);
  os << " (" << wr.hill_climb.lf_evaluations << " lf evaluations)\n";

  if (hf_phase) {
    os << std::left << std::setw(6) << "seed" << std::setw(10) << "episodes" << std::setw(12)
       << "lf_cpi" << std::setw(12) << "cpi_h0" << std::setw(12) << "best_hf" << std::setw(12)
       << "regret_hf" << std::setw(12) << "improve" << std::setw(9) << "hf_used" << std::setw(12)
       << "random" << "\n";
  } else {
    os << std::left << std::setw(6) << "seed" << std::setw(10) << "episodes" << std::setw(12)
       << "lf_cpi" << std::setw(12) << "regret_lf" << std::setw(12) << "random" << "\n";
  }

  std::vector<double> best_col, regret_col, improve_col, random_col, lf_col;
  for (const SeedOutcome& so : wr.seeds) {
    if (!so.ok) {
      os << std::left << std::setw(6) << so.seed << "error: " << so.error << "\n";
      continue;
    }
    os << std::left << std::setw(6) << so.seed << std::setw(10) << so.episodes << std::setw(12)
       << fmt(so.lf_cpi);
    lf_col.push_back(so.lf_cpi);
    if (hf_phase) {
      os << std::setw(12) << fmt(so.cpi_h0.value()) << std::setw(12)
         << fmt(so.best_hf_cpi.value()) << std::setw(12) << fmt(so.metrics->regret_hf)
         << std::setw(12) << fmt(so.metrics->improvement) << std::setw(9) << so.hf_used;
      best_col.push_back(so.best_hf_cpi.value());
      regret_col.push_back(so.metrics->regret_hf);
      improve_col.push_back(so.metrics->improvement);
    } else {
      os << std::setw(12) << fmt(std::max(0.0, so.lf_cpi - wr.oracle.best_cpi));
    }
    if (so.random_search)
      os << std::setw(12) << fmt(so.random_search->best_cpi);
    else
      os << std::setw(12) << "-";
    if (so.random_search) random_col.push_back(so.random_search->best_cpi);
    os << "\n";
  }

  if (!lf_col.empty()) {
    if (hf_phase && !best_col.empty()) {
      os << "aggregate: best_hf mean " << fmt(mean(best_col)) << ", median "
         << fmt(median(best_col)) << "; regret_hf median " << fmt(median(regret_col))
         << "; improvement median " << fmt(median(improve_col));
    } else {
      os << "aggregate: lf_cpi mean " << fmt(mean(lf_col)) << ", median "
         << fmt(median(lf_col));
    }
    if (!random_col.empty())
      os << "; random median " << fmt(median(random_col));
    os << "\n";
  }
  for (const BaselineRow& row : wr.external)
    os << "external: " << row.method << " seed " << row.seed << " cpi " << fmt(row.best_cpi)
       << "\n";
  (void)cfg;
  os << "\n";
}

}  // namespace

ExperimentReport run_experiment(const RunConfig& cfg, bool write_artifacts) {
  const DesignSpace& space = cfg.space;
  LfModel lf(space, cfg.model);
  AreaModel area(space, cfg.area, cfg.model);
  const bool hf_phase = cfg.trainer.hf_budget > 0;

  std::vector<BaselineRow> external;
  for (const std::string& path : cfg.harness.baseline_files) {
    std::vector<BaselineRow> rows = load_baseline_file(path);
    external.insert(external.end(), rows.begin(), rows.end());
  }

  ExperimentReport rep;
  for (std::size_t wi = 0; wi < cfg.experiment_workloads.size(); ++wi) {
    const std::string& name = cfg.experiment_workloads[wi];
    const WorkloadProfile& prof = cfg.workloads.at(name);

    WorkloadReport wr;
    wr.workload = name;
    wr.external = external;

    std::vector<std::future<SeedOutcome>> jobs;
    jobs.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds)
      jobs.push_back(std::async(std::launch::async, run_seed, std::cref(cfg), std::cref(space),
                                std::cref(lf), std::cref(area), std::cref(prof), std::cref(name),
                                seed));
    for (auto& f : jobs) wr.seeds.push_back(f.get());

    std::vector<DesignPoint> pool;
    for (const SeedOutcome& so : wr.seeds)
      pool.insert(pool.end(), so.evaluated.begin(), so.evaluated.end());

    OracleConfig ocfg;
    ocfg.exhaustive_cap = cfg.harness.exhaustive_cap;
    ocfg.sample_floor = cfg.harness.sample_floor;
    ocfg.seed = 0x5eedull + wi;
    std::unique_ptr<HfEvaluator> oracle_eval =
        hf_phase ? make_evaluator(cfg, space, lf)
                 : std::unique_ptr<HfEvaluator>(std::make_unique<LfCpiEvaluator>(lf, cfg.workloads));
    wr.oracle = oracle(space, area, cfg.area_limit, name, *oracle_eval, ocfg, pool);

    std::unique_ptr<HfEvaluator> climb_eval;
    if (hf_phase) climb_eval = make_evaluator(cfg, space, lf);
    wr.hill_climb =
        hill_climb_baseline(space, lf, area, cfg.area_limit, prof, climb_eval.get());

    for (SeedOutcome& so : wr.seeds)
      if (so.ok && so.cpi_h0 && so.best_hf_cpi)
        so.metrics = make_run_metrics(*so.cpi_h0, *so.best_hf_cpi, wr.oracle.best_cpi);

    rep.workloads.push_back(std::move(wr));
  }

  // ---- single-threaded report assembly ----
  std::ostringstream os;
  os << "design-space exploration report\n";
  os << "space size: " << space.size() << ", area limit: " << fmt(cfg.area_limit)
     << " mm^2, seeds:";
  for (std::uint64_t s : cfg.seeds) os << " " << s;
  os << "\n";
  os << "evaluator: "
     << (hf_phase ? (cfg.hf.kind == HfKind::Synthetic
                         ? "synthetic"
                         : (cfg.hf.kind == HfKind::Subprocess ? "subprocess" : "lf"))
                  : "lf (no hf budget)")
     << ", hf budget: " << cfg.trainer.hf_budget << "\n\n";
  for (const WorkloadReport& wr : rep.workloads) append_workload_text(os, cfg, wr, hf_phase);

  if (rep.workloads.size() > 1) {
    // Multi-workload summary averages CPI across workload profiles per seed.
    os << "=== cross-workload summary (CPI averaged over workload profiles) ===\n";
    std::vector<double> oracle_cpis;
    for (const WorkloadReport& wr : rep.workloads) oracle_cpis.push_back(wr.oracle.best_cpi);
    os << "oracle mean cpi: " << fmt(mean(oracle_cpis)) << "\n";
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      std::vector<double> per_seed;
      bool all_ok = true;
      for (const WorkloadReport& wr : rep.workloads) {
        const SeedOutcome& so = wr.seeds[si];
        if (!so.ok) {
          all_ok = false;
          break;
        }
        per_seed.push_back(so.best_hf_cpi ? *so.best_hf_cpi : so.lf_cpi);
      }
      if (all_ok)
        os << "seed " << cfg.seeds[si] << ": mean best cpi " << fmt(mean(per_seed)) << "\n";
      else
        os << "seed " << cfg.seeds[si] << ": incomplete (at least one workload failed)\n";
    }
    os << "\n";
  }
  rep.text = os.str();

  // Structured records, one JSON object per line.
  {
    ordered_json hdr;
    hdr["type"] = "experiment";
    hdr["space_size"] = space.size();
    hdr["area_limit"] = cfg.area_limit;
    hdr["seeds"] = cfg.seeds;
    hdr["workloads"] = cfg.experiment_workloads;
    hdr["hf_budget"] = cfg.trainer.hf_budget;
    rep.records.push_back(hdr.dump());
  }
  for (const WorkloadReport& wr : rep.workloads) {
    ordered_json jw;
    jw["type"] = "oracle";
    jw["workload"] = wr.workload;
    jw["method"] = wr.oracle.method == OracleMethod::Exhaustive ? "exhaustive" : "sampled";
    jw["best_cpi"] = wr.oracle.best_cpi;
    jw["best_design"] = space.values(wr.oracle.best_point);
    jw["samples_evaluated"] = wr.oracle.samples_evaluated;
    rep.records.push_back(jw.dump());

    ordered_json jh;
    jh["type"] = "hill_climb";
    jh["workload"] = wr.workload;
    jh["lf_cpi"] = wr.hill_climb.lf_cpi;
    if (wr.hill_climb.hf_cpi) jh["hf_cpi"] = *wr.hill_climb.hf_cpi;
    jh["best_design"] = space.values(wr.hill_climb.best_point);
    jh["lf_evaluations"] = wr.hill_climb.lf_evaluations;
    rep.records.push_back(jh.dump());

    for (const SeedOutcome& so : wr.seeds) {
      ordered_json js;
      js["type"] = "seed_result";
      js["workload"] = wr.workload;
      js["seed"] = so.seed;
      js["ok"] = so.ok;
      if (!so.ok) {
        js["error"] = so.error;
        rep.records.push_back(js.dump());
        continue;
      }
      js["episodes"] = so.episodes;
      js["lf_design"] = space.values(so.lf_point);
      js["lf_cpi"] = so.lf_cpi;
      if (so.cpi_h0) js["cpi_h0"] = *so.cpi_h0;
      if (so.best_hf_cpi) js["best_hf_cpi"] = *so.best_hf_cpi;
      if (so.metrics) {
        js["regret_lf"] = so.metrics->regret_lf;
        js["regret_hf"] = so.metrics->regret_hf;
        js["improvement"] = so.metrics->improvement;
        js["lf_beat_oracle"] = so.metrics->lf_beat_oracle;
        js["hf_beat_oracle"] = so.metrics->hf_beat_oracle;
      }
      js["hf_used"] = so.hf_used;
      if (so.random_search) {
        js["random_best_cpi"] = so.random_search->best_cpi;
        js["random_evaluations"] = so.random_search->evaluations;
      }
      rep.records.push_back(js.dump());
    }
    for (const BaselineRow& row : wr.external) {
      ordered_json je;
      je["type"] = "external_baseline";
      je["workload"] = wr.workload;
      je["method"] = row.method;
      je["seed"] = row.seed;
      je["best_cpi"] = row.best_cpi;
      rep.records.push_back(je.dump());
    }
  }

  if (write_artifacts) {
    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    auto write_file = [&](const fs::path& p, const std::string& text) {
      std::ofstream f(p);
      if (!f) throw Error("harness: cannot write " + p.string());
      f << text;
    };
    write_file(out_dir / "report.txt", rep.text);
    {
      std::string lines;
      for (const std::string& r : rep.records) lines += r + "\n";
      write_file(out_dir / "report.jsonl", lines);
    }
    write_file(out_dir / "effective_config.json", config_to_json(cfg).dump(2) + "\n");
    for (const WorkloadReport& wr : rep.workloads) {
      const std::string wl = sanitize(wr.workload);
      for (const SeedOutcome& so : wr.seeds) {
        if (!so.ok) continue;
        const std::string stem = wl + "_seed" + std::to_string(so.seed);
        std::string log;
        for (const std::string& l : so.log_lines) log += l + "\n";
        write_file(out_dir / (stem + "_log.jsonl"), log);
        write_file(out_dir / (stem + "_checkpoint.json"), so.checkpoint_text);
        write_file(out_dir / (stem + "_rules.txt"), so.rule_report);
        write_file(out_dir / (stem + "_rules.jsonl"), so.rules_jsonl_text);
      }
    }
  }
  return rep;
}

}  // namespace archdse
