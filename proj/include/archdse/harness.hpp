#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "archdse/config.hpp"
#include "archdse/design_space.hpp"
#include "archdse/hf_eval.hpp"
#include "archdse/lf_model.hpp"
#include "archdse/trainer.hpp"

namespace archdse {

enum class OracleMethod { Exhaustive, RandomSampled };

struct OracleResult {
  DesignPoint best_point;
  double best_cpi = 0.0;
  std::uint64_t samples_evaluated = 0;
  OracleMethod method = OracleMethod::Exhaustive;
};

struct OracleConfig {
  std::uint64_t exhaustive_cap = 10000;
  std::size_t sample_floor = 500;
  std::uint64_t seed = 0;
};

/// Best design the evaluator can find: exhaustive when the space is small
/// enough, else uniform rejection sampling over area-valid designs (at least
/// `sample_floor` of them) plus any caller-supplied pool of designs already
/// seen by the search being judged.
OracleResult oracle(const DesignSpace& space, const AreaModel& area, double area_limit,
                    const std::string& workload, HfEvaluator& eval, const OracleConfig& cfg,
                    const std::vector<DesignPoint>& pool = {});

struct SearchResult {
  DesignPoint best_point;
  double best_cpi = 0.0;
  std::size_t evaluations = 0;
};

/// Uniformly samples `budget` area-valid designs and keeps the best.
SearchResult random_search_baseline(const DesignSpace& space, const AreaModel& area,
                                    double area_limit, const std::string& workload,
                                    HfEvaluator& eval, std::size_t budget, std::uint64_t seed);

struct HillClimbResult {
  DesignPoint best_point;
  double lf_cpi = 0.0;
  std::optional<double> hf_cpi;  // final design validated on the HF evaluator
  std::size_t lf_evaluations = 0;
};

/// Steepest-ascent single-increment climb on the analytical model from the
/// smallest design; deterministic.
HillClimbResult hill_climb_baseline(const DesignSpace& space, const LfModel& lf,
                                    const AreaModel& area, double area_limit,
                                    const WorkloadProfile& workload, HfEvaluator* hf);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t episodes = 0;
  DesignPoint lf_point;            // converged greedy design
  double lf_cpi = 0.0;             // its LF CPI
  std::optional<double> cpi_h0;    // HF score of the converged design
  std::optional<double> best_hf_cpi;
  std::size_t hf_used = 0;
  std::optional<RunMetrics> metrics;  // filled once the oracle is known
  std::optional<SearchResult> random_search;
  std::vector<DesignPoint> evaluated;  // pool for the sampled oracle
  std::vector<std::string> log_lines;
  std::string checkpoint_text;
  std::string rule_report;
  std::string rules_jsonl_text;
};

struct BaselineRow {
  std::string method;
  std::uint64_t seed = 0;
  double best_cpi = 0.0;
};

struct WorkloadReport {
  std::string workload;
  OracleResult oracle;
  HillClimbResult hill_climb;
  std::vector<SeedOutcome> seeds;
  std::vector<BaselineRow> external;
};

struct ExperimentReport {
  std::vector<WorkloadReport> workloads;
  std::string text;                   // operator-facing table
  std::vector<std::string> records;   // line-delimited structured form
};

/// One {method, seed, best_cpi} record per line.
std::vector<BaselineRow> load_baseline_file(const std::string& path);

/// Builds the configured evaluator (synthetic, subprocess, or the LF adapter).
std::unique_ptr<HfEvaluator> make_evaluator(const RunConfig& cfg, const DesignSpace& space,
                                            const LfModel& lf);

/// The full protocol: per workload and seed, LF training, the budgeted HF
/// phase, regret metrics against the oracle, and the random-search baseline
/// at the same budget. Seeds run as independent parallel jobs. When
/// `write_artifacts` is set, logs / checkpoints / rule reports / the report
/// pair are written under cfg.output_dir.
ExperimentReport run_experiment(const RunConfig& cfg, bool write_artifacts = true);

}  // namespace archdse
