#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "archdse/design_space.hpp"
#include "archdse/fnn.hpp"
#include "archdse/hf_eval.hpp"
#include "archdse/lf_model.hpp"
#include "archdse/rng.hpp"

namespace archdse {

enum class Phase { LF, HF };

struct EpisodeStep {
  std::vector<double> metric_values;
  std::vector<double> group_values;
  std::vector<std::uint8_t> mask;
  std::size_t action = 0;
  double log_prob = 0.0;
  double temperature = 1.0;
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  DesignPoint start_point;
  DesignPoint final_point;
  double final_area = 0.0;
  double final_cpi = 0.0;
  double final_ipc = 0.0;
  double reward = 0.0;
  Phase fidelity = Phase::LF;
};

/// The observed-best designs H, ranked by LF IPC, deduplicated, capacity K.
class BestSet {
 public:
  explicit BestSet(std::size_t capacity) : capacity_(capacity) {}

  void insert(const DesignPoint& p, double lf_ipc);
  const std::vector<std::pair<DesignPoint, double>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const DesignPoint& sample(SplitMix64& rng) const;

 private:
  std::size_t capacity_;
  std::vector<std::pair<DesignPoint, double>> entries_;  // sorted by ipc desc
};

struct HfRecord {
  DesignPoint point;
  double cpi = 0.0;
  std::size_t budget_remaining = 0;
};

struct TrainerConfig {
  double epsilon = 0.05;            // reward offset so the best episode earns +eps
  double learning_rate = 0.05;
  double lr_decay = 0.99;           // per update batch
  std::size_t batch_size = 16;
  std::size_t max_episodes = 2000;
  std::size_t patience = 5;         // consecutive identical greedy designs
  double temperature = 1.0;
  double temperature_decay = 0.995; // per episode
  double temperature_floor = 0.1;
  std::size_t best_set_capacity = 32;
  std::size_t hf_subset_size = 4;   // H entries scored at the transition
  std::size_t hf_budget = 10;       // successful HF design evaluations
  std::size_t hf_max_episodes = 200;
  std::size_t checkpoint_every = 0; // episodes; 0 disables
};

struct RunMetrics {
  double cpi_h0 = 0.0;         // HF CPI of the LF-converged design
  double best_hf_cpi = 0.0;    // min over every HF-evaluated design
  double regret_lf = 0.0;      // clamped at 0
  double regret_hf = 0.0;      // clamped at 0
  double improvement = 0.0;    // regret_lf / regret_hf (inf when regret_hf = 0)
  bool lf_beat_oracle = false;
  bool hf_beat_oracle = false;
};

/// Regret bookkeeping: how far each fidelity track ended up from the oracle,
/// and the LF/HF regret ratio. Negative regrets clamp to 0 with a flag.
RunMetrics make_run_metrics(double cpi_h0, double best_hf_cpi, double oracle_cpi);

/// The multi-fidelity REINFORCE loop. LF phase: model-based rollouts under
/// the gradient mask until the greedy design stabilizes. HF phase: unmasked
/// episodes started from the observed-best set, scored by the expensive
/// evaluator under a strict budget. One instance is one seeded run; rollouts
/// are sequential so runs are bit-reproducible.
class Trainer {
 public:
  Trainer(const DesignSpace& space, const LfModel& lf, const AreaModel& area,
          const WorkloadProfile& workload, double area_limit, FnnWeights weights,
          TrainerConfig cfg, std::uint64_t seed);

  /// One sampled episode. LF phase masks actions by the analytical gradient;
  /// HF phase only by at-maximum. The HF evaluator scores the final design
  /// (consuming one budget token unless the design was already evaluated).
  EpisodeTrace rollout(Phase phase, const DesignPoint& start, HfEvaluator* hf);

  /// Deterministic argmax rollout under the LF mask; no RNG, no logging.
  DesignPoint greedy_point();

  void lf_train();
  void hf_transition(HfEvaluator& hf);
  void hf_train(HfEvaluator& hf);

  /// REINFORCE update over a batch of rewarded traces (public for tests).
  void update_batch(const std::vector<EpisodeTrace>& batch);

  RunMetrics compute_metrics(double oracle_cpi) const;

  const FnnWeights& weights() const { return weights_; }
  FnnWeights& weights() { return weights_; }
  double ipc_star() const { return ipc_star_; }
  std::optional<double> ipc_h0() const { return ipc_h0_; }
  const BestSet& best_set() const { return best_set_; }
  std::size_t episodes_run() const { return episode_counter_; }
  std::size_t hf_budget_remaining() const { return hf_budget_remaining_; }
  const std::vector<HfRecord>& hf_records() const { return hf_records_; }
  bool lf_converged() const { return lf_converged_; }
  std::size_t lf_convergence_episode() const { return lf_convergence_episode_; }
  const DesignPoint& converged_point() const;
  std::optional<DesignPoint> best_hf_point() const;

  /// Line-delimited run log (one record per episode / HF call / checkpoint).
  const std::vector<std::string>& log_lines() const { return log_lines_; }

  /// Periodic weight snapshots (episode, checkpoint text), if enabled.
  const std::vector<std::pair<std::size_t, std::string>>& checkpoints() const {
    return checkpoints_;
  }

  double current_temperature() const;

 private:
  double lf_ipc(const DesignPoint& p) const;
  double hf_cpi_memo(const DesignPoint& p, HfEvaluator& hf);
  void log_episode(const EpisodeTrace& t);
  void check_finite();

  const DesignSpace* space_;
  const LfModel* lf_;
  const AreaModel* area_;
  WorkloadProfile workload_;
  double area_limit_;
  FnnWeights weights_;
  TrainerConfig cfg_;
  std::uint64_t seed_;
  SplitMix64 rng_;

  double ipc_star_ = 0.0;
  std::optional<double> ipc_h0_;
  BestSet best_set_;
  std::size_t episode_counter_ = 0;
  std::size_t batch_counter_ = 0;
  std::size_t hf_budget_remaining_ = 0;
  std::vector<HfRecord> hf_records_;
  std::vector<std::pair<DesignPoint, double>> hf_memo_;
  bool lf_converged_ = false;
  std::size_t lf_convergence_episode_ = 0;
  std::optional<DesignPoint> converged_point_;
  std::vector<std::string> log_lines_;
  std::vector<std::pair<std::size_t, std::string>> checkpoints_;
};

}  // namespace archdse
