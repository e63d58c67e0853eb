#include "archdse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "archdse/errors.hpp"
#include "archdse/rule_extract.hpp"

namespace archdse {

using ordered_json = nlohmann::ordered_json;

void BestSet::insert(const DesignPoint& p, double lf_ipc) {
  for (auto& [q, ipc] : entries_) {
    if (q == p) {
      ipc = std::max(ipc, lf_ipc);
      std::stable_sort(entries_.begin(), entries_.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      return;
    }
  }
  entries_.emplace_back(p, lf_ipc);
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (entries_.size() > capacity_) entries_.resize(capacity_);
}

const DesignPoint& BestSet::sample(SplitMix64& rng) const {
  if (entries_.empty()) throw Error("best set is empty");
  return entries_[rng.next() % entries_.size()].first;
}

Trainer::Trainer(const DesignSpace& space, const LfModel& lf, const AreaModel& area,
                 const WorkloadProfile& workload, double area_limit, FnnWeights weights,
                 TrainerConfig cfg, std::uint64_t seed)
    : space_(&space),
      lf_(&lf),
      area_(&area),
      workload_(workload),
      area_limit_(area_limit),
      weights_(std::move(weights)),
      cfg_(cfg),
      seed_(seed),
      rng_(seed),
      best_set_(cfg.best_set_capacity),
      hf_budget_remaining_(cfg.hf_budget) {
  workload_.validate();
  if (!(cfg_.epsilon > 0)) throw ConfigError("trainer: epsilon must be positive");
  if (!(cfg_.learning_rate > 0)) throw ConfigError("trainer: learning_rate must be positive");
  if (cfg_.batch_size == 0) throw ConfigError("trainer: batch_size must be >= 1");
  if (cfg_.patience == 0) throw ConfigError("trainer: patience must be >= 1");
  if (!(cfg_.temperature > 0) || !(cfg_.temperature_floor > 0))
    throw ConfigError("trainer: temperatures must be positive");
  const DesignPoint start = space_->smallest_point();
  if (area_->area(start) > area_limit_)
    throw InfeasibleSpace("area limit " + std::to_string(area_limit_) +
                          " mm^2 is below the smallest design's area " +
                          std::to_string(area_->area(start)));
  // The starting design is observed by construction.
  ipc_star_ = lf_ipc(start);
}

double Trainer::lf_ipc(const DesignPoint& p) const { return lf_->evaluate(p, workload_).ipc; }

double Trainer::current_temperature() const {
  const double t =
      cfg_.temperature * std::pow(cfg_.temperature_decay, static_cast<double>(episode_counter_));
  return std::max(cfg_.temperature_floor, t);
}

const DesignPoint& Trainer::converged_point() const {
  if (!converged_point_) throw Error("trainer: LF phase has not run yet");
  return *converged_point_;
}

std::optional<DesignPoint> Trainer::best_hf_point() const {
  if (hf_records_.empty()) return std::nullopt;
  const HfRecord* best = &hf_records_.front();
  for (const auto& r : hf_records_)
    if (r.cpi < best->cpi) best = &r;
  return best->point;
}

EpisodeTrace Trainer::rollout(Phase phase, const DesignPoint& start, HfEvaluator* hf) {
  EpisodeTrace tr;
  tr.fidelity = phase;
  tr.start_point = start;
  DesignPoint p = start;
  const double temperature = current_temperature();

  LfResult lf = lf_->evaluate(p, workload_);
  for (;;) {
    std::vector<std::uint8_t> mask;
    if (phase == Phase::LF) {
      mask = lf_->action_mask(lf, p);
    } else {
      // HF phase is no longer restricted by the analytical gradient.
      mask.assign(space_->param_count(), 0);
      for (std::size_t j = 0; j < space_->param_count(); ++j)
        mask[j] = !space_->at_maximum(p, j);
    }
    if (std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end()) break;

    EpisodeStep step;
    step.metric_values = {lf.ipc};
    step.group_values = space_->group_values(p);
    step.mask = mask;
    step.temperature = temperature;

    FnnOutput out = weights_.forward(step.metric_values, step.group_values);
    weights_.add_firing_mass(out);
    std::vector<double> probs = policy_distribution(out, mask, temperature);

    const double u = rng_.uniform01();
    double acc = 0.0;
    std::size_t action = space_->param_count();
    std::size_t last_unmasked = space_->param_count();
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (!mask[j]) continue;
      last_unmasked = j;
      acc += probs[j];
      if (u < acc) {
        action = j;
        break;
      }
    }
    if (action == space_->param_count()) action = last_unmasked;  // float dust

    DesignPoint tentative = space_->increment(p, action);
    if (area_->area(tentative) > area_limit_) break;  // revert; episode ends valid

    step.action = action;
    step.log_prob = std::log(probs[action]);
    tr.steps.push_back(std::move(step));
    p = std::move(tentative);
    lf = lf_->evaluate(p, workload_);
  }

  tr.final_point = p;
  tr.final_area = area_->area(p);
  if (phase == Phase::LF) {
    tr.final_cpi = lf.cpi;
    tr.final_ipc = lf.ipc;
  } else {
    if (!hf) throw Error("trainer: HF rollout needs an evaluator");
    tr.final_cpi = hf_cpi_memo(p, *hf);
    tr.final_ipc = 1.0 / tr.final_cpi;
  }
  return tr;
}

DesignPoint Trainer::greedy_point() {
  DesignPoint p = space_->smallest_point();
  for (;;) {
    LfResult lf = lf_->evaluate(p, workload_);
    auto mask = lf_->action_mask(lf, p);
    if (std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end()) break;
    FnnOutput out = weights_.forward(std::vector<double>{lf.ipc}, space_->group_values(p));
    const std::size_t action = greedy_action(out, mask);
    DesignPoint tentative = space_->increment(p, action);
    if (area_->area(tentative) > area_limit_) break;
    p = std::move(tentative);
  }
  return p;
}

void Trainer::update_batch(const std::vector<EpisodeTrace>& batch) {
  if (batch.empty()) return;

  FnnGradients acc;
  acc.consequents.assign(weights_.rule_count() * weights_.param_count(), 0.0);
  acc.group_centers.assign(weights_.group_count(), 0.0);

  for (const auto& tr : batch) {
    for (const auto& step : tr.steps) {
      FnnOutput out = weights_.forward(step.metric_values, step.group_values);
      std::vector<double> probs = policy_distribution(out, step.mask, step.temperature);
      // d log pi(a)/d score_p = (1[p=a] - pi_p)/T on the unmasked set.
      std::vector<double> upstream(weights_.param_count(), 0.0);
      for (std::size_t j = 0; j < upstream.size(); ++j) {
        if (!step.mask[j]) continue;
        const double indicator = j == step.action ? 1.0 : 0.0;
        upstream[j] = tr.reward * (indicator - probs[j]) / step.temperature;
      }
      FnnGradients g = weights_.backward(step.metric_values, step.group_values, upstream);
      for (std::size_t k = 0; k < acc.consequents.size(); ++k) acc.consequents[k] += g.consequents[k];
      for (std::size_t k = 0; k < acc.group_centers.size(); ++k)
        acc.group_centers[k] += g.group_centers[k];
    }
  }

  const double scale = 1.0 / static_cast<double>(batch.size());
  for (double& v : acc.consequents) v *= scale;
  for (double& v : acc.group_centers) v *= scale;

  const double lr =
      cfg_.learning_rate * std::pow(cfg_.lr_decay, static_cast<double>(batch_counter_));
  weights_.apply_update(acc, lr);
  ++batch_counter_;
  check_finite();
}

void Trainer::check_finite() {
  if (weights_.all_finite()) return;
  RuleBase rb = extract(weights_, 0.1, 0.0);
  std::string dump = render_report(rb, weights_);
  if (dump.size() > 2000) dump = dump.substr(0, 2000) + "...\n";
  throw DivergenceDetected("weights diverged at episode " + std::to_string(episode_counter_) +
                           "; current rules:\n" + dump);
}

void Trainer::log_episode(const EpisodeTrace& t) {
  ordered_json j;
  j["type"] = "episode";
  j["episode"] = episode_counter_;
  j["phase"] = t.fidelity == Phase::LF ? "lf" : "hf";
  j["seed"] = seed_;
  j["start"] = space_->values(t.start_point);
  j["design"] = space_->values(t.final_point);
  j["area"] = t.final_area;
  j["cpi"] = t.final_cpi;
  j["ipc"] = t.final_ipc;
  j["reward"] = t.reward;
  j["ipc_star"] = ipc_star_;
  j["steps"] = t.steps.size();
  std::vector<std::size_t> actions;
  actions.reserve(t.steps.size());
  for (const EpisodeStep& s : t.steps) actions.push_back(s.action);
  j["actions"] = actions;
  log_lines_.push_back(j.dump());
}

void Trainer::lf_train() {
  const DesignPoint start = space_->smallest_point();
  std::optional<DesignPoint> last_greedy;
  std::size_t stable_checks = 0;
  std::size_t next_checkpoint = cfg_.checkpoint_every;

  while (episode_counter_ < cfg_.max_episodes && !lf_converged_) {
    std::vector<EpisodeTrace> batch;
    while (batch.size() < cfg_.batch_size && episode_counter_ < cfg_.max_episodes) {
      EpisodeTrace tr = rollout(Phase::LF, start, nullptr);
      // Reward against the pre-episode best, then advance the best.
      tr.reward = tr.final_ipc - ipc_star_ + cfg_.epsilon;
      ipc_star_ = std::max(ipc_star_, tr.final_ipc);
      best_set_.insert(tr.final_point, tr.final_ipc);
      log_episode(tr);
      ++episode_counter_;
      batch.push_back(std::move(tr));

      if (cfg_.checkpoint_every && episode_counter_ >= next_checkpoint) {
        checkpoints_.emplace_back(episode_counter_, weights_.to_checkpoint_text());
        ordered_json j;
        j["type"] = "checkpoint";
        j["episode"] = episode_counter_;
        log_lines_.push_back(j.dump());
        next_checkpoint += cfg_.checkpoint_every;
      }
    }
    update_batch(batch);

    DesignPoint g = greedy_point();
    if (last_greedy && g == *last_greedy)
      ++stable_checks;
    else
      stable_checks = 1;
    last_greedy = g;
    if (stable_checks >= cfg_.patience) {
      lf_converged_ = true;
      lf_convergence_episode_ = episode_counter_;
      ordered_json j;
      j["type"] = "lf_converged";
      j["episode"] = episode_counter_;
      j["design"] = space_->values(g);
      log_lines_.push_back(j.dump());
    }
  }
  converged_point_ = greedy_point();
}

double Trainer::hf_cpi_memo(const DesignPoint& p, HfEvaluator& hf) {
  for (const auto& [q, cpi] : hf_memo_)
    if (q == p) return cpi;  // memo hits are free
  if (hf_budget_remaining_ == 0) throw BudgetExhausted("HF budget exhausted");
  const double cpi = hf.evaluate(p, workload_.name);
  --hf_budget_remaining_;
  hf_memo_.emplace_back(p, cpi);
  hf_records_.push_back({p, cpi, hf_budget_remaining_});
  ordered_json j;
  j["type"] = "hf_call";
  j["point"] = space_->values(p);
  j["cpi"] = cpi;
  j["budget_remaining"] = hf_budget_remaining_;
  log_lines_.push_back(j.dump());
  return cpi;
}

void Trainer::hf_transition(HfEvaluator& hf) {
  if (!converged_point_) throw Error("trainer: hf_transition requires lf_train first");
  if (hf_budget_remaining_ < cfg_.hf_subset_size + 1)
    throw BudgetExhausted("HF budget " + std::to_string(hf_budget_remaining_) +
                          " cannot cover the converged design plus subset of " +
                          std::to_string(cfg_.hf_subset_size));

  const double cpi0 = hf_cpi_memo(*converged_point_, hf);
  ipc_h0_ = 1.0 / cpi0;
  ordered_json j;
  j["type"] = "hf_transition";
  j["ipc_h0"] = *ipc_h0_;
  j["cpi_h0"] = cpi0;
  log_lines_.push_back(j.dump());

  const std::size_t n = std::min(cfg_.hf_subset_size, best_set_.size());
  for (std::size_t i = 0; i < n; ++i) hf_cpi_memo(best_set_.entries()[i].first, hf);
}

void Trainer::hf_train(HfEvaluator& hf) {
  if (!ipc_h0_) throw Error("trainer: hf_train requires hf_transition first");
  if (best_set_.size() == 0) throw Error("trainer: best set is empty");

  std::size_t attempts = 0;
  bool out_of_budget = hf_budget_remaining_ == 0;
  while (!out_of_budget && attempts < cfg_.hf_max_episodes) {
    std::vector<EpisodeTrace> batch;
    while (batch.size() < cfg_.batch_size && !out_of_budget && attempts < cfg_.hf_max_episodes) {
      ++attempts;
      const DesignPoint start = best_set_.sample(rng_);
      EpisodeTrace tr;
      try {
        tr = rollout(Phase::HF, start, &hf);
      } catch (const BudgetExhausted&) {
        out_of_budget = true;  // normal termination
        break;
      } catch (const EvaluatorError& e) {
        ordered_json j;
        j["type"] = "hf_skip";
        j["error"] = e.what();
        log_lines_.push_back(j.dump());
        continue;  // sample voided; no budget consumed
      }
      tr.reward = tr.final_ipc - *ipc_h0_ + cfg_.epsilon;
      log_episode(tr);
      ++episode_counter_;
      batch.push_back(std::move(tr));
      if (hf_budget_remaining_ == 0) out_of_budget = true;
    }
    update_batch(batch);
  }
}

RunMetrics make_run_metrics(double cpi_h0, double best_hf_cpi, double oracle_cpi) {
  RunMetrics m;
  m.cpi_h0 = cpi_h0;
  m.best_hf_cpi = best_hf_cpi;
  m.lf_beat_oracle = cpi_h0 < oracle_cpi;
  m.hf_beat_oracle = best_hf_cpi < oracle_cpi;
  m.regret_lf = std::max(0.0, cpi_h0 - oracle_cpi);
  m.regret_hf = std::max(0.0, best_hf_cpi - oracle_cpi);
  if (m.regret_hf > 0)
    m.improvement = m.regret_lf / m.regret_hf;
  else
    m.improvement = m.regret_lf > 0 ? std::numeric_limits<double>::infinity() : 1.0;
  return m;
}

RunMetrics Trainer::compute_metrics(double oracle_cpi) const {
  if (!ipc_h0_) throw Error("trainer: metrics need hf_transition results");
  if (hf_records_.empty()) throw Error("trainer: no HF evaluations recorded");

  double best = hf_records_.front().cpi;
  for (const auto& r : hf_records_) best = std::min(best, r.cpi);
  return make_run_metrics(1.0 / *ipc_h0_, best, oracle_cpi);
}

}  // namespace archdse
