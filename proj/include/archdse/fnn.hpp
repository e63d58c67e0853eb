#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "archdse/rng.hpp"

namespace archdse {

class DesignSpace;

enum class MfKind { Sigmoid, InvSigmoid, Bell };

/// One membership function. Sigmoid kinds use {center, slope}; Bell uses
/// {center, width, shape}. Output is always in (0, 1].
struct MembershipFn {
  MfKind kind = MfKind::Sigmoid;
  double center = 0.0;
  double slope = 1.0;
  double width = 1.0;
  double shape = 2.0;
  bool trainable_center = false;

  double eval(double x) const;
  /// d(eval)/d(center) at x.
  double center_grad(double x) const;
};

enum class InputRole { Metric, ParamGroup };

/// One fuzzy input: a metric carries {low, avg, high} sets, a merged
/// parameter group carries {low, enough}. Group inputs share one center
/// between their two sets and are evaluated on the normalized [0,1] scale;
/// `range` keeps the raw scale for reporting.
struct FuzzyInputSpec {
  std::string name;
  InputRole role = InputRole::Metric;
  double range_lo = 0.0;
  double range_hi = 1.0;
  std::vector<std::pair<std::string, MembershipFn>> sets;
};

struct FnnOutput {
  std::vector<double> scores;             // length P
  std::vector<double> firing;             // length R
  std::vector<double> normalized_firing;  // length R, sums to 1
  std::vector<std::vector<double>> memberships;  // per input, per set
};

struct FnnGradients {
  std::vector<double> consequents;    // R x P row-major
  std::vector<double> group_centers;  // one per param-group input
};

/// The five-layer fuzzy network: fuzzification, product-t-norm rule firing,
/// normalization, TS defuzzification and score output. Rules enumerate every
/// antecedent combination in a fixed mixed-radix order: metric inputs are the
/// most significant digits (base 3, labels low=0 avg=1 high=2), group inputs
/// the least significant (base 2, labels low=0 enough=1). Rule extraction
/// depends on this bijection staying stable.
class FnnWeights {
 public:
  FnnWeights(std::vector<FuzzyInputSpec> inputs, std::vector<std::string> param_names);

  std::size_t rule_count() const { return n_rules_; }
  std::size_t param_count() const { return param_names_.size(); }
  std::size_t metric_count() const { return n_metrics_; }
  std::size_t group_count() const { return n_groups_; }
  const std::vector<FuzzyInputSpec>& inputs() const { return inputs_; }
  const std::vector<std::string>& param_names() const { return param_names_; }

  /// Per-input set labels of rule r (the antecedent combination).
  std::vector<std::size_t> rule_labels(std::size_t r) const;
  std::size_t rule_index(std::span<const std::size_t> labels) const;

  double consequent(std::size_t r, std::size_t p) const { return consequents_[r * param_count() + p]; }
  double& consequent(std::size_t r, std::size_t p) { return consequents_[r * param_count() + p]; }
  bool frozen(std::size_t r, std::size_t p) const { return frozen_[r * param_count() + p] != 0; }
  const std::vector<double>& firing_mass() const { return firing_mass_; }

  FnnOutput forward(std::span<const double> metric_values, std::span<const double> group_values) const;
  FnnGradients backward(std::span<const double> metric_values, std::span<const double> group_values,
                        std::span<const double> upstream_grad_on_scores) const;

  /// Gradient-ascent step; group centers are clamped to [0,1] afterwards.
  void apply_update(const FnnGradients& g, double learning_rate);

  /// Accumulates normalized firing into the per-rule activity statistic.
  void add_firing_mass(const FnnOutput& out);

  bool all_finite() const;

  /// Pins the group's membership boundary and biases every 'group is low'
  /// rule toward the target parameter; touched entries are frozen so later
  /// training cannot unlearn the preference.
  void set_preference(const std::string& group_name, double boundary, std::size_t target_param,
                      double strength);

  std::string to_checkpoint_text() const;
  static FnnWeights from_checkpoint_text(const std::string& text);

 private:
  std::vector<FuzzyInputSpec> inputs_;
  std::vector<std::string> param_names_;
  std::size_t n_metrics_ = 0;
  std::size_t n_groups_ = 0;
  std::size_t n_rules_ = 0;
  std::vector<double> consequents_;     // R x P
  std::vector<std::uint8_t> frozen_;    // R x P
  std::vector<double> firing_mass_;     // R
  std::vector<std::uint8_t> labels_;    // R x inputs, precomputed antecedents
};

/// Softmax(scores/temperature) restricted to unmasked parameters.
/// Throws EmptyMask when nothing is selectable.
std::vector<double> policy_distribution(const FnnOutput& out, std::span<const std::uint8_t> mask,
                                        double temperature);

/// Greedy action: argmax score over unmasked parameters, lowest index wins ties.
std::size_t greedy_action(const FnnOutput& out, std::span<const std::uint8_t> mask);

struct FnnInitConfig {
  double metric_range_lo = 0.0;
  double metric_range_hi = 5.0;
  std::vector<double> metric_centers;  // absolute; empty = 25/50/75% of the range
  double sigmoid_slope_scale = 8.0;    // metric slope = scale / range
  double bell_width_divisor = 4.0;     // metric bell width = range / divisor
  double bell_shape = 2.0;
  double group_center = 0.5;
  double group_slope = 6.0;
  double consequent_noise = 0.01;
  std::map<std::string, double> group_center_overrides;  // wise initialization
};

/// Builds the default network for a design space: one IPC metric input plus
/// one input per merge group, consequents seeded with small uniform noise.
FnnWeights make_default_fnn(const DesignSpace& space, const FnnInitConfig& cfg, SplitMix64& rng);

}  // namespace archdse
