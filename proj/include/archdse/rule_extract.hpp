#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "archdse/fnn.hpp"

namespace archdse {

/// One pruned IF-THEN rule: the surviving antecedent literals and the
/// parameter whose score the rule raises.
struct Rule {
  std::vector<std::pair<std::string, std::string>> antecedents;  // (input, label)
  std::string target_param;
  double consequent_value = 0.0;
  std::vector<std::size_t> source_rule_indices;
};

struct RuleBase {
  std::vector<Rule> rules;
  double theta_c = 0.0;
  double theta_norm = 0.0;               // resolved value actually applied
  std::size_t active_rule_count = 0;     // rules with meaningful firing history
  std::size_t total_rule_count = 0;
  std::vector<std::pair<std::string, double>> column_norms;  // surviving columns
  std::string provenance;                // free text (checkpoint id, episode)
};

/// Translates consequent weights into pruned rules:
///   1. drop parameter columns whose 1-norm is below theta_norm
///      (theta_norm < 0 resolves to 0.05 x count of rules that ever fired);
///   2. keep entries C[r,p] > theta_c;
///   3. decode rule indices through the fixed antecedent bijection;
///   4. merge rules whose labels on one input jointly cover all of that
///      input's sets and agree everywhere else, dropping the literal;
///      repeat to fixpoint (inputs in declaration order, restart on merge).
/// Merged consequent values are the mean over the source entries.
RuleBase extract(const FnnWeights& weights, double theta_c, double theta_norm = -1.0);

/// Plain-text report: rules grouped by target, membership-center table in
/// normalized and raw units, and diagnostics for clamped or saturated
/// centers.
std::string render_report(const RuleBase& rb, const FnnWeights& weights);

/// Line-delimited structured form: one {antecedents, target, value} per rule.
std::string rules_jsonl(const RuleBase& rb);

}  // namespace archdse
