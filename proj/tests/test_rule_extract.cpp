#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "archdse/fnn.hpp"
#include "archdse/rng.hpp"
#include "archdse/rule_extract.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace archdse;
using namespace archdse::testing;

namespace {

MembershipFn sig(double c, double s) {
  MembershipFn m;
  m.kind = MfKind::Sigmoid;
  m.center = c;
  m.slope = s;
  return m;
}

MembershipFn inv_sig(double c, double s) {
  MembershipFn m = sig(c, s);
  m.kind = MfKind::InvSigmoid;
  return m;
}

MembershipFn bell(double c, double w) {
  MembershipFn m;
  m.kind = MfKind::Bell;
  m.center = c;
  m.width = w;
  return m;
}

/// One metric ("metric": low/avg/high) and two groups ("g1", "g2": low/enough).
/// 3 * 2 * 2 = 12 rules over params {"p", "q"}.
FnnWeights tiny_net(double g1_center = 0.5, double g2_center = 0.5) {
  std::vector<FuzzyInputSpec> inputs;
  FuzzyInputSpec metric;
  metric.name = "metric";
  metric.role = InputRole::Metric;
  metric.range_lo = 0.0;
  metric.range_hi = 5.0;
  metric.sets = {{"low", inv_sig(1.25, 1.6)}, {"avg", bell(2.5, 1.25)}, {"high", sig(3.75, 1.6)}};
  inputs.push_back(metric);
  for (std::string name : {"g1", "g2"}) {
    FuzzyInputSpec g;
    g.name = name;
    g.role = InputRole::ParamGroup;
    g.range_lo = 32;
    g.range_hi = 160;
    double c = name == "g1" ? g1_center : g2_center;
    MembershipFn lo = inv_sig(c, 6.0);
    lo.trainable_center = true;
    MembershipFn hi = sig(c, 6.0);
    hi.trainable_center = true;
    g.sets = {{"low", lo}, {"enough", hi}};
    inputs.push_back(g);
  }
  return FnnWeights(std::move(inputs), {"p", "q"});
}

std::size_t idx(const FnnWeights& w, std::size_t m, std::size_t a, std::size_t b) {
  std::vector<std::size_t> labels{m, a, b};
  return w.rule_index(labels);
}

}  // namespace

TEST_CASE("golden merge: two rules collapse over g2") {
  FnnWeights w = tiny_net();
  // {high, low, low} and {high, low, enough} agree except on g2 and jointly
  // cover both of its sets, so the g2 literal must drop.
  w.consequent(idx(w, 2, 0, 0), 0) = 0.3;
  w.consequent(idx(w, 2, 0, 1), 0) = 0.5;

  RuleBase rb = extract(w, 0.1, 0.0);
  REQUIRE(rb.rules.size() == 1);
  const Rule& r = rb.rules[0];
  CHECK(r.target_param == "p");
  CHECK(r.consequent_value == doctest::Approx(0.4));
  REQUIRE(r.antecedents.size() == 2);
  CHECK(r.antecedents[0].first == "metric");
  CHECK(r.antecedents[0].second == "high");
  CHECK(r.antecedents[1].first == "g1");
  CHECK(r.antecedents[1].second == "low");
  CHECK(r.source_rule_indices == std::vector<std::size_t>{idx(w, 2, 0, 0), idx(w, 2, 0, 1)});

  std::string report = render_report(rb, w);
  CHECK(report.find("IF metric is high and g1 is low THEN p can increase") != std::string::npos);
}

TEST_CASE("no merge without full coverage") {
  FnnWeights w = tiny_net();
  // Only 2 of metric's 3 labels present: the literal must survive.
  w.consequent(idx(w, 0, 1, 0), 1) = 0.4;
  w.consequent(idx(w, 2, 1, 0), 1) = 0.4;

  RuleBase rb = extract(w, 0.1, 0.0);
  REQUIRE(rb.rules.size() == 2);
  for (const Rule& r : rb.rules) {
    CHECK(r.antecedents.size() == 3);
    CHECK(r.target_param == "q");
  }
}

TEST_CASE("three-way metric merge") {
  FnnWeights w = tiny_net();
  for (std::size_t m : {0u, 1u, 2u}) w.consequent(idx(w, m, 1, 0), 0) = 0.2 + 0.1 * double(m);

  RuleBase rb = extract(w, 0.1, 0.0);
  REQUIRE(rb.rules.size() == 1);
  CHECK(rb.rules[0].antecedents ==
        std::vector<std::pair<std::string, std::string>>{{"g1", "enough"}, {"g2", "low"}});
  CHECK(rb.rules[0].consequent_value == doctest::Approx(0.3));
}

TEST_CASE("cascading merge collapses to the empty antecedent") {
  FnnWeights w = tiny_net();
  // Every rule fires the same consequent: after the fixpoint the whole
  // column is one unconditional rule.
  for (std::size_t r = 0; r < w.rule_count(); ++r) w.consequent(r, 0) = 0.25;

  RuleBase rb = extract(w, 0.1, 0.0);
  REQUIRE(rb.rules.size() == 1);
  CHECK(rb.rules[0].antecedents.empty());
  CHECK(rb.rules[0].consequent_value == doctest::Approx(0.25));
  CHECK(rb.rules[0].source_rule_indices.size() == w.rule_count());

  std::string report = render_report(rb, w);
  CHECK(report.find("IF (any state) THEN p can increase") != std::string::npos);
}

TEST_CASE("zero consequents yield an empty rule base") {
  FnnWeights w = tiny_net();
  RuleBase rb = extract(w, 0.1, 0.0);
  CHECK(rb.rules.empty());
  CHECK(rb.column_norms.empty());
  CHECK(render_report(rb, w).find("no rules above threshold") != std::string::npos);
}

TEST_CASE("untrained default network stays near-empty at default thresholds") {
  DesignSpace space = full_space();
  SplitMix64 rng(3);
  FnnWeights w = make_default_fnn(space, FnnInitConfig{}, rng);
  // No training, no firing history: the auto theta_norm resolves to 0 and the
  // init noise (|c| <= 0.01) sits below theta_c everywhere.
  RuleBase rb = extract(w, 0.1);
  CHECK(rb.active_rule_count == 0);
  CHECK(rb.theta_norm == 0.0);
  CHECK(rb.rules.empty());
}

TEST_CASE("column norm threshold and automatic theta_norm") {
  FnnWeights w = tiny_net();
  // Column p: total 1-norm 0.5; column q: 1.2.
  w.consequent(idx(w, 2, 0, 0), 0) = 0.5;
  for (std::size_t m : {0u, 1u, 2u})
    for (std::size_t a : {0u, 1u}) w.consequent(idx(w, m, a, 1), 1) = 0.2;

  SUBCASE("explicit threshold between the norms") {
    RuleBase rb = extract(w, 0.1, 0.6);
    REQUIRE(rb.column_norms.size() == 1);
    CHECK(rb.column_norms[0].first == "q");
    CHECK(rb.column_norms[0].second == doctest::Approx(1.2));
    for (const Rule& r : rb.rules) CHECK(r.target_param == "q");
  }

  SUBCASE("auto threshold follows firing history") {
    // Mark 12 active rules -> theta_norm = 0.05 * 12 = 0.6: same split.
    FnnOutput out;
    out.normalized_firing.assign(w.rule_count(), 1.0);
    w.add_firing_mass(out);
    RuleBase rb = extract(w, 0.1);
    CHECK(rb.active_rule_count == 12);
    CHECK(rb.theta_norm == doctest::Approx(0.6));
    REQUIRE(rb.column_norms.size() == 1);
    CHECK(rb.column_norms[0].first == "q");
  }
}

TEST_CASE("extraction properties on random consequents") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    FnnWeights w = tiny_net();
    for (std::size_t r = 0; r < w.rule_count(); ++r)
      for (std::size_t p = 0; p < w.param_count(); ++p)
        w.consequent(r, p) = 0.6 * (rng.uniform01() - 0.3);

    const double theta_c = 0.1;
    RuleBase rb = extract(w, theta_c, 0.0);

    std::set<std::pair<std::string, std::size_t>> covered;  // (param, source rule)
    for (const Rule& r : rb.rules) {
      // Antecedent inputs are unique and in declaration order.
      std::set<std::string> inputs;
      for (const auto& [input, label] : r.antecedents) CHECK(inputs.insert(input).second);

      // Every source entry really is above threshold, and the value is
      // their mean.
      auto pi = std::find(w.param_names().begin(), w.param_names().end(), r.target_param);
      REQUIRE(pi != w.param_names().end());
      std::size_t p = std::size_t(pi - w.param_names().begin());
      double sum = 0.0;
      for (std::size_t src : r.source_rule_indices) {
        CHECK(w.consequent(src, p) > theta_c);
        sum += w.consequent(src, p);
        CHECK(covered.insert({r.target_param, src}).second);  // no double-counted source
      }
      CHECK(r.consequent_value ==
            doctest::Approx(sum / double(r.source_rule_indices.size())));
    }

    // Conversely every above-threshold entry is represented exactly once.
    for (std::size_t p = 0; p < w.param_count(); ++p)
      for (std::size_t r = 0; r < w.rule_count(); ++r)
        if (w.consequent(r, p) > theta_c)
          CHECK(covered.count({w.param_names()[p], r}) == 1);
  }
}

TEST_CASE("extraction is deterministic") {
  SplitMix64 rng(99);
  FnnWeights w = tiny_net();
  for (std::size_t r = 0; r < w.rule_count(); ++r)
    for (std::size_t p = 0; p < w.param_count(); ++p)
      w.consequent(r, p) = 0.6 * (rng.uniform01() - 0.3);

  RuleBase a = extract(w, 0.1, 0.0);
  RuleBase b = extract(w, 0.1, 0.0);
  CHECK(render_report(a, w) == render_report(b, w));
  CHECK(rules_jsonl(a) == rules_jsonl(b));
}

TEST_CASE("diagnostics flag clamped and saturated centers") {
  SUBCASE("clamped low") {
    FnnWeights w = tiny_net(0.0, 0.5);
    std::string report = render_report(extract(w, 0.1, 0.0), w);
    CHECK(report.find("center of 'g1' is clamped") != std::string::npos);
    CHECK(report.find("center of 'g2' is clamped") == std::string::npos);
  }
  SUBCASE("saturated 'enough' antecedent") {
    FnnWeights w = tiny_net(0.95, 0.5);
    w.consequent(idx(w, 2, 1, 0), 0) = 0.5;  // g1 is enough
    RuleBase rb = extract(w, 0.1, 0.0);
    std::string report = render_report(rb, w);
    CHECK(report.find("already near the top of its range") != std::string::npos);
    CHECK(report.find("consider extending the design space") != std::string::npos);
  }
  SUBCASE("healthy centers report none") {
    FnnWeights w = tiny_net(0.5, 0.5);
    w.consequent(idx(w, 2, 0, 0), 0) = 0.5;
    std::string report = render_report(extract(w, 0.1, 0.0), w);
    CHECK(report.find("- none") != std::string::npos);
  }
}

TEST_CASE("report shows centers on both scales") {
  FnnWeights w = tiny_net(0.25, 0.5);
  std::string report = render_report(extract(w, 0.1, 0.0), w);
  // g1 range is [32, 160]; center 0.25 -> raw 64.
  CHECK(report.find("g1 low|enough: center 0.25 (raw 64)") != std::string::npos);
  CHECK(report.find("metric low: center 1.25") != std::string::npos);
}

TEST_CASE("jsonl round-trips the rule structure") {
  FnnWeights w = tiny_net();
  w.consequent(idx(w, 2, 0, 0), 0) = 0.3;
  w.consequent(idx(w, 2, 0, 1), 0) = 0.5;
  w.consequent(idx(w, 0, 1, 1), 1) = 0.9;

  RuleBase rb = extract(w, 0.1, 0.0);
  std::istringstream lines(rules_jsonl(rb));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    REQUIRE(n < rb.rules.size());
    const Rule& r = rb.rules[n];
    CHECK(j["target"] == r.target_param);
    CHECK(j["value"].get<double>() == r.consequent_value);
    REQUIRE(j["antecedents"].size() == r.antecedents.size());
    for (std::size_t i = 0; i < r.antecedents.size(); ++i) {
      CHECK(j["antecedents"][i]["input"] == r.antecedents[i].first);
      CHECK(j["antecedents"][i]["label"] == r.antecedents[i].second);
    }
    CHECK(j["sources"].get<std::vector<std::size_t>>() == r.source_rule_indices);
    ++n;
  }
  CHECK(n == rb.rules.size());
}
