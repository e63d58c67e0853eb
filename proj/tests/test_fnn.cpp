#include <array>
#include <cmath>
#include <vector>

#include "archdse/design_space.hpp"
#include "archdse/errors.hpp"
#include "archdse/fnn.hpp"
#include "archdse/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace archdse;
using namespace archdse::testing;

namespace {

/// 1 metric + 2 group inputs, 12 rules, 2 params; group centers c1, c2.
FnnWeights small_fnn(double c1 = 0.5, double c2 = 0.7, bool trainable = true) {
  std::vector<FuzzyInputSpec> inputs(3);
  inputs[0].name = "ipc";
  inputs[0].role = InputRole::Metric;
  inputs[0].range_hi = 5.0;
  inputs[0].sets = {
      {"low", {MfKind::InvSigmoid, 1.25, 1.6, 1.0, 2.0, false}},
      {"avg", {MfKind::Bell, 2.5, 1.0, 1.25, 2.0, false}},
      {"high", {MfKind::Sigmoid, 3.75, 1.6, 1.0, 2.0, false}},
  };
  const double centers[2] = {c1, c2};
  for (int g = 0; g < 2; ++g) {
    auto& in = inputs[1 + g];
    in.name = g == 0 ? "g1" : "g2";
    in.role = InputRole::ParamGroup;
    in.sets = {
        {"low", {MfKind::InvSigmoid, centers[g], 6.0, 1.0, 2.0, trainable}},
        {"enough", {MfKind::Sigmoid, centers[g], 6.0, 1.0, 2.0, trainable}},
    };
  }
  return FnnWeights(std::move(inputs), {"p0", "p1"});
}

void fill_consequents(FnnWeights& w) {
  for (std::size_t r = 0; r < w.rule_count(); ++r)
    for (std::size_t p = 0; p < w.param_count(); ++p)
      w.consequent(r, p) = 0.03 * double(r + 1) - 0.07 * double(p + 1) * double(r % 3);
}

}  // namespace

TEST_CASE("fnn: membership point values") {
  MembershipFn sig{MfKind::Sigmoid, 3.75, 1.6, 1.0, 2.0, false};
  CHECK(sig.eval(3.75) == 0.5);
  CHECK(sig.eval(5.0) == doctest::Approx(0.88079707797788231).epsilon(1e-15));

  MembershipFn inv{MfKind::InvSigmoid, 3.75, 1.6, 1.0, 2.0, false};
  CHECK(inv.eval(5.0) == doctest::Approx(1.0 - 0.88079707797788231).epsilon(1e-12));
  CHECK(inv.eval(3.75) == 0.5);
  CHECK(inv.eval(-100.0) == doctest::Approx(1.0));

  MembershipFn bell{MfKind::Bell, 2.5, 1.0, 1.25, 2.0, false};
  CHECK(bell.eval(2.5) == 1.0);
  CHECK(bell.eval(3.75) == 0.5);                      // |t| = 1
  CHECK(bell.eval(5.0) == doctest::Approx(0.058823529411764705).epsilon(1e-15));
  CHECK(bell.eval(0.0) == bell.eval(5.0));            // symmetric
}

TEST_CASE("fnn: membership center gradients match finite differences") {
  SplitMix64 rng(0xC0FFEE);
  std::array<MembershipFn, 3> fns = {
      MembershipFn{MfKind::Sigmoid, 0.5, 6.0, 1.0, 2.0, true},
      MembershipFn{MfKind::InvSigmoid, 0.5, 6.0, 1.0, 2.0, true},
      MembershipFn{MfKind::Bell, 2.5, 1.0, 1.25, 2.0, false},
  };
  for (auto mf : fns) {
    for (int i = 0; i < 50; ++i) {
      double x = rng.uniform(-1.0, 6.0);
      const double h = 1e-6;
      MembershipFn up = mf, dn = mf;
      up.center += h;
      dn.center -= h;
      double fd = (up.eval(x) - dn.eval(x)) / (2 * h);
      double an = mf.center_grad(x);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("fnn: rule bijection is the fixed mixed-radix order") {
  FnnWeights w = small_fnn();
  REQUIRE(w.rule_count() == 12);

  // Metric digit most significant; the last group toggles fastest.
  CHECK(w.rule_labels(0) == std::vector<std::size_t>{0, 0, 0});
  CHECK(w.rule_labels(1) == std::vector<std::size_t>{0, 0, 1});
  CHECK(w.rule_labels(2) == std::vector<std::size_t>{0, 1, 0});
  CHECK(w.rule_labels(4) == std::vector<std::size_t>{1, 0, 0});
  CHECK(w.rule_labels(11) == std::vector<std::size_t>{2, 1, 1});

  for (std::size_t r = 0; r < w.rule_count(); ++r) {
    auto labels = w.rule_labels(r);
    CHECK(w.rule_index(labels) == r);
  }
}

TEST_CASE("fnn: forward pass matches frozen oracle values") {
  FnnWeights w = small_fnn();
  fill_consequents(w);

  std::vector<double> metrics = {1.9};
  std::vector<double> groups = {0.3, 0.9};
  FnnOutput out = w.forward(metrics, groups);

  CHECK(out.memberships[0][0] == doctest::Approx(0.26114999391575111).epsilon(1e-15));
  CHECK(out.memberships[0][1] == doctest::Approx(0.94959172114031221).epsilon(1e-15));
  CHECK(out.memberships[0][2] == doctest::Approx(0.049266006084026627).epsilon(1e-15));
  CHECK(out.memberships[1][0] == doctest::Approx(0.76852478349901765).epsilon(1e-15));
  CHECK(out.memberships[2][1] == doctest::Approx(0.76852478349901776).epsilon(1e-15));

  CHECK(out.firing[0] == doctest::Approx(0.046457132092559229).epsilon(1e-14));
  CHECK(out.firing[7] == doctest::Approx(0.16892708807509335).epsilon(1e-14));
  CHECK(out.normalized_firing[0] == doctest::Approx(0.036870513817584806).epsilon(1e-14));

  CHECK(out.scores[0] == doctest::Approx(0.073460291275583733).epsilon(1e-13));
  CHECK(out.scores[1] == doctest::Approx(-0.019844370187849521).epsilon(1e-13));
}

TEST_CASE("fnn: zero consequents give zero scores") {
  FnnWeights w = small_fnn();
  FnnOutput out = w.forward(std::vector<double>{2.0}, std::vector<double>{0.5, 0.5});
  for (double s : out.scores) CHECK(s == 0.0);
}

TEST_CASE("fnn: normalized firing is a distribution") {
  FnnWeights w = small_fnn();
  SplitMix64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> m = {rng.uniform(0.0, 5.0)};
    std::vector<double> g = {rng.uniform01(), rng.uniform01()};
    FnnOutput out = w.forward(m, g);
    double sum = 0.0;
    for (double f : out.normalized_firing) {
      CHECK(f >= 0.0);
      sum += f;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("fnn: backward matches finite differences") {
  SplitMix64 rng(0xBACC);
  for (int draw = 0; draw < 100; ++draw) {
    FnnWeights w = small_fnn(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
    for (std::size_t r = 0; r < w.rule_count(); ++r)
      for (std::size_t p = 0; p < w.param_count(); ++p)
        w.consequent(r, p) = rng.uniform(-1.0, 1.0);

    std::vector<double> m = {rng.uniform(0.0, 5.0)};
    std::vector<double> g = {rng.uniform01(), rng.uniform01()};
    std::vector<double> u = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};

    FnnGradients grad = w.backward(m, g, u);
    auto loss = [&](const FnnWeights& net) {
      FnnOutput out = net.forward(m, g);
      return u[0] * out.scores[0] + u[1] * out.scores[1];
    };

    // Consequent gradients.
    for (std::size_t r = 0; r < w.rule_count(); ++r)
      for (std::size_t p = 0; p < w.param_count(); ++p) {
        const double h = 1e-5;
        FnnWeights up = w, dn = w;
        up.consequent(r, p) += h;
        dn.consequent(r, p) -= h;
        double fd = (loss(up) - loss(dn)) / (2 * h);
        double an = grad.consequents[r * w.param_count() + p];
        INFO("draw ", draw, " C[", r, ",", p, "]");
        CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-9}));
      }

    // Group-center gradients; both sets of an input move in lockstep,
    // exactly as apply_update moves them.
    for (std::size_t gi = 0; gi < w.group_count(); ++gi) {
      const double h = 1e-6;
      FnnGradients step;
      step.consequents.assign(w.rule_count() * w.param_count(), 0.0);
      step.group_centers.assign(w.group_count(), 0.0);
      step.group_centers[gi] = 1.0;
      FnnWeights up = w, dn = w;
      up.apply_update(step, h);
      dn.apply_update(step, -h);
      double fd = (loss(up) - loss(dn)) / (2 * h);
      double an = grad.group_centers[gi];
      INFO("draw ", draw, " center ", gi);
      CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-9}));
    }
  }
}

TEST_CASE("fnn: default network for the shipped space") {
  DesignSpace space = full_space();
  SplitMix64 rng(1);
  FnnInitConfig cfg;
  FnnWeights w = make_default_fnn(space, cfg, rng);

  CHECK(w.rule_count() == 384);  // 3^1 * 2^7
  CHECK(w.metric_count() == 1);
  CHECK(w.group_count() == 7);
  CHECK(w.param_count() == 11);
  CHECK(w.param_names()[0] == "L1 Cache Set");

  const auto& metric = w.inputs()[0];
  CHECK(metric.sets[0].second.center == doctest::Approx(1.25));
  CHECK(metric.sets[1].second.center == doctest::Approx(2.5));
  CHECK(metric.sets[2].second.center == doctest::Approx(3.75));
  CHECK(metric.sets[0].second.slope == doctest::Approx(1.6));
  CHECK(metric.sets[1].second.width == doctest::Approx(1.25));
  CHECK(!metric.sets[0].second.trainable_center);

  for (std::size_t gi = 0; gi < w.group_count(); ++gi) {
    const auto& in = w.inputs()[1 + gi];
    CHECK(in.name == space.groups()[gi].name);
    CHECK(in.sets[0].second.center == 0.5);
    CHECK(in.sets[0].second.slope == 6.0);
    CHECK(in.sets[0].second.trainable_center);
  }

  for (std::size_t r = 0; r < w.rule_count(); ++r)
    for (std::size_t p = 0; p < w.param_count(); ++p)
      CHECK(std::abs(w.consequent(r, p)) <= 0.01);

  // Wise initialization moves only the named group's boundary.
  SplitMix64 rng2(1);
  FnnInitConfig cfg2;
  cfg2.group_center_overrides = {{"ROB", 0.8}};
  FnnWeights w2 = make_default_fnn(space, cfg2, rng2);
  std::size_t rob = 1 + *space.group_index("ROB");
  CHECK(w2.inputs()[rob].sets[0].second.center == 0.8);
  CHECK(w2.inputs()[rob].sets[1].second.center == 0.8);
  CHECK(w2.inputs()[1].sets[0].second.center == 0.5);
}

TEST_CASE("fnn: policy distribution is a masked softmax") {
  FnnOutput out;
  out.scores = {1.0, 2.0, 3.0};
  std::vector<std::uint8_t> mask = {1, 1, 1};

  auto prob = policy_distribution(out, mask, 1.0);
  const double z = 1.0 + std::exp(-1.0) + std::exp(-2.0);
  CHECK(prob[2] == doctest::Approx(1.0 / z).epsilon(1e-14));
  CHECK(prob[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-14));
  CHECK(prob[0] == doctest::Approx(std::exp(-2.0) / z).epsilon(1e-14));
  CHECK(std::abs(prob[0] + prob[1] + prob[2] - 1.0) <= 1e-14);

  // Masked-out entries get exactly zero probability.
  mask = {1, 0, 1};
  prob = policy_distribution(out, mask, 1.0);
  CHECK(prob[1] == 0.0);
  CHECK(prob[0] + prob[2] == doctest::Approx(1.0));

  // Low temperature concentrates on the argmax.
  mask = {1, 1, 1};
  prob = policy_distribution(out, mask, 1e-3);
  CHECK(prob[2] >= 0.999);

  // High scores must not overflow.
  out.scores = {1000.0, 2000.0, 3000.0};
  prob = policy_distribution(out, mask, 1.0);
  CHECK(prob[2] == doctest::Approx(1.0));

  std::vector<std::uint8_t> none = {0, 0, 0};
  CHECK_THROWS_AS(policy_distribution(out, none, 1.0), EmptyMask);
  CHECK_THROWS_AS(policy_distribution(out, mask, 0.0), Error);
}

TEST_CASE("fnn: greedy action takes lowest index on ties") {
  FnnOutput out;
  out.scores = {1.0, 3.0, 3.0, 2.0};
  std::vector<std::uint8_t> mask = {1, 1, 1, 1};
  CHECK(greedy_action(out, mask) == 1);

  mask = {1, 0, 1, 1};
  CHECK(greedy_action(out, mask) == 2);

  mask = {0, 0, 0, 0};
  CHECK_THROWS_AS(greedy_action(out, mask), EmptyMask);
}

TEST_CASE("fnn: set_preference pins the boundary and biases low rules") {
  FnnWeights w = small_fnn();
  fill_consequents(w);
  FnnWeights before = w;

  w.set_preference("g2", 0.8, 1, 2.0);

  const auto& in = w.inputs()[2];
  CHECK(in.sets[0].second.center == 0.8);
  CHECK(in.sets[1].second.center == 0.8);
  CHECK(!in.sets[0].second.trainable_center);

  for (std::size_t r = 0; r < w.rule_count(); ++r) {
    auto labels = w.rule_labels(r);
    if (labels[2] == 0) {  // 'g2 is low' antecedent
      CHECK(w.consequent(r, 1) == before.consequent(r, 1) + 2.0);
      CHECK(w.frozen(r, 1));
      CHECK(w.consequent(r, 0) == before.consequent(r, 0));
      CHECK(!w.frozen(r, 0));
    } else {
      CHECK(w.consequent(r, 1) == before.consequent(r, 1));
      CHECK(!w.frozen(r, 1));
    }
  }

  // Frozen entries receive no gradient and never move.
  std::vector<double> m = {1.9}, g = {0.3, 0.9}, u = {0.7, -0.4};
  FnnGradients grad = w.backward(m, g, u);
  for (std::size_t r = 0; r < w.rule_count(); ++r)
    for (std::size_t p = 0; p < w.param_count(); ++p)
      if (w.frozen(r, p)) CHECK(grad.consequents[r * w.param_count() + p] == 0.0);
  FnnWeights after = w;
  after.apply_update(grad, 0.5);
  for (std::size_t r = 0; r < w.rule_count(); ++r)
    if (w.rule_labels(r)[2] == 0) CHECK(after.consequent(r, 1) == w.consequent(r, 1));

  CHECK_THROWS_AS(w.set_preference("nope", 0.5, 0, 1.0), UnknownGroup);
  CHECK_THROWS_AS(w.set_preference("g1", 1.5, 0, 1.0), ConfigError);
  CHECK_THROWS_AS(w.set_preference("g1", 0.5, 99, 1.0), UnknownParam);
}

TEST_CASE("fnn: apply_update clamps group centers to [0,1]") {
  FnnWeights w = small_fnn();
  FnnGradients g;
  g.consequents.assign(w.rule_count() * w.param_count(), 0.0);
  g.group_centers = {100.0, -100.0};
  w.apply_update(g, 1.0);
  CHECK(w.inputs()[1].sets[0].second.center == 1.0);
  CHECK(w.inputs()[1].sets[1].second.center == 1.0);
  CHECK(w.inputs()[2].sets[0].second.center == 0.0);
}

TEST_CASE("fnn: degenerate firing is reported, not propagated") {
  std::vector<FuzzyInputSpec> inputs(1);
  inputs[0].name = "ipc";
  inputs[0].role = InputRole::Metric;
  inputs[0].sets = {
      {"low", {MfKind::InvSigmoid, 0.25, 1e4, 1.0, 2.0, false}},
      {"avg", {MfKind::Bell, 2.5, 1.0, 1e-12, 2.0, false}},
      {"high", {MfKind::Sigmoid, 3.75, 1e4, 1.0, 2.0, false}},
  };
  FnnWeights w(std::move(inputs), {"p0"});
  CHECK_THROWS_AS(w.forward(std::vector<double>{1.0}, std::vector<double>{}), DegenerateFiring);
}

TEST_CASE("fnn: construction rejects malformed nets") {
  CHECK_THROWS_AS(FnnWeights({}, {"p0"}), ConfigError);

  std::vector<FuzzyInputSpec> two_sets(1);
  two_sets[0].name = "ipc";
  two_sets[0].role = InputRole::Metric;
  two_sets[0].sets = {
      {"low", {MfKind::InvSigmoid, 1.0, 1.0, 1.0, 2.0, false}},
      {"high", {MfKind::Sigmoid, 2.0, 1.0, 1.0, 2.0, false}},
  };
  CHECK_THROWS_AS(FnnWeights(std::move(two_sets), {"p0"}), ConfigError);

  std::vector<FuzzyInputSpec> split_center(1);
  split_center[0].name = "g";
  split_center[0].role = InputRole::ParamGroup;
  split_center[0].sets = {
      {"low", {MfKind::InvSigmoid, 0.4, 6.0, 1.0, 2.0, true}},
      {"enough", {MfKind::Sigmoid, 0.6, 6.0, 1.0, 2.0, true}},
  };
  CHECK_THROWS_AS(FnnWeights(std::move(split_center), {"p0"}), ConfigError);
}

TEST_CASE("fnn: checkpoint round-trips byte-identically") {
  DesignSpace space = full_space();
  SplitMix64 rng(42);
  FnnInitConfig cfg;
  FnnWeights w = make_default_fnn(space, cfg, rng);
  w.set_preference("Decode", 0.75, *space.param_index("Decode Width"), 1.5);
  FnnOutput out = w.forward(std::vector<double>{1.2},
                            std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  w.add_firing_mass(out);

  std::string text = w.to_checkpoint_text();
  FnnWeights back = FnnWeights::from_checkpoint_text(text);
  CHECK(back.to_checkpoint_text() == text);

  // Restored net behaves identically.
  FnnOutput out2 = back.forward(std::vector<double>{1.2},
                                std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  for (std::size_t p = 0; p < w.param_count(); ++p) CHECK(out.scores[p] == out2.scores[p]);
  CHECK(back.firing_mass() == w.firing_mass());

  CHECK_THROWS_AS(FnnWeights::from_checkpoint_text("not json"), ConfigError);
  CHECK_THROWS_AS(FnnWeights::from_checkpoint_text("{\"format\":\"other\"}"), ConfigError);
}
