#include "archdse/fnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "archdse/design_space.hpp"
#include "archdse/errors.hpp"

namespace archdse {

namespace {

double stable_sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace

double MembershipFn::eval(double x) const {
  switch (kind) {
    case MfKind::Sigmoid:
      return stable_sigmoid(slope * (x - center));
    case MfKind::InvSigmoid:
      return 1.0 - stable_sigmoid(slope * (x - center));
    case MfKind::Bell: {
      const double t = (x - center) / width;
      return 1.0 / (1.0 + std::pow(t * t, shape));
    }
  }
  return 0.0;
}

double MembershipFn::center_grad(double x) const {
  switch (kind) {
    case MfKind::Sigmoid: {
      const double m = stable_sigmoid(slope * (x - center));
      return -slope * m * (1.0 - m);
    }
    case MfKind::InvSigmoid: {
      const double s = stable_sigmoid(slope * (x - center));
      return slope * s * (1.0 - s);
    }
    case MfKind::Bell: {
      const double t = (x - center) / width;
      if (t == 0.0) return 0.0;
      const double mu = 1.0 / (1.0 + std::pow(t * t, shape));
      const double sgn = t > 0.0 ? 1.0 : -1.0;
      return (2.0 * shape / width) * sgn * std::pow(std::abs(t), 2.0 * shape - 1.0) * mu * mu;
    }
  }
  return 0.0;
}

FnnWeights::FnnWeights(std::vector<FuzzyInputSpec> inputs, std::vector<std::string> param_names)
    : inputs_(std::move(inputs)), param_names_(std::move(param_names)) {
  if (inputs_.empty()) throw ConfigError("fnn: no inputs");
  if (param_names_.empty()) throw ConfigError("fnn: no output parameters");

  bool seen_group = false;
  for (const auto& in : inputs_) {
    if (in.role == InputRole::Metric) {
      if (seen_group) throw ConfigError("fnn: metric inputs must precede group inputs");
      if (in.sets.size() != 3)
        throw ConfigError("fnn: metric input '" + in.name + "' must have exactly 3 sets");
      ++n_metrics_;
    } else {
      seen_group = true;
      if (in.sets.size() != 2)
        throw ConfigError("fnn: group input '" + in.name + "' must have exactly 2 sets");
      if (in.sets[0].second.center != in.sets[1].second.center)
        throw ConfigError("fnn: group input '" + in.name + "' sets must share one center");
      ++n_groups_;
    }
    for (const auto& [label, mf] : in.sets) {
      (void)label;
      if (mf.kind == MfKind::Bell) {
        if (!(mf.width > 0)) throw ConfigError("fnn: bell width must be positive");
        if (!(mf.shape >= 1)) throw ConfigError("fnn: bell shape must be >= 1");
      } else if (!(mf.slope > 0)) {
        throw ConfigError("fnn: sigmoid slope must be positive");
      }
    }
  }

  // Rule count 3^metrics * 2^groups, guarded against overflow.
  double expect = std::pow(3.0, static_cast<double>(n_metrics_)) *
                  std::pow(2.0, static_cast<double>(n_groups_));
  if (expect > 1e7) throw ConfigError("fnn: rule base too large");
  n_rules_ = 1;
  for (std::size_t i = 0; i < n_metrics_; ++i) n_rules_ *= 3;
  for (std::size_t i = 0; i < n_groups_; ++i) n_rules_ *= 2;
  if (static_cast<double>(n_rules_) != expect)
    throw Error("fnn: rule count does not match 3^metrics * 2^groups");

  consequents_.assign(n_rules_ * param_count(), 0.0);
  frozen_.assign(n_rules_ * param_count(), 0);
  firing_mass_.assign(n_rules_, 0.0);

  labels_.resize(n_rules_ * inputs_.size());
  for (std::size_t r = 0; r < n_rules_; ++r) {
    std::size_t rem = r;
    for (std::size_t i = inputs_.size(); i-- > 0;) {
      const std::size_t radix = inputs_[i].role == InputRole::Metric ? 3 : 2;
      labels_[r * inputs_.size() + i] = static_cast<std::uint8_t>(rem % radix);
      rem /= radix;
    }
  }
}

std::vector<std::size_t> FnnWeights::rule_labels(std::size_t r) const {
  std::vector<std::size_t> out(inputs_.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) out[i] = labels_[r * inputs_.size() + i];
  return out;
}

std::size_t FnnWeights::rule_index(std::span<const std::size_t> labels) const {
  std::size_t r = 0;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const std::size_t radix = inputs_[i].role == InputRole::Metric ? 3 : 2;
    r = r * radix + labels[i];
  }
  return r;
}

FnnOutput FnnWeights::forward(std::span<const double> metric_values,
                              std::span<const double> group_values) const {
  if (metric_values.size() != n_metrics_ || group_values.size() != n_groups_)
    throw Error("fnn forward: input arity mismatch");

  const std::size_t n_in = inputs_.size();
  FnnOutput out;
  out.memberships.resize(n_in);
  for (std::size_t i = 0; i < n_in; ++i) {
    const double x = i < n_metrics_ ? metric_values[i] : group_values[i - n_metrics_];
    out.memberships[i].resize(inputs_[i].sets.size());
    for (std::size_t s = 0; s < inputs_[i].sets.size(); ++s)
      out.memberships[i][s] = inputs_[i].sets[s].second.eval(x);
  }

  out.firing.resize(n_rules_);
  double total = 0.0;
  for (std::size_t r = 0; r < n_rules_; ++r) {
    double f = 1.0;
    for (std::size_t i = 0; i < n_in; ++i) f *= out.memberships[i][labels_[r * n_in + i]];
    out.firing[r] = f;
    total += f;
  }
  if (!(total >= 1e-30))
    throw DegenerateFiring("total firing strength underflowed; membership centers out of range");

  out.normalized_firing.resize(n_rules_);
  for (std::size_t r = 0; r < n_rules_; ++r) out.normalized_firing[r] = out.firing[r] / total;

  out.scores.assign(param_count(), 0.0);
  for (std::size_t r = 0; r < n_rules_; ++r) {
    const double w = out.normalized_firing[r];
    const double* row = &consequents_[r * param_count()];
    for (std::size_t p = 0; p < param_count(); ++p) out.scores[p] += w * row[p];
  }
  return out;
}

FnnGradients FnnWeights::backward(std::span<const double> metric_values,
                                  std::span<const double> group_values,
                                  std::span<const double> upstream) const {
  if (upstream.size() != param_count()) throw Error("fnn backward: upstream arity mismatch");
  const FnnOutput out = forward(metric_values, group_values);
  const std::size_t n_in = inputs_.size();
  const std::size_t P = param_count();

  FnnGradients g;
  g.consequents.assign(n_rules_ * P, 0.0);
  g.group_centers.assign(n_groups_, 0.0);

  // dL/dC and dL/dw_norm.
  std::vector<double> d_norm(n_rules_, 0.0);
  for (std::size_t r = 0; r < n_rules_; ++r) {
    const double w = out.normalized_firing[r];
    const double* row = &consequents_[r * P];
    double acc = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      if (!frozen_[r * P + p]) g.consequents[r * P + p] = w * upstream[p];
      acc += upstream[p] * row[p];
    }
    d_norm[r] = acc;
  }

  // Through the normalization layer: dL/df_q = (d_norm_q - sum_r d_norm_r w_r) / S.
  double total = 0.0;
  for (double f : out.firing) total += f;
  double dot = 0.0;
  for (std::size_t r = 0; r < n_rules_; ++r) dot += d_norm[r] * out.normalized_firing[r];
  std::vector<double> d_fire(n_rules_);
  for (std::size_t r = 0; r < n_rules_; ++r) d_fire[r] = (d_norm[r] - dot) / total;

  // Through the product t-norm: per rule, prefix/suffix membership products.
  std::vector<std::vector<double>> d_mu(n_in);
  for (std::size_t i = 0; i < n_in; ++i) d_mu[i].assign(inputs_[i].sets.size(), 0.0);
  std::vector<double> prefix(n_in + 1), suffix(n_in + 1);
  for (std::size_t r = 0; r < n_rules_; ++r) {
    if (d_fire[r] == 0.0) continue;
    prefix[0] = 1.0;
    for (std::size_t i = 0; i < n_in; ++i)
      prefix[i + 1] = prefix[i] * out.memberships[i][labels_[r * n_in + i]];
    suffix[n_in] = 1.0;
    for (std::size_t i = n_in; i-- > 0;)
      suffix[i] = suffix[i + 1] * out.memberships[i][labels_[r * n_in + i]];
    for (std::size_t i = 0; i < n_in; ++i) {
      const std::size_t s = labels_[r * n_in + i];
      d_mu[i][s] += d_fire[r] * prefix[i] * suffix[i + 1];
    }
  }

  // Only param-group centers are trainable; metric centers stay frozen.
  for (std::size_t gi = 0; gi < n_groups_; ++gi) {
    const std::size_t i = n_metrics_ + gi;
    const auto& in = inputs_[i];
    if (!in.sets[0].second.trainable_center) continue;
    const double x = group_values[gi];
    double acc = 0.0;
    for (std::size_t s = 0; s < in.sets.size(); ++s)
      acc += d_mu[i][s] * in.sets[s].second.center_grad(x);
    g.group_centers[gi] = acc;
  }
  return g;
}

void FnnWeights::apply_update(const FnnGradients& g, double learning_rate) {
  for (std::size_t k = 0; k < consequents_.size(); ++k)
    if (!frozen_[k]) consequents_[k] += learning_rate * g.consequents[k];
  for (std::size_t gi = 0; gi < n_groups_; ++gi) {
    auto& in = inputs_[n_metrics_ + gi];
    if (!in.sets[0].second.trainable_center) continue;
    double c = in.sets[0].second.center + learning_rate * g.group_centers[gi];
    c = std::clamp(c, 0.0, 1.0);
    for (auto& [label, mf] : in.sets) {
      (void)label;
      mf.center = c;
    }
  }
}

void FnnWeights::add_firing_mass(const FnnOutput& out) {
  for (std::size_t r = 0; r < n_rules_; ++r) firing_mass_[r] += out.normalized_firing[r];
}

bool FnnWeights::all_finite() const {
  for (double c : consequents_)
    if (!std::isfinite(c)) return false;
  for (const auto& in : inputs_)
    for (const auto& [label, mf] : in.sets) {
      (void)label;
      if (!std::isfinite(mf.center)) return false;
    }
  return true;
}

void FnnWeights::set_preference(const std::string& group_name, double boundary,
                                std::size_t target_param, double strength) {
  if (target_param >= param_count())
    throw UnknownParam("preference target parameter index out of range");
  if (!(boundary >= 0.0 && boundary <= 1.0))
    throw ConfigError("preference boundary must lie in the group's normalized [0,1] range");

  std::size_t input_idx = n_metrics_;
  for (;; ++input_idx) {
    if (input_idx >= inputs_.size())
      throw UnknownGroup("no parameter group named '" + group_name + "'");
    if (inputs_[input_idx].role == InputRole::ParamGroup && inputs_[input_idx].name == group_name)
      break;
  }

  auto& in = inputs_[input_idx];
  for (auto& [label, mf] : in.sets) {
    (void)label;
    mf.center = boundary;
    mf.trainable_center = false;
  }

  const std::size_t n_in = inputs_.size();
  for (std::size_t r = 0; r < n_rules_; ++r) {
    if (labels_[r * n_in + input_idx] != 0) continue;  // 'low' antecedent only
    consequents_[r * param_count() + target_param] += strength;
    frozen_[r * param_count() + target_param] = 1;
  }
}

std::vector<double> policy_distribution(const FnnOutput& out, std::span<const std::uint8_t> mask,
                                        double temperature) {
  if (!(temperature > 0)) throw Error("policy: temperature must be positive");
  const std::size_t P = out.scores.size();
  if (mask.size() != P) throw Error("policy: mask arity mismatch");

  double max_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t p = 0; p < P; ++p) {
    if (!mask[p]) continue;
    any = true;
    max_score = std::max(max_score, out.scores[p]);
  }
  if (!any) throw EmptyMask("no selectable parameter");

  std::vector<double> prob(P, 0.0);
  double z = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    if (!mask[p]) continue;
    prob[p] = std::exp((out.scores[p] - max_score) / temperature);
    z += prob[p];
  }
  for (double& q : prob) q /= z;
  return prob;
}

std::size_t greedy_action(const FnnOutput& out, std::span<const std::uint8_t> mask) {
  std::size_t best = out.scores.size();
  for (std::size_t p = 0; p < out.scores.size(); ++p) {
    if (!mask[p]) continue;
    if (best == out.scores.size() || out.scores[p] > out.scores[best]) best = p;
  }
  if (best == out.scores.size()) throw EmptyMask("no selectable parameter");
  return best;
}

FnnWeights make_default_fnn(const DesignSpace& space, const FnnInitConfig& cfg, SplitMix64& rng) {
  const double range = cfg.metric_range_hi - cfg.metric_range_lo;
  if (!(range > 0)) throw ConfigError("fnn: metric range must be non-empty");

  std::vector<double> centers = cfg.metric_centers;
  if (centers.empty()) {
    centers = {cfg.metric_range_lo + 0.25 * range, cfg.metric_range_lo + 0.50 * range,
               cfg.metric_range_lo + 0.75 * range};
  }
  if (centers.size() != 3) throw ConfigError("fnn: metric_centers needs exactly 3 entries");

  const double slope = cfg.sigmoid_slope_scale / range;
  const double bell_width = range / cfg.bell_width_divisor;

  std::vector<FuzzyInputSpec> inputs;
  FuzzyInputSpec metric;
  metric.name = "ipc";
  metric.role = InputRole::Metric;
  metric.range_lo = cfg.metric_range_lo;
  metric.range_hi = cfg.metric_range_hi;
  metric.sets = {
      {"low", {MfKind::InvSigmoid, centers[0], slope, 1.0, 2.0, false}},
      {"avg", {MfKind::Bell, centers[1], 1.0, bell_width, cfg.bell_shape, false}},
      {"high", {MfKind::Sigmoid, centers[2], slope, 1.0, 2.0, false}},
  };
  inputs.push_back(std::move(metric));

  for (std::size_t g = 0; g < space.group_count(); ++g) {
    const auto& grp = space.groups()[g];
    double center = cfg.group_center;
    if (auto it = cfg.group_center_overrides.find(grp.name); it != cfg.group_center_overrides.end())
      center = it->second;
    FuzzyInputSpec in;
    in.name = grp.name;
    in.role = InputRole::ParamGroup;
    auto [lo, hi] = space.group_range(g);
    in.range_lo = lo;
    in.range_hi = hi;
    in.sets = {
        {"low", {MfKind::InvSigmoid, center, cfg.group_slope, 1.0, 2.0, true}},
        {"enough", {MfKind::Sigmoid, center, cfg.group_slope, 1.0, 2.0, true}},
    };
    inputs.push_back(std::move(in));
  }

  std::vector<std::string> names;
  names.reserve(space.param_count());
  for (const auto& p : space.params()) names.push_back(p.name);

  FnnWeights w(std::move(inputs), std::move(names));
  for (std::size_t r = 0; r < w.rule_count(); ++r)
    for (std::size_t p = 0; p < w.param_count(); ++p)
      w.consequent(r, p) = rng.uniform(-cfg.consequent_noise, cfg.consequent_noise);
  return w;
}

// --- checkpoint serialization ---

namespace {

using ordered_json = nlohmann::ordered_json;

const char* kind_name(MfKind k) {
  switch (k) {
    case MfKind::Sigmoid: return "sigmoid";
    case MfKind::InvSigmoid: return "inv_sigmoid";
    case MfKind::Bell: return "bell";
  }
  return "";
}

MfKind kind_from_name(const std::string& s) {
  if (s == "sigmoid") return MfKind::Sigmoid;
  if (s == "inv_sigmoid") return MfKind::InvSigmoid;
  if (s == "bell") return MfKind::Bell;
  throw ConfigError("checkpoint: unknown membership kind '" + s + "'");
}

}  // namespace

std::string FnnWeights::to_checkpoint_text() const {
  ordered_json doc;
  doc["format"] = "archdse-fnn-checkpoint";
  doc["version"] = 1;
  doc["inputs"] = ordered_json::array();
  for (const auto& in : inputs_) {
    ordered_json j;
    j["name"] = in.name;
    j["role"] = in.role == InputRole::Metric ? "metric" : "param_group";
    j["range"] = {in.range_lo, in.range_hi};
    j["sets"] = ordered_json::array();
    for (const auto& [label, mf] : in.sets) {
      ordered_json s;
      s["label"] = label;
      s["kind"] = kind_name(mf.kind);
      s["center"] = mf.center;
      s["slope"] = mf.slope;
      s["width"] = mf.width;
      s["shape"] = mf.shape;
      s["trainable_center"] = mf.trainable_center;
      j["sets"].push_back(std::move(s));
    }
    doc["inputs"].push_back(std::move(j));
  }
  doc["params"] = param_names_;
  doc["consequents"] = consequents_;
  doc["frozen"] = frozen_;
  doc["firing_mass"] = firing_mass_;
  return doc.dump(2) + "\n";
}

FnnWeights FnnWeights::from_checkpoint_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("checkpoint: parse error: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "archdse-fnn-checkpoint")
      throw ConfigError("checkpoint: wrong format tag");
    if (doc.at("version").get<int>() != 1) throw ConfigError("checkpoint: unsupported version");

    std::vector<FuzzyInputSpec> inputs;
    for (const auto& j : doc.at("inputs")) {
      FuzzyInputSpec in;
      in.name = j.at("name").get<std::string>();
      in.role = j.at("role").get<std::string>() == "metric" ? InputRole::Metric : InputRole::ParamGroup;
      in.range_lo = j.at("range").at(0).get<double>();
      in.range_hi = j.at("range").at(1).get<double>();
      for (const auto& s : j.at("sets")) {
        MembershipFn mf;
        mf.kind = kind_from_name(s.at("kind").get<std::string>());
        mf.center = s.at("center").get<double>();
        mf.slope = s.at("slope").get<double>();
        mf.width = s.at("width").get<double>();
        mf.shape = s.at("shape").get<double>();
        mf.trainable_center = s.at("trainable_center").get<bool>();
        in.sets.emplace_back(s.at("label").get<std::string>(), mf);
      }
      inputs.push_back(std::move(in));
    }

    FnnWeights w(std::move(inputs), doc.at("params").get<std::vector<std::string>>());
    auto cons = doc.at("consequents").get<std::vector<double>>();
    auto froz = doc.at("frozen").get<std::vector<std::uint8_t>>();
    auto mass = doc.at("firing_mass").get<std::vector<double>>();
    if (cons.size() != w.consequents_.size() || froz.size() != w.frozen_.size() ||
        mass.size() != w.firing_mass_.size())
      throw ConfigError("checkpoint: matrix shape does not match input specs");
    w.consequents_ = std::move(cons);
    w.frozen_ = std::move(froz);
    w.firing_mass_ = std::move(mass);
    return w;
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed document: ") + e.what());
  }
}

}  // namespace archdse
