#include "archdse/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "archdse/errors.hpp"

namespace archdse {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

/// Strict object walker: every key must be consumed exactly once.
class Obj {
 public:
  Obj(const ordered_json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
  }

  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!seen_.count(it.key())) fail(path_.empty() ? it.key() : path_ + "." + it.key(),
                                       "unknown field");
  }

  bool has(const std::string& key) {
    if (j_->contains(key)) {
      seen_.insert(key);
      return true;
    }
    return false;
  }

  const ordered_json& get(const std::string& key) {
    if (!j_->contains(key)) fail(sub(key), "required field missing");
    seen_.insert(key);
    return (*j_)[key];
  }

  std::string sub(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = (*j_)[key];
    if (!v.is_number()) fail(sub(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = (*j_)[key];
    if (!v.is_number_unsigned()) fail(sub(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = (*j_)[key];
    if (!v.is_string()) fail(sub(key), "expected a string");
    return v.get<std::string>();
  }

 private:
  const ordered_json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const ordered_json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) fail(path, "expected a number");
    out.push_back(v.get<double>());
  }
  return out;
}

DesignSpace parse_space(const ordered_json& j) {
  Obj o(j, "design_space");
  std::vector<ParameterSpec> params;
  const auto& jp = o.get("parameters");
  if (!jp.is_array() || jp.empty()) fail("design_space.parameters", "expected a non-empty array");
  for (std::size_t i = 0; i < jp.size(); ++i) {
    const std::string path = "design_space.parameters[" + std::to_string(i) + "]";
    Obj p(jp[i], path);
    ParameterSpec spec;
    spec.name = p.get("name").get<std::string>();
    spec.unit = p.string("unit", "");
    spec.values = number_list(p.get("values"), path + ".values");
    params.push_back(std::move(spec));
  }

  std::vector<MergeGroup> groups;
  const auto& jg = o.get("groups");
  if (!jg.is_array() || jg.empty()) fail("design_space.groups", "expected a non-empty array");
  for (std::size_t i = 0; i < jg.size(); ++i) {
    const std::string path = "design_space.groups[" + std::to_string(i) + "]";
    Obj g(jg[i], path);
    MergeGroup grp;
    grp.name = g.get("name").get<std::string>();
    grp.scale_note = g.string("scale_note", "");
    const std::string combine = g.string("combine", "single");
    if (combine == "product")
      grp.combine = Combine::Product;
    else if (combine == "sum")
      grp.combine = Combine::Sum;
    else if (combine == "single")
      grp.combine = Combine::Single;
    else
      fail(path + ".combine", "expected one of product|sum|single");
    const auto& jm = g.get("members");
    if (!jm.is_array() || jm.empty()) fail(path + ".members", "expected parameter names");
    for (const auto& m : jm) {
      if (!m.is_string()) fail(path + ".members", "expected parameter names");
      const std::string name = m.get<std::string>();
      auto it = std::find_if(params.begin(), params.end(),
                             [&](const ParameterSpec& ps) { return ps.name == name; });
      if (it == params.end()) fail(path + ".members", "unknown parameter '" + name + "'");
      grp.members.push_back(static_cast<std::size_t>(it - params.begin()));
    }
    groups.push_back(std::move(grp));
  }
  return DesignSpace(std::move(params), std::move(groups));
}

WorkloadProfile parse_workload(const std::string& name, const ordered_json& j) {
  WorkloadProfile w;
  w.name = name;
  Obj o(j, "workloads." + name);
  w.f_int = o.number("f_int", w.f_int);
  w.f_mem = o.number("f_mem", w.f_mem);
  w.f_fp = o.number("f_fp", w.f_fp);
  w.footprint_bytes = o.number("footprint_bytes", w.footprint_bytes);
  w.ilp_cap = o.number("ilp_cap", w.ilp_cap);
  w.mlp_cap = o.number("mlp_cap", w.mlp_cap);
  w.lat_int = o.number("lat_int", w.lat_int);
  w.lat_fp = o.number("lat_fp", w.lat_fp);
  w.lat_l1_hit = o.number("lat_l1_hit", w.lat_l1_hit);
  w.lat_l2 = o.number("lat_l2", w.lat_l2);
  w.lat_dram = o.number("lat_dram", w.lat_dram);
  w.miss_exponent = o.number("miss_exponent", w.miss_exponent);
  try {
    w.validate();
  } catch (const ConfigError& e) {
    fail("workloads." + name, e.what());
  }
  return w;
}

std::map<std::string, std::string> parse_string_map(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  std::map<std::string, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) fail(path + "." + it.key(), "expected a string");
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

std::map<std::string, double> parse_number_map(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) fail(path + "." + it.key(), "expected a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

}  // namespace

void apply_override(ordered_json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + spec + "' must look like section.field=value");
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const std::exception&) {
    value = raw;  // unquoted strings are strings
  }

  ordered_json* node = &doc;
  std::size_t begin = 0;
  for (;;) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError("override '" + spec + "' has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

RunConfig parse_config(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  Obj root(doc, "");
  RunConfig cfg(parse_space(root.get("design_space")));

  const auto& jw = root.get("workloads");
  if (!jw.is_object() || jw.empty()) fail("workloads", "expected at least one workload");
  for (auto it = jw.begin(); it != jw.end(); ++it)
    cfg.workloads.emplace(it.key(), parse_workload(it.key(), it.value()));

  if (root.has("model")) {
    Obj o(doc["model"], "model");
    cfg.model.tau = o.number("tau", cfg.model.tau);
    cfg.model.frac_guard = o.number("frac_guard", cfg.model.frac_guard);
    cfg.model.line_bytes = o.number("line_bytes", cfg.model.line_bytes);
    cfg.model.eps_g = o.number("eps_g", cfg.model.eps_g);
    if (o.has("role_params")) cfg.model.role_params = parse_string_map(doc["model"]["role_params"], "model.role_params");
    if (o.has("role_fixed")) cfg.model.role_fixed = parse_number_map(doc["model"]["role_fixed"], "model.role_fixed");
  }

  if (root.has("area")) {
    Obj o(doc["area"], "area");
    cfg.area_limit = o.number("limit", cfg.area_limit);
    cfg.area.base_mm2 = o.number("base_mm2", cfg.area.base_mm2);
    cfg.area.cache_per_kb = o.number("cache_per_kb", cfg.area.cache_per_kb);
    cfg.area.mshr_per_entry = o.number("mshr_per_entry", cfg.area.mshr_per_entry);
    cfg.area.decode_quadratic = o.number("decode_quadratic", cfg.area.decode_quadratic);
    cfg.area.rob_per_entry = o.number("rob_per_entry", cfg.area.rob_per_entry);
    cfg.area.fu_per_unit = o.number("fu_per_unit", cfg.area.fu_per_unit);
    cfg.area.iq_per_entry = o.number("iq_per_entry", cfg.area.iq_per_entry);
  }

  if (root.has("fnn")) {
    Obj o(doc["fnn"], "fnn");
    if (o.has("metric_range")) {
      auto r = number_list(doc["fnn"]["metric_range"], "fnn.metric_range");
      if (r.size() != 2 || !(r[0] < r[1])) fail("fnn.metric_range", "expected [lo, hi] with lo < hi");
      cfg.fnn.init.metric_range_lo = r[0];
      cfg.fnn.init.metric_range_hi = r[1];
    }
    if (o.has("metric_centers"))
      cfg.fnn.init.metric_centers = number_list(doc["fnn"]["metric_centers"], "fnn.metric_centers");
    cfg.fnn.init.sigmoid_slope_scale = o.number("sigmoid_slope_scale", cfg.fnn.init.sigmoid_slope_scale);
    cfg.fnn.init.bell_width_divisor = o.number("bell_width_divisor", cfg.fnn.init.bell_width_divisor);
    cfg.fnn.init.bell_shape = o.number("bell_shape", cfg.fnn.init.bell_shape);
    cfg.fnn.init.group_center = o.number("group_center", cfg.fnn.init.group_center);
    cfg.fnn.init.group_slope = o.number("group_slope", cfg.fnn.init.group_slope);
    cfg.fnn.init.consequent_noise = o.number("consequent_noise", cfg.fnn.init.consequent_noise);
    if (o.has("group_center_overrides"))
      cfg.fnn.init.group_center_overrides =
          parse_number_map(doc["fnn"]["group_center_overrides"], "fnn.group_center_overrides");
    if (o.has("preferences")) {
      const auto& jp = doc["fnn"]["preferences"];
      if (!jp.is_array()) fail("fnn.preferences", "expected an array");
      for (std::size_t i = 0; i < jp.size(); ++i) {
        const std::string path = "fnn.preferences[" + std::to_string(i) + "]";
        Obj p(jp[i], path);
        PreferenceSpec pref;
        pref.group = p.get("group").get<std::string>();
        pref.boundary = p.number("boundary", pref.boundary);
        pref.param = p.get("param").get<std::string>();
        pref.strength = p.number("strength", pref.strength);
        if (!cfg.space.group_index(pref.group)) fail(path + ".group", "unknown group '" + pref.group + "'");
        if (!cfg.space.param_index(pref.param)) fail(path + ".param", "unknown parameter '" + pref.param + "'");
        cfg.fnn.preferences.push_back(std::move(pref));
      }
    }
  }

  if (root.has("trainer")) {
    Obj o(doc["trainer"], "trainer");
    cfg.trainer.epsilon = o.number("epsilon", cfg.trainer.epsilon);
    cfg.trainer.learning_rate = o.number("learning_rate", cfg.trainer.learning_rate);
    cfg.trainer.lr_decay = o.number("lr_decay", cfg.trainer.lr_decay);
    cfg.trainer.batch_size = o.unsigned_int("batch_size", cfg.trainer.batch_size);
    cfg.trainer.max_episodes = o.unsigned_int("max_episodes", cfg.trainer.max_episodes);
    cfg.trainer.patience = o.unsigned_int("patience", cfg.trainer.patience);
    cfg.trainer.temperature = o.number("temperature", cfg.trainer.temperature);
    cfg.trainer.temperature_decay = o.number("temperature_decay", cfg.trainer.temperature_decay);
    cfg.trainer.temperature_floor = o.number("temperature_floor", cfg.trainer.temperature_floor);
    cfg.trainer.best_set_capacity = o.unsigned_int("best_set_capacity", cfg.trainer.best_set_capacity);
    cfg.trainer.hf_max_episodes = o.unsigned_int("hf_max_episodes", cfg.trainer.hf_max_episodes);
    cfg.trainer.checkpoint_every = o.unsigned_int("checkpoint_every", cfg.trainer.checkpoint_every);
  }

  if (root.has("hf")) {
    Obj o(doc["hf"], "hf");
    const std::string kind = o.string("kind", "synthetic");
    if (kind == "synthetic")
      cfg.hf.kind = HfKind::Synthetic;
    else if (kind == "subprocess")
      cfg.hf.kind = HfKind::Subprocess;
    else if (kind == "lf")
      cfg.hf.kind = HfKind::Lf;
    else
      fail("hf.kind", "expected one of synthetic|subprocess|lf");
    cfg.trainer.hf_budget = o.unsigned_int("budget", cfg.trainer.hf_budget);
    cfg.trainer.hf_subset_size = o.unsigned_int("subset_size", cfg.trainer.hf_subset_size);
    if (o.has("synthetic")) {
      Obj s(doc["hf"]["synthetic"], "hf.synthetic");
      cfg.hf.synthetic.bias = s.number("bias", cfg.hf.synthetic.bias);
      cfg.hf.synthetic.rob_stall_coeff = s.number("rob_stall_coeff", cfg.hf.synthetic.rob_stall_coeff);
      cfg.hf.synthetic.noise_amplitude = s.number("noise_amplitude", cfg.hf.synthetic.noise_amplitude);
      cfg.hf.synthetic.seed = s.unsigned_int("seed", cfg.hf.synthetic.seed);
    }
    if (o.has("subprocess")) {
      Obj s(doc["hf"]["subprocess"], "hf.subprocess");
      cfg.hf.subprocess.command = s.string("command", "");
      if (s.has("args")) {
        const auto& ja = doc["hf"]["subprocess"]["args"];
        if (!ja.is_array()) fail("hf.subprocess.args", "expected an array of strings");
        for (const auto& a : ja) {
          if (!a.is_string()) fail("hf.subprocess.args", "expected an array of strings");
          cfg.hf.subprocess.args.push_back(a.get<std::string>());
        }
      }
      cfg.hf.subprocess.timeout_seconds = s.number("timeout_seconds", cfg.hf.subprocess.timeout_seconds);
      cfg.hf.subprocess.cost_estimate_seconds =
          s.number("cost_estimate_seconds", cfg.hf.subprocess.cost_estimate_seconds);
    }
    if (cfg.hf.kind == HfKind::Subprocess && cfg.hf.subprocess.command.empty())
      fail("hf.subprocess.command", "required for kind=subprocess");
  }

  if (root.has("harness")) {
    Obj o(doc["harness"], "harness");
    cfg.harness.exhaustive_cap = o.unsigned_int("exhaustive_cap", cfg.harness.exhaustive_cap);
    cfg.harness.sample_floor = o.unsigned_int("sample_floor", cfg.harness.sample_floor);
    cfg.harness.random_search_budget =
        o.unsigned_int("random_search_budget", cfg.harness.random_search_budget);
    if (o.has("baseline_files")) {
      const auto& jb = doc["harness"]["baseline_files"];
      if (!jb.is_array()) fail("harness.baseline_files", "expected an array of paths");
      for (const auto& b : jb) {
        if (!b.is_string()) fail("harness.baseline_files", "expected an array of paths");
        cfg.harness.baseline_files.push_back(b.get<std::string>());
      }
    }
  }

  cfg.seeds = {0, 1, 2, 3, 4};
  if (root.has("experiment")) {
    Obj o(doc["experiment"], "experiment");
    if (o.has("workloads")) {
      const auto& jl = doc["experiment"]["workloads"];
      if (!jl.is_array() || jl.empty()) fail("experiment.workloads", "expected workload names");
      cfg.experiment_workloads.clear();
      for (const auto& w : jl) {
        if (!w.is_string()) fail("experiment.workloads", "expected workload names");
        cfg.experiment_workloads.push_back(w.get<std::string>());
      }
    }
    if (o.has("seeds")) {
      const auto& js = doc["experiment"]["seeds"];
      if (!js.is_array() || js.empty()) fail("experiment.seeds", "expected at least one seed");
      cfg.seeds.clear();
      for (const auto& s : js) {
        if (!s.is_number_unsigned()) fail("experiment.seeds", "seeds must be non-negative integers");
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    }
  }
  if (cfg.experiment_workloads.empty())
    for (const auto& [name, w] : cfg.workloads) cfg.experiment_workloads.push_back(name);
  for (const auto& name : cfg.experiment_workloads)
    if (!cfg.workloads.count(name)) fail("experiment.workloads", "unknown workload '" + name + "'");

  cfg.output_dir = root.string("output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) fail("output_dir", "must not be empty");

  // Semantic validation up front: role bindings resolve, the constraint has at
  // least one feasible design, and the search schedule is sane.
  try {
    LfModel probe_lf(cfg.space, cfg.model);
    AreaModel probe_area(cfg.space, cfg.area, cfg.model);
    const double smallest = probe_area.area(cfg.space.smallest_point());
    if (smallest > cfg.area_limit)
      throw InfeasibleSpace("area.limit " + std::to_string(cfg.area_limit) +
                            " mm^2 is below the smallest design's area " + std::to_string(smallest));
    for (const auto& name : cfg.experiment_workloads)
      (void)probe_lf.evaluate(cfg.space.smallest_point(), cfg.workloads.at(name));
    Trainer probe(cfg.space, probe_lf, probe_area, cfg.workloads.begin()->second, cfg.area_limit,
                  [&] {
                    SplitMix64 rng(0);
                    return make_default_fnn(cfg.space, cfg.fnn.init, rng);
                  }(),
                  cfg.trainer, 0);
    (void)probe;
  } catch (const InfeasibleSpace&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed_override,
                      std::optional<std::string> out_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();

  ordered_json doc;
  try {
    doc = ordered_json::parse(ss.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const std::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  for (const auto& ov : overrides) apply_override(doc, ov);
  if (seed_override) doc["experiment"]["seeds"] = std::vector<std::uint64_t>{*seed_override};
  if (out_override) doc["output_dir"] = *out_override;
  return parse_config(doc.dump());
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;

  ordered_json params = ordered_json::array();
  for (const auto& p : cfg.space.params())
    params.push_back({{"name", p.name}, {"unit", p.unit}, {"values", p.values}});
  ordered_json groups = ordered_json::array();
  for (const auto& g : cfg.space.groups()) {
    ordered_json jg;
    jg["name"] = g.name;
    ordered_json members = ordered_json::array();
    for (std::size_t m : g.members) members.push_back(cfg.space.params()[m].name);
    jg["members"] = members;
    jg["combine"] = g.combine == Combine::Product ? "product"
                    : g.combine == Combine::Sum   ? "sum"
                                                  : "single";
    jg["scale_note"] = g.scale_note;
    groups.push_back(std::move(jg));
  }
  j["design_space"] = {{"parameters", params}, {"groups", groups}};

  ordered_json jw;
  for (const auto& [name, w] : cfg.workloads)
    jw[name] = {{"f_int", w.f_int},
                {"f_mem", w.f_mem},
                {"f_fp", w.f_fp},
                {"footprint_bytes", w.footprint_bytes},
                {"ilp_cap", w.ilp_cap},
                {"mlp_cap", w.mlp_cap},
                {"lat_int", w.lat_int},
                {"lat_fp", w.lat_fp},
                {"lat_l1_hit", w.lat_l1_hit},
                {"lat_l2", w.lat_l2},
                {"lat_dram", w.lat_dram},
                {"miss_exponent", w.miss_exponent}};
  j["workloads"] = std::move(jw);

  j["model"] = {{"tau", cfg.model.tau},
                {"frac_guard", cfg.model.frac_guard},
                {"line_bytes", cfg.model.line_bytes},
                {"eps_g", cfg.model.eps_g},
                {"role_params", cfg.model.role_params},
                {"role_fixed", cfg.model.role_fixed}};

  j["area"] = {{"limit", cfg.area_limit},
               {"base_mm2", cfg.area.base_mm2},
               {"cache_per_kb", cfg.area.cache_per_kb},
               {"mshr_per_entry", cfg.area.mshr_per_entry},
               {"decode_quadratic", cfg.area.decode_quadratic},
               {"rob_per_entry", cfg.area.rob_per_entry},
               {"fu_per_unit", cfg.area.fu_per_unit},
               {"iq_per_entry", cfg.area.iq_per_entry}};

  ordered_json jf;
  jf["metric_range"] = {cfg.fnn.init.metric_range_lo, cfg.fnn.init.metric_range_hi};
  if (!cfg.fnn.init.metric_centers.empty()) jf["metric_centers"] = cfg.fnn.init.metric_centers;
  jf["sigmoid_slope_scale"] = cfg.fnn.init.sigmoid_slope_scale;
  jf["bell_width_divisor"] = cfg.fnn.init.bell_width_divisor;
  jf["bell_shape"] = cfg.fnn.init.bell_shape;
  jf["group_center"] = cfg.fnn.init.group_center;
  jf["group_slope"] = cfg.fnn.init.group_slope;
  jf["consequent_noise"] = cfg.fnn.init.consequent_noise;
  if (!cfg.fnn.init.group_center_overrides.empty())
    jf["group_center_overrides"] = cfg.fnn.init.group_center_overrides;
  if (!cfg.fnn.preferences.empty()) {
    ordered_json jp = ordered_json::array();
    for (const auto& p : cfg.fnn.preferences)
      jp.push_back({{"group", p.group},
                    {"boundary", p.boundary},
                    {"param", p.param},
                    {"strength", p.strength}});
    jf["preferences"] = std::move(jp);
  }
  j["fnn"] = std::move(jf);

  j["trainer"] = {{"epsilon", cfg.trainer.epsilon},
                  {"learning_rate", cfg.trainer.learning_rate},
                  {"lr_decay", cfg.trainer.lr_decay},
                  {"batch_size", cfg.trainer.batch_size},
                  {"max_episodes", cfg.trainer.max_episodes},
                  {"patience", cfg.trainer.patience},
                  {"temperature", cfg.trainer.temperature},
                  {"temperature_decay", cfg.trainer.temperature_decay},
                  {"temperature_floor", cfg.trainer.temperature_floor},
                  {"best_set_capacity", cfg.trainer.best_set_capacity},
                  {"hf_max_episodes", cfg.trainer.hf_max_episodes},
                  {"checkpoint_every", cfg.trainer.checkpoint_every}};

  ordered_json jh;
  jh["kind"] = cfg.hf.kind == HfKind::Synthetic    ? "synthetic"
               : cfg.hf.kind == HfKind::Subprocess ? "subprocess"
                                                   : "lf";
  jh["budget"] = cfg.trainer.hf_budget;
  jh["subset_size"] = cfg.trainer.hf_subset_size;
  jh["synthetic"] = {{"bias", cfg.hf.synthetic.bias},
                     {"rob_stall_coeff", cfg.hf.synthetic.rob_stall_coeff},
                     {"noise_amplitude", cfg.hf.synthetic.noise_amplitude},
                     {"seed", cfg.hf.synthetic.seed}};
  if (!cfg.hf.subprocess.command.empty())
    jh["subprocess"] = {{"command", cfg.hf.subprocess.command},
                        {"args", cfg.hf.subprocess.args},
                        {"timeout_seconds", cfg.hf.subprocess.timeout_seconds},
                        {"cost_estimate_seconds", cfg.hf.subprocess.cost_estimate_seconds}};
  j["hf"] = std::move(jh);

  j["harness"] = {{"exhaustive_cap", cfg.harness.exhaustive_cap},
                  {"sample_floor", cfg.harness.sample_floor},
                  {"random_search_budget", cfg.harness.random_search_budget},
                  {"baseline_files", cfg.harness.baseline_files}};

  j["experiment"] = {{"workloads", cfg.experiment_workloads}, {"seeds", cfg.seeds}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace archdse
