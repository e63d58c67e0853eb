#include "archdse/lf_model.hpp"

#include <cmath>

#include "archdse/errors.hpp"

namespace archdse {

void WorkloadProfile::validate() const {
  auto fail = [this](const std::string& what) {
    throw ConfigError("workload '" + name + "': " + what);
  };
  if (f_int < 0 || f_mem < 0 || f_fp < 0) fail("mix fractions must be non-negative");
  if (std::abs(f_int + f_mem + f_fp - 1.0) > 1e-9) fail("f_int+f_mem+f_fp must sum to 1");
  if (!(footprint_bytes > 0)) fail("footprint_bytes must be positive");
  if (!(ilp_cap >= 1)) fail("ilp_cap must be >= 1");
  if (!(mlp_cap >= 1)) fail("mlp_cap must be >= 1");
  for (double lat : {lat_int, lat_fp, lat_l1_hit, lat_l2, lat_dram})
    if (!(lat > 0)) fail("latencies must be positive");
  if (!(miss_exponent > 0)) fail("miss_exponent must be positive");
}

namespace {

constexpr const char* kRoleKeys[kRoleCount] = {
    "l1_set", "l1_way", "l2_set", "l2_way", "mshr", "decode",
    "rob",    "mem_fu", "int_fu", "fp_fu",  "iq",
};

}  // namespace

const char* role_key(Role r) { return kRoleKeys[static_cast<std::size_t>(r)]; }

std::optional<Role> role_from_key(const std::string& key) {
  for (std::size_t i = 0; i < kRoleCount; ++i)
    if (key == kRoleKeys[i]) return static_cast<Role>(i);
  return std::nullopt;
}

std::map<std::string, std::string> RoleBinding::default_role_params() {
  return {
      {"l1_set", "L1 Cache Set"}, {"l1_way", "L1 Cache Way"},
      {"l2_set", "L2 Cache Set"}, {"l2_way", "L2 Cache Way"},
      {"mshr", "nMSHR"},          {"decode", "Decode Width"},
      {"rob", "ROB Entry"},       {"mem_fu", "Mem FU"},
      {"int_fu", "Int FU"},       {"fp_fu", "FP FU"},
      {"iq", "Issue Queue Entry"},
  };
}

RoleBinding::RoleBinding(const DesignSpace& space,
                         const std::map<std::string, std::string>& role_params,
                         const std::map<std::string, double>& role_fixed)
    : space_(&space) {
  param_index_.fill(-1);
  fixed_value_.fill(0.0);
  for (const auto& [key, val] : role_fixed) {
    if (!role_from_key(key)) throw ConfigError("model: unknown role '" + key + "' in fixed values");
    if (!(val > 0)) throw ConfigError("model: fixed value for role '" + key + "' must be positive");
  }
  for (std::size_t i = 0; i < kRoleCount; ++i) {
    const std::string key = kRoleKeys[i];
    auto it = role_params.find(key);
    if (it != role_params.end()) {
      if (auto idx = space.param_index(it->second)) {
        param_index_[i] = static_cast<int>(*idx);
        continue;
      }
    }
    auto fx = role_fixed.find(key);
    if (fx == role_fixed.end())
      throw ConfigError("model: role '" + key +
                        "' is neither bound to a design parameter nor given a fixed value");
    fixed_value_[i] = fx->second;
  }
  for (const auto& [key, pname] : role_params) {
    if (!role_from_key(key)) throw ConfigError("model: unknown role '" + key + "'");
    (void)pname;
  }
}

double RoleBinding::value(Role r, const DesignPoint& p) const {
  int idx = param_index_[static_cast<std::size_t>(r)];
  if (idx >= 0) return space_->value(p, static_cast<std::size_t>(idx));
  return fixed_value_[static_cast<std::size_t>(r)];
}

double RoleBinding::value(Role r, std::span<const double> values) const {
  int idx = param_index_[static_cast<std::size_t>(r)];
  if (idx >= 0) return values[static_cast<std::size_t>(idx)];
  return fixed_value_[static_cast<std::size_t>(r)];
}

std::optional<std::size_t> RoleBinding::param(Role r) const {
  int idx = param_index_[static_cast<std::size_t>(r)];
  if (idx < 0) return std::nullopt;
  return static_cast<std::size_t>(idx);
}

LfModel::LfModel(const DesignSpace& space, LfModelConfig cfg)
    : space_(&space),
      cfg_(std::move(cfg)),
      binding_(space,
               cfg_.role_params.empty() ? RoleBinding::default_role_params() : cfg_.role_params,
               cfg_.role_fixed) {
  if (!(cfg_.tau > 0)) throw ConfigError("model: tau must be positive");
  if (!(cfg_.line_bytes > 0)) throw ConfigError("model: line_bytes must be positive");
  if (cfg_.eps_g < 0) throw ConfigError("model: eps_g must be non-negative");
}

LfResult LfModel::evaluate(const DesignPoint& p, const WorkloadProfile& w) const {
  return evaluate_values(space_->values(p), w);
}

LfResult LfModel::evaluate_values(std::span<const double> v, const WorkloadProfile& w) const {
  const double tau = cfg_.tau;
  const double guard = cfg_.frac_guard;
  const double alpha = w.miss_exponent;

  const double l1_bytes = binding_.value(Role::L1Set, v) * binding_.value(Role::L1Way, v) * cfg_.line_bytes;
  const double l2_bytes = binding_.value(Role::L2Set, v) * binding_.value(Role::L2Way, v) * cfg_.line_bytes;
  const double mshr = binding_.value(Role::Mshr, v);
  const double decode = binding_.value(Role::Decode, v);
  const double rob = binding_.value(Role::Rob, v);
  const double n_mem = binding_.value(Role::MemFu, v);
  const double n_int = binding_.value(Role::IntFu, v);
  const double n_fp = binding_.value(Role::FpFu, v);
  const double iq = binding_.value(Role::Iq, v);

  // Miss-probability curves; the cap branch is inactive once the footprint
  // fits (ties resolve to the cache branch so growth keeps a gradient).
  const bool m1_active = w.footprint_bytes <= l1_bytes;
  const bool m2_active = w.footprint_bytes <= l2_bytes;
  const double m1 = m1_active ? std::pow(w.footprint_bytes / l1_bytes, alpha) : 1.0;
  const double m2 = m2_active ? std::pow(w.footprint_bytes / l2_bytes, alpha) : 1.0;

  // Strict: at mshr == mlp_cap a further MSHR has nothing left to overlap,
  // so no gradient may flow (the mask must only claim real improvements).
  const bool mshr_active = mshr < w.mlp_cap;
  const double overlap = mshr_active ? mshr : w.mlp_cap;

  const double amat = w.lat_l1_hit + m1 * (w.lat_l2 + m2 * w.lat_dram / overlap);
  const double lambda_bar = w.f_int * w.lat_int + w.f_fp * w.lat_fp + w.f_mem * amat;

  enum BoundIdx { kDecode, kInt, kMem, kFp, kRob, kIq, kIlp, kBoundCount };
  std::array<double, kBoundCount> b{};
  b[kDecode] = decode;
  b[kInt] = n_int / std::max(w.f_int, guard);
  b[kMem] = n_mem / std::max(w.f_mem, guard);
  b[kFp] = n_fp / std::max(w.f_fp, guard);
  b[kRob] = rob / lambda_bar;
  b[kIq] = iq * w.ilp_cap / lambda_bar;
  b[kIlp] = w.ilp_cap;

  double b_min = b[0];
  for (double x : b) b_min = std::min(b_min, x);

  double z = 0.0;
  for (double x : b) z += std::exp(-(x - b_min) / tau);
  const double ipc = b_min - tau * std::log(z);
  if (!(ipc > 0))
    throw NonPositiveIpc("softmin IPC <= 0 (tau too large for the bound scale)");
  const double cpi = 1.0 / ipc;

  // Softmin weights: dIPC/dB_i.
  std::array<double, kBoundCount> wgt{};
  for (std::size_t i = 0; i < std::size_t(kBoundCount); ++i)
    wgt[i] = std::exp(-(b[i] - b_min) / tau) / z;

  // dIPC/dlambda through the rob and iq bounds.
  const double dipc_dlambda = -(wgt[kRob] * rob + wgt[kIq] * iq * w.ilp_cap) / (lambda_bar * lambda_bar);
  const double dlambda_damat = w.f_mem;

  const double damat_dm1 = w.lat_l2 + m2 * w.lat_dram / overlap;
  const double damat_dm2 = m1 * w.lat_dram / overlap;
  const double damat_doverlap = -m1 * m2 * w.lat_dram / (overlap * overlap);

  const double dm1_dl1b = m1_active ? -alpha * m1 / l1_bytes : 0.0;
  const double dm2_dl2b = m2_active ? -alpha * m2 / l2_bytes : 0.0;
  const double doverlap_dmshr = mshr_active ? 1.0 : 0.0;

  const double dipc_damat = dipc_dlambda * dlambda_damat;

  // dIPC/dvalue per role, then scatter onto bound parameters.
  std::array<double, kRoleCount> dipc{};
  dipc[static_cast<std::size_t>(Role::L1Set)] =
      dipc_damat * damat_dm1 * dm1_dl1b * binding_.value(Role::L1Way, v) * cfg_.line_bytes;
  dipc[static_cast<std::size_t>(Role::L1Way)] =
      dipc_damat * damat_dm1 * dm1_dl1b * binding_.value(Role::L1Set, v) * cfg_.line_bytes;
  dipc[static_cast<std::size_t>(Role::L2Set)] =
      dipc_damat * damat_dm2 * dm2_dl2b * binding_.value(Role::L2Way, v) * cfg_.line_bytes;
  dipc[static_cast<std::size_t>(Role::L2Way)] =
      dipc_damat * damat_dm2 * dm2_dl2b * binding_.value(Role::L2Set, v) * cfg_.line_bytes;
  dipc[static_cast<std::size_t>(Role::Mshr)] = dipc_damat * damat_doverlap * doverlap_dmshr;
  dipc[static_cast<std::size_t>(Role::Decode)] = wgt[kDecode];
  dipc[static_cast<std::size_t>(Role::Rob)] = wgt[kRob] / lambda_bar;
  dipc[static_cast<std::size_t>(Role::MemFu)] = wgt[kMem] / std::max(w.f_mem, guard);
  dipc[static_cast<std::size_t>(Role::IntFu)] = wgt[kInt] / std::max(w.f_int, guard);
  dipc[static_cast<std::size_t>(Role::FpFu)] = wgt[kFp] / std::max(w.f_fp, guard);
  dipc[static_cast<std::size_t>(Role::Iq)] = wgt[kIq] * w.ilp_cap / lambda_bar;

  LfResult r;
  r.ipc = ipc;
  r.cpi = cpi;
  r.lambda_bar = lambda_bar;
  r.gradient.assign(space_->param_count(), 0.0);
  for (std::size_t i = 0; i < kRoleCount; ++i) {
    if (auto idx = binding_.param(static_cast<Role>(i))) {
      // dCPI/dv = -dIPC/dv / IPC^2
      r.gradient[*idx] = -dipc[i] / (ipc * ipc);
    }
  }
  r.bounds = {{"decode", b[kDecode]}, {"int", b[kInt]}, {"mem", b[kMem]}, {"fp", b[kFp]},
              {"rob", b[kRob]},       {"iq", b[kIq]},   {"ilp", b[kIlp]}};
  return r;
}

std::vector<std::uint8_t> LfModel::action_mask(const LfResult& r, const DesignPoint& p) const {
  std::vector<std::uint8_t> mask(space_->param_count(), 0);
  for (std::size_t j = 0; j < space_->param_count(); ++j)
    mask[j] = (r.gradient[j] < -cfg_.eps_g) && !space_->at_maximum(p, j);
  return mask;
}

AreaModel::AreaModel(const DesignSpace& space, AreaModelConfig cfg, const LfModelConfig& lf_cfg)
    : cfg_(cfg),
      line_bytes_(lf_cfg.line_bytes),
      binding_(space,
               lf_cfg.role_params.empty() ? RoleBinding::default_role_params() : lf_cfg.role_params,
               lf_cfg.role_fixed) {
  for (double c : {cfg_.base_mm2, cfg_.cache_per_kb, cfg_.mshr_per_entry, cfg_.decode_quadratic,
                   cfg_.rob_per_entry, cfg_.fu_per_unit, cfg_.iq_per_entry})
    if (!(c > 0)) throw ConfigError("area model: coefficients must be positive");
}

double AreaModel::area(const DesignPoint& p) const {
  const double l1_kb =
      binding_.value(Role::L1Set, p) * binding_.value(Role::L1Way, p) * line_bytes_ / 1024.0;
  const double l2_kb =
      binding_.value(Role::L2Set, p) * binding_.value(Role::L2Way, p) * line_bytes_ / 1024.0;
  const double decode = binding_.value(Role::Decode, p);
  const double fus = binding_.value(Role::MemFu, p) + binding_.value(Role::IntFu, p) +
                     binding_.value(Role::FpFu, p);
  return cfg_.base_mm2 + cfg_.cache_per_kb * (l1_kb + l2_kb) +
         cfg_.mshr_per_entry * binding_.value(Role::Mshr, p) + cfg_.decode_quadratic * decode * decode +
         cfg_.rob_per_entry * binding_.value(Role::Rob, p) + cfg_.fu_per_unit * fus +
         cfg_.iq_per_entry * binding_.value(Role::Iq, p);
}

}  // namespace archdse
