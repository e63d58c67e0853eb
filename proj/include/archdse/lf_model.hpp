#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "archdse/design_space.hpp"

namespace archdse {

/// Workload abstraction feeding the analytical model: instruction mix,
/// memory footprint, parallelism caps and latency constants.
struct WorkloadProfile {
  std::string name;
  double f_int = 0.0;
  double f_mem = 0.0;
  double f_fp = 0.0;
  double footprint_bytes = 0.0;
  double ilp_cap = 1.0;  // max independent instructions per cycle the code offers
  double mlp_cap = 1.0;  // max overlappable misses the code offers
  double lat_int = 1.0;
  double lat_fp = 3.0;
  double lat_l1_hit = 2.0;
  double lat_l2 = 12.0;
  double lat_dram = 80.0;
  double miss_exponent = 0.5;

  void validate() const;  // throws ConfigError
};

/// The machine resources the analytical and area models reason about.
enum class Role : std::size_t {
  L1Set,
  L1Way,
  L2Set,
  L2Way,
  Mshr,
  Decode,
  Rob,
  MemFu,
  IntFu,
  FpFu,
  Iq,
};
inline constexpr std::size_t kRoleCount = 11;

const char* role_key(Role r);
std::optional<Role> role_from_key(const std::string& key);

/// Resolves each Role against a design space: either bound to a parameter
/// (by name) or pinned to a fixed value for spaces that omit it.
class RoleBinding {
 public:
  RoleBinding(const DesignSpace& space,
              const std::map<std::string, std::string>& role_params,
              const std::map<std::string, double>& role_fixed);

  double value(Role r, const DesignPoint& p) const;
  /// Same lookup over a continuous value vector (one entry per parameter).
  double value(Role r, std::span<const double> values) const;
  std::optional<std::size_t> param(Role r) const;
  const DesignSpace& space() const { return *space_; }

  /// Default role->parameter-name map matching the shipped design space.
  static std::map<std::string, std::string> default_role_params();

 private:
  const DesignSpace* space_;
  std::array<int, kRoleCount> param_index_{};
  std::array<double, kRoleCount> fixed_value_{};
};

struct LfModelConfig {
  double tau = 0.25;         // softmin temperature
  double frac_guard = 1e-3;  // divisor floor for near-zero mix fractions
  double line_bytes = 64.0;
  double eps_g = 1e-9;       // gradient threshold for the action mask
  std::map<std::string, std::string> role_params;  // role key -> parameter name
  std::map<std::string, double> role_fixed;        // role key -> value when unbound
};

struct LfResult {
  double cpi = 0.0;
  double ipc = 0.0;
  double lambda_bar = 0.0;            // mean issue-to-retire latency, cycles
  std::vector<double> gradient;       // dCPI/dvalue_j per space parameter
  std::vector<std::pair<std::string, double>> bounds;
};

/// Differentiable bottleneck model of sustained IPC. Every throughput bound
/// is non-decreasing in every parameter value, and the softmin keeps the
/// whole model smooth away from the piecewise-min branch points.
class LfModel {
 public:
  LfModel(const DesignSpace& space, LfModelConfig cfg);

  LfResult evaluate(const DesignPoint& p, const WorkloadProfile& w) const;

  /// Evaluate at an arbitrary (off-grid) value vector, one entry per space
  /// parameter.  evaluate(p, w) is this applied to space.values(p).
  LfResult evaluate_values(std::span<const double> values,
                           const WorkloadProfile& w) const;

  /// mask[j] = (dCPI/dv_j < -eps_g) and parameter j not at its last candidate.
  std::vector<std::uint8_t> action_mask(const LfResult& r, const DesignPoint& p) const;

  const RoleBinding& binding() const { return binding_; }
  const LfModelConfig& config() const { return cfg_; }
  double eps_g() const { return cfg_.eps_g; }

 private:
  const DesignSpace* space_;
  LfModelConfig cfg_;
  RoleBinding binding_;
};

struct AreaModelConfig {
  double base_mm2 = 0.5;
  double cache_per_kb = 0.02;
  double mshr_per_entry = 0.05;
  double decode_quadratic = 0.15;  // mm^2 per width^2
  double rob_per_entry = 0.008;
  double fu_per_unit = 0.3;
  double iq_per_entry = 0.02;
};

/// Fast additive area estimate; fixed (unbound) roles contribute a constant
/// offset so reduced spaces keep realistic budgets.
class AreaModel {
 public:
  AreaModel(const DesignSpace& space, AreaModelConfig cfg, const LfModelConfig& lf_cfg);

  double area(const DesignPoint& p) const;

 private:
  AreaModelConfig cfg_;
  double line_bytes_;
  RoleBinding binding_;
};

}  // namespace archdse
