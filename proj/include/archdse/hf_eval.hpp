#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "archdse/design_space.hpp"
#include "archdse/lf_model.hpp"

namespace archdse {

/// Uniform interface over expensive evaluators. Implementations must be
/// deterministic for a fixed (point, workload, seed) and return cpi > 0.
/// Budget accounting is the caller's job.
class HfEvaluator {
 public:
  virtual ~HfEvaluator() = default;

  virtual double evaluate(const DesignPoint& p, const std::string& workload) = 0;

  /// Rough seconds per call, for operator-facing budget summaries.
  virtual double cost_estimate() const { return 0.0; }
};

struct SyntheticHfConfig {
  double bias = 0.05;            // multiplicative LF->HF bias (b)
  double rob_stall_coeff = 0.5;  // weight of the ROB-stall term (c_rob)
  double noise_amplitude = 0.01; // +- sigma of the seeded pseudo-noise
  std::uint64_t seed = 0;
};

/// Built-in stand-in for an RTL simulator: the LF CPI plus a systematic bias,
/// a ROB-pressure stall term the LF model cannot see, and seeded pseudo-noise.
/// The stall term charges designs whose in-flight demand (mean latency x
/// decode width) exceeds the ROB, so growing the ROB pays off under HF even
/// where the LF softmin is bounded elsewhere.
class SyntheticHf : public HfEvaluator {
 public:
  SyntheticHf(const LfModel& lf, SyntheticHfConfig cfg,
              std::map<std::string, WorkloadProfile> workloads);

  double evaluate(const DesignPoint& p, const std::string& workload) override;
  double cost_estimate() const override { return 0.0; }

  const SyntheticHfConfig& config() const { return cfg_; }

 private:
  const LfModel* lf_;
  SyntheticHfConfig cfg_;
  std::map<std::string, WorkloadProfile> workloads_;
};

/// Adapter exposing the LF model through the evaluator interface, so the
/// oracle and baselines can run against either fidelity uniformly.
class LfCpiEvaluator : public HfEvaluator {
 public:
  LfCpiEvaluator(const LfModel& lf, std::map<std::string, WorkloadProfile> workloads);
  double evaluate(const DesignPoint& p, const std::string& workload) override;

 private:
  const LfModel* lf_;
  std::map<std::string, WorkloadProfile> workloads_;
};

struct SubprocessHfConfig {
  std::string command;                 // executable to spawn per call
  std::vector<std::string> args;
  double timeout_seconds = 30.0;
  double cost_estimate_seconds = 0.0;
};

/// Spawns one child process per evaluation. Wire protocol: one request object
/// per line on the child's stdin ({"<parameter name>": value, ...,
/// "workload": name}), one response object per line on its stdout
/// ({"cpi": x} or {"error": text}). See scripts/hf_stub.py for a reference
/// implementation of the child side.
class SubprocessHf : public HfEvaluator {
 public:
  SubprocessHf(const DesignSpace& space, SubprocessHfConfig cfg);

  double evaluate(const DesignPoint& p, const std::string& workload) override;
  double cost_estimate() const override { return cfg_.cost_estimate_seconds; }

  /// The request line for a point, exposed for protocol tests.
  std::string request_line(const DesignPoint& p, const std::string& workload) const;

 private:
  const DesignSpace* space_;
  SubprocessHfConfig cfg_;
};

}  // namespace archdse
