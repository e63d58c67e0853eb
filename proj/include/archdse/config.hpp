#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "archdse/design_space.hpp"
#include "archdse/fnn.hpp"
#include "archdse/hf_eval.hpp"
#include "archdse/lf_model.hpp"
#include "archdse/trainer.hpp"

namespace archdse {

/// Wise-initialization preference: pin a group's membership boundary and bias
/// the 'low' rules toward one parameter.
struct PreferenceSpec {
  std::string group;
  double boundary = 0.5;
  std::string param;
  double strength = 0.5;
};

struct FnnSection {
  FnnInitConfig init;
  std::vector<PreferenceSpec> preferences;
};

enum class HfKind { Synthetic, Subprocess, Lf };

struct HfSection {
  HfKind kind = HfKind::Synthetic;
  SyntheticHfConfig synthetic;
  SubprocessHfConfig subprocess;
};

struct HarnessSection {
  std::uint64_t exhaustive_cap = 10000;  // at most this many points -> exhaustive oracle
  std::size_t sample_floor = 500;        // valid samples required in sampled mode
  std::size_t random_search_budget = 0;  // 0 = match the HF budget
  std::vector<std::string> baseline_files;
};

/// Everything one experiment needs, materialized from a config file.
/// Defaults follow the shipped machine description; the parser is strict and
/// rejects unknown fields with their dotted path.
struct RunConfig {
  explicit RunConfig(DesignSpace s) : space(std::move(s)) {}

  DesignSpace space;
  std::map<std::string, WorkloadProfile> workloads;
  LfModelConfig model;
  AreaModelConfig area;
  double area_limit = 8.0;
  FnnSection fnn;
  TrainerConfig trainer;
  HfSection hf;
  HarnessSection harness;
  std::vector<std::string> experiment_workloads;  // subset of `workloads`
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
};

/// Parses config text (JSON, // and /* */ comments allowed). Validates the
/// whole document before returning: schema, workload mixes, candidate
/// ordering, role bindings, and area feasibility.
RunConfig parse_config(const std::string& text);

/// Reads `path`, applies dotted-path overrides ("trainer.max_episodes=500"),
/// then an optional seed / output-dir override, and parses.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {},
                      std::optional<std::uint64_t> seed_override = std::nullopt,
                      std::optional<std::string> out_override = std::nullopt);

/// The effective config, defaults materialized. parse(dump(parse(x))) is
/// field-by-field identical to parse(x).
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// Applies one "a.b.c=value" override to a raw JSON document. Values parse as
/// JSON when possible, else as strings.
void apply_override(nlohmann::ordered_json& doc, const std::string& spec);

}  // namespace archdse
