#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace archdse {

/// One tunable micro-architecture parameter: an ordered list of candidate
/// settings (entry counts, widths, ...). Values must be finite, positive and
/// strictly increasing.
struct ParameterSpec {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

/// How the member parameters of a merge group combine into one fuzzy input.
enum class Combine { Product, Sum, Single };

/// A set of related parameters merged into a single FNN input
/// (e.g. cache set x way -> cache size).
struct MergeGroup {
  std::string name;
  std::vector<std::size_t> members;  // indices into DesignSpace::params()
  Combine combine = Combine::Single;
  std::string scale_note;
};

/// A concrete design: one candidate index per parameter.
struct DesignPoint {
  std::vector<std::size_t> indices;

  bool operator==(const DesignPoint&) const = default;
};

/// Immutable description of the searchable space. Parameters are ordered;
/// every parameter belongs to exactly one merge group.
class DesignSpace {
 public:
  DesignSpace(std::vector<ParameterSpec> params, std::vector<MergeGroup> groups);

  const std::vector<ParameterSpec>& params() const { return params_; }
  const std::vector<MergeGroup>& groups() const { return groups_; }
  std::size_t param_count() const { return params_.size(); }
  std::size_t group_count() const { return groups_.size(); }

  std::optional<std::size_t> param_index(const std::string& name) const;
  std::optional<std::size_t> group_index(const std::string& name) const;

  /// Number of points in the space (product of candidate-list lengths).
  std::uint64_t size() const;

  /// The design with every parameter at its first (smallest) candidate.
  DesignPoint smallest_point() const;

  bool valid(const DesignPoint& p) const;
  bool at_maximum(const DesignPoint& p, std::size_t param) const;

  /// Copy of `p` with `param` stepped to its next candidate.
  /// Throws AtMaximum if the parameter is already at its last candidate.
  DesignPoint increment(const DesignPoint& p, std::size_t param) const;

  /// Raw candidate value of one parameter at this point.
  double value(const DesignPoint& p, std::size_t param) const;
  std::vector<double> values(const DesignPoint& p) const;

  /// Combined raw value of one merge group at this point.
  double group_raw(const DesignPoint& p, std::size_t group) const;

  /// Achievable [min, max] of a group's combined value over the whole space.
  std::pair<double, double> group_range(std::size_t group) const;

  /// Per-group combined values, min-max normalized to [0,1], in group order.
  std::vector<double> group_values(const DesignPoint& p) const;

  /// Odometer-style enumeration; returns false once `p` wraps past the last
  /// point. Start from smallest_point().
  bool next_point(DesignPoint& p) const;

 private:
  std::vector<ParameterSpec> params_;
  std::vector<MergeGroup> groups_;
  std::vector<std::pair<double, double>> group_ranges_;
};

}  // namespace archdse
