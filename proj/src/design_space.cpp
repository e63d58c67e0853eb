#include "archdse/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "archdse/errors.hpp"

namespace archdse {

namespace {

double combine_values(Combine c, const std::vector<double>& xs) {
  switch (c) {
    case Combine::Product: {
      double acc = 1.0;
      for (double x : xs) acc *= x;
      return acc;
    }
    case Combine::Sum: {
      double acc = 0.0;
      for (double x : xs) acc += x;
      return acc;
    }
    case Combine::Single:
      return xs.front();
  }
  return 0.0;
}

}  // namespace

DesignSpace::DesignSpace(std::vector<ParameterSpec> params, std::vector<MergeGroup> groups)
    : params_(std::move(params)), groups_(std::move(groups)) {
  if (params_.empty()) throw ConfigError("design space: no parameters");

  std::set<std::string> names;
  for (const auto& p : params_) {
    if (!names.insert(p.name).second)
      throw ConfigError("design space: duplicate parameter name '" + p.name + "'");
    if (p.values.empty())
      throw ConfigError("design space: parameter '" + p.name + "' has no candidate values");
    double prev = 0.0;
    for (double v : p.values) {
      if (!std::isfinite(v) || v <= 0.0)
        throw ConfigError("design space: parameter '" + p.name + "' has a non-positive candidate");
      if (v <= prev)
        throw ConfigError("design space: parameter '" + p.name + "' candidates not strictly increasing");
      prev = v;
    }
  }

  std::vector<int> owner(params_.size(), -1);
  std::set<std::string> gnames;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& grp = groups_[g];
    if (!gnames.insert(grp.name).second)
      throw ConfigError("design space: duplicate group name '" + grp.name + "'");
    if (grp.members.empty())
      throw ConfigError("design space: group '" + grp.name + "' has no members");
    if (grp.combine == Combine::Single && grp.members.size() != 1)
      throw ConfigError("design space: SINGLE group '" + grp.name + "' must have exactly one member");
    for (std::size_t m : grp.members) {
      if (m >= params_.size())
        throw ConfigError("design space: group '" + grp.name + "' references parameter index out of range");
      if (owner[m] != -1)
        throw ConfigError("design space: parameter '" + params_[m].name + "' appears in more than one group");
      owner[m] = static_cast<int>(g);
    }
  }
  for (std::size_t j = 0; j < params_.size(); ++j) {
    if (owner[j] == -1)
      throw ConfigError("design space: parameter '" + params_[j].name + "' belongs to no group");
  }

  group_ranges_.reserve(groups_.size());
  for (const auto& grp : groups_) {
    std::vector<double> lo, hi;
    for (std::size_t m : grp.members) {
      lo.push_back(params_[m].values.front());
      hi.push_back(params_[m].values.back());
    }
    group_ranges_.emplace_back(combine_values(grp.combine, lo), combine_values(grp.combine, hi));
  }
}

std::optional<std::size_t> DesignSpace::param_index(const std::string& name) const {
  for (std::size_t j = 0; j < params_.size(); ++j)
    if (params_[j].name == name) return j;
  return std::nullopt;
}

std::optional<std::size_t> DesignSpace::group_index(const std::string& name) const {
  for (std::size_t g = 0; g < groups_.size(); ++g)
    if (groups_[g].name == name) return g;
  return std::nullopt;
}

std::uint64_t DesignSpace::size() const {
  std::uint64_t n = 1;
  for (const auto& p : params_) {
    std::uint64_t k = p.values.size();
    if (n > std::numeric_limits<std::uint64_t>::max() / k)
      throw Error("design space size overflows 64 bits");
    n *= k;
  }
  return n;
}

DesignPoint DesignSpace::smallest_point() const {
  return DesignPoint{std::vector<std::size_t>(params_.size(), 0)};
}

bool DesignSpace::valid(const DesignPoint& p) const {
  if (p.indices.size() != params_.size()) return false;
  for (std::size_t j = 0; j < params_.size(); ++j)
    if (p.indices[j] >= params_[j].values.size()) return false;
  return true;
}

bool DesignSpace::at_maximum(const DesignPoint& p, std::size_t param) const {
  return p.indices[param] + 1 >= params_[param].values.size();
}

DesignPoint DesignSpace::increment(const DesignPoint& p, std::size_t param) const {
  if (at_maximum(p, param))
    throw AtMaximum("parameter '" + params_[param].name + "' is at its last candidate");
  DesignPoint q = p;
  ++q.indices[param];
  return q;
}

double DesignSpace::value(const DesignPoint& p, std::size_t param) const {
  return params_[param].values[p.indices[param]];
}

std::vector<double> DesignSpace::values(const DesignPoint& p) const {
  std::vector<double> out(params_.size());
  for (std::size_t j = 0; j < params_.size(); ++j) out[j] = value(p, j);
  return out;
}

double DesignSpace::group_raw(const DesignPoint& p, std::size_t group) const {
  const auto& grp = groups_[group];
  std::vector<double> xs;
  xs.reserve(grp.members.size());
  for (std::size_t m : grp.members) xs.push_back(value(p, m));
  return combine_values(grp.combine, xs);
}

std::pair<double, double> DesignSpace::group_range(std::size_t group) const {
  return group_ranges_[group];
}

std::vector<double> DesignSpace::group_values(const DesignPoint& p) const {
  std::vector<double> out(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    auto [lo, hi] = group_ranges_[g];
    if (hi <= lo) {
      out[g] = 0.0;  // group has a single achievable value
      continue;
    }
    out[g] = (group_raw(p, g) - lo) / (hi - lo);
  }
  return out;
}

bool DesignSpace::next_point(DesignPoint& p) const {
  for (std::size_t j = params_.size(); j-- > 0;) {
    if (p.indices[j] + 1 < params_[j].values.size()) {
      ++p.indices[j];
      std::fill(p.indices.begin() + static_cast<std::ptrdiff_t>(j) + 1, p.indices.end(), 0);
      return true;
    }
  }
  return false;
}

}  // namespace archdse
