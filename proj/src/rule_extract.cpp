#include "archdse/rule_extract.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

namespace archdse {

namespace {

// A partially merged rule: one label per input, -1 once the literal is
// dropped.  Sources stay sorted for deterministic output.
struct Item {
  std::vector<int> labels;
  std::vector<std::size_t> sources;
};

void merge_sources(std::vector<std::size_t>& into, const std::vector<std::size_t>& from) {
  into.insert(into.end(), from.begin(), from.end());
  std::sort(into.begin(), into.end());
  into.erase(std::unique(into.begin(), into.end()), into.end());
}

/// One pass over input `i`: merge any bucket of items that agree everywhere
/// else and jointly cover every label of input `i`. Returns true on merge.
bool merge_at_input(std::vector<Item>& items, std::size_t i, std::size_t radix) {
  for (std::size_t a = 0; a < items.size(); ++a) {
    if (items[a].labels[i] < 0) continue;
    std::vector<std::size_t> bucket{a};
    std::set<int> labels_seen{items[a].labels[i]};
    for (std::size_t b = a + 1; b < items.size(); ++b) {
      if (items[b].labels[i] < 0) continue;
      bool same_rest = true;
      for (std::size_t k = 0; k < items[a].labels.size(); ++k)
        if (k != i && items[a].labels[k] != items[b].labels[k]) {
          same_rest = false;
          break;
        }
      if (!same_rest) continue;
      bucket.push_back(b);
      labels_seen.insert(items[b].labels[i]);
    }
    if (labels_seen.size() != radix) continue;

    Item merged = items[bucket.front()];
    merged.labels[i] = -1;
    for (std::size_t k = 1; k < bucket.size(); ++k)
      merge_sources(merged.sources, items[bucket[k]].sources);
    for (std::size_t k = bucket.size(); k-- > 0;)
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(bucket[k]));
    items.push_back(std::move(merged));
    return true;
  }
  return false;
}

void dedup_items(std::vector<Item>& items) {
  for (std::size_t a = 0; a < items.size(); ++a)
    for (std::size_t b = items.size(); b-- > a + 1;)
      if (items[a].labels == items[b].labels) {
        merge_sources(items[a].sources, items[b].sources);
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(b));
      }
}

}  // namespace

RuleBase extract(const FnnWeights& w, double theta_c, double theta_norm) {
  RuleBase rb;
  rb.theta_c = theta_c;
  rb.total_rule_count = w.rule_count();
  for (double m : w.firing_mass())
    if (m > 1e-6) ++rb.active_rule_count;
  rb.theta_norm = theta_norm >= 0 ? theta_norm : 0.05 * static_cast<double>(rb.active_rule_count);

  const std::size_t R = w.rule_count();
  const std::size_t I = w.inputs().size();

  for (std::size_t p = 0; p < w.param_count(); ++p) {
    double l1 = 0.0;
    for (std::size_t r = 0; r < R; ++r) l1 += std::abs(w.consequent(r, p));
    if (l1 < rb.theta_norm || l1 <= 0.0) continue;
    rb.column_norms.emplace_back(w.param_names()[p], l1);

    std::vector<Item> items;
    for (std::size_t r = 0; r < R; ++r) {
      if (!(w.consequent(r, p) > theta_c)) continue;
      Item it;
      auto labels = w.rule_labels(r);
      it.labels.assign(labels.begin(), labels.end());
      it.sources = {r};
      items.push_back(std::move(it));
    }

    bool changed = true;
    while (changed) {
      changed = false;
      dedup_items(items);
      for (std::size_t i = 0; i < I && !changed; ++i)
        changed = merge_at_input(items, i, w.inputs()[i].sets.size());
    }

    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.sources.front() < b.sources.front(); });

    for (const auto& it : items) {
      Rule rule;
      for (std::size_t i = 0; i < I; ++i) {
        if (it.labels[i] < 0) continue;
        const auto& in = w.inputs()[i];
        rule.antecedents.emplace_back(in.name, in.sets[static_cast<std::size_t>(it.labels[i])].first);
      }
      rule.target_param = w.param_names()[p];
      double sum = 0.0;
      for (std::size_t r : it.sources) sum += w.consequent(r, p);
      rule.consequent_value = sum / static_cast<double>(it.sources.size());
      rule.source_rule_indices = it.sources;
      rb.rules.push_back(std::move(rule));
    }
  }
  return rb;
}

namespace {

std::string rule_text(const Rule& r) {
  std::string s = "IF ";
  if (r.antecedents.empty()) {
    s += "(any state)";
  } else {
    for (std::size_t i = 0; i < r.antecedents.size(); ++i) {
      if (i) s += " and ";
      s += r.antecedents[i].first + " is " + r.antecedents[i].second;
    }
  }
  s += " THEN " + r.target_param + " can increase";
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_report(const RuleBase& rb, const FnnWeights& w) {
  std::ostringstream os;
  os << "rule report\n";
  os << "===========\n";
  if (!rb.provenance.empty()) os << "source: " << rb.provenance << "\n";
  os << "thresholds: theta_c=" << fmt(rb.theta_c) << " theta_norm=" << fmt(rb.theta_norm)
     << " (rules with firing history: " << rb.active_rule_count << " of " << rb.total_rule_count
     << ")\n\n";

  if (rb.column_norms.empty()) {
    os << "no rules above threshold\n";
  } else {
    for (const auto& [param, norm] : rb.column_norms) {
      os << param << "  (column 1-norm " << fmt(norm) << ")\n";
      bool any = false;
      for (const auto& r : rb.rules) {
        if (r.target_param != param) continue;
        os << "  " << rule_text(r) << "   [weight " << fmt(r.consequent_value) << ", "
           << r.source_rule_indices.size() << " rule" << (r.source_rule_indices.size() == 1 ? "" : "s")
           << "]\n";
        any = true;
      }
      if (!any) os << "  (no rules above threshold)\n";
    }
  }

  os << "\nmembership centers\n";
  os << "------------------\n";
  for (const auto& in : w.inputs()) {
    if (in.role == InputRole::Metric) {
      for (const auto& [label, mf] : in.sets)
        os << "  " << in.name << " " << label << ": center " << fmt(mf.center) << "\n";
    } else {
      const double c = in.sets[0].second.center;
      const double raw = in.range_lo + c * (in.range_hi - in.range_lo);
      os << "  " << in.name << " low|enough: center " << fmt(c) << " (raw " << fmt(raw) << ")\n";
    }
  }

  os << "\ndiagnostics\n";
  os << "-----------\n";
  bool flagged = false;
  for (const auto& in : w.inputs()) {
    if (in.role != InputRole::ParamGroup) continue;
    const double c = in.sets[0].second.center;
    if (c <= 0.02 || c >= 0.98) {
      os << "  - center of '" << in.name << "' is clamped at " << fmt(c)
         << "; reduce the learning rate or re-center the candidate range\n";
      flagged = true;
    }
  }
  for (const auto& r : rb.rules) {
    for (const auto& [input, label] : r.antecedents) {
      if (label != "enough") continue;
      for (const auto& in : w.inputs()) {
        if (in.name != input || in.role != InputRole::ParamGroup) continue;
        if (in.sets[0].second.center >= 0.9) {
          os << "  - \"" << rule_text(r) << "\" triggers with '" << input
             << "' already near the top of its range; consider extending the design space\n";
          flagged = true;
        }
      }
    }
  }
  if (!flagged) os << "  - none\n";
  return os.str();
}

std::string rules_jsonl(const RuleBase& rb) {
  std::string out;
  for (const auto& r : rb.rules) {
    nlohmann::ordered_json j;
    j["antecedents"] = nlohmann::ordered_json::array();
    for (const auto& [input, label] : r.antecedents)
      j["antecedents"].push_back({{"input", input}, {"label", label}});
    j["target"] = r.target_param;
    j["value"] = r.consequent_value;
    j["sources"] = r.source_rule_indices;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace archdse
