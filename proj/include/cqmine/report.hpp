#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqmine/phase1.hpp"
#include "cqmine/phase2.hpp"

namespace cqmine {

/// One symbolic-constant instantiation, with constants listed by printed label ($c1, $c2, ...).
struct Instantiation {
  std::vector<std::pair<std::string, std::string>> assignment;
  std::size_t support = 0;
};

/// A frequent-query entry as it appears in the reports.
struct ReportEntry {
  std::string text;
  std::size_t support = 0;  // best instantiation for symbolic queries
  std::size_t level = 0;
  std::vector<Instantiation> instantiations;
};

inline std::string format_confidence(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", c);
  return buf;
}

inline std::string key_atom_text(const Atom& a) {
  std::string out = a.relation + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) out += i ? ",_" : "_";
  return out + ")";
}

// Frequent queries are identified modulo head order, so the head is listed in order of first
// occurrence in the body, which reads best.
inline Query head_in_body_order(const Query& q) {
  std::map<int, std::size_t> first;
  for (const auto& a : q.body())
    for (const auto& t : a.args)
      if (t.is_var()) first.try_emplace(t.id, first.size());
  std::vector<int> head = q.head();
  std::stable_sort(head.begin(), head.end(), [&](int a, int b) { return first.at(a) < first.at(b); });
  return Query(head, q.body());
}

inline std::vector<ReportEntry> report_entries(const MinerState& state) {
  std::vector<ReportEntry> out;
  for (const auto& [key, rec] : state.frequent_index) {
    auto rendered = render_query_labeled(head_in_body_order(rec.query));
    ReportEntry e{rendered.text, rec.support, rec.level, {}};
    if (rec.symbolic()) {
      const auto& g = rec.frequent_constants;
      for (const auto& [values, count] : g.counts) {
        Instantiation inst;
        inst.support = count;
        for (std::size_t i = 0; i < g.symbols.size(); ++i)
          inst.assignment.emplace_back("$c" + std::to_string(rendered.symbol_labels.at(g.symbols[i])),
                                       values[i]);
        std::sort(inst.assignment.begin(), inst.assignment.end(), [](const auto& a, const auto& b) {
          return a.first.size() != b.first.size() ? a.first.size() < b.first.size() : a.first < b.first;
        });
        e.instantiations.push_back(std::move(inst));
      }
      std::sort(e.instantiations.begin(), e.instantiations.end(), [](const auto& a, const auto& b) {
        return a.support != b.support ? a.support > b.support : a.assignment < b.assignment;
      });
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const ReportEntry& a, const ReportEntry& b) {
    return a.support != b.support ? a.support > b.support : a.text < b.text;
  });
  return out;
}

// <support>\t<query>, symbolic queries followed by \t<support>\t$c1='v', ... lines.
inline void write_frequent_report(std::ostream& os, const std::vector<ReportEntry>& entries) {
  for (const auto& e : entries) {
    os << e.support << '\t' << e.text << '\n';
    for (const auto& inst : e.instantiations) {
      os << '\t' << inst.support << '\t';
      for (std::size_t i = 0; i < inst.assignment.size(); ++i)
        os << (i ? ", " : "") << inst.assignment[i].first << '='
           << detail::quote_constant(inst.assignment[i].second);
      os << '\n';
    }
  }
}

// <confidence>\t<support>\t<antecedent> => <consequent>
inline void write_rule_report(std::ostream& os, const std::vector<AssociationRule>& rules) {
  for (const auto& r : rules)
    os << format_confidence(r.confidence) << '\t' << r.support << '\t' << r.antecedent_text << " => "
       << r.consequent_text << '\n';
}

inline nlohmann::json dump_json(const MinerConfig& mcfg, const RuleConfig& rcfg,
                                const std::vector<ReportEntry>& entries,
                                const std::vector<AssociationRule>& rules) {
  using nlohmann::json;
  json config{{"minsup", mcfg.minsup},
              {"max_atoms", mcfg.max_atoms},
              {"constants", mcfg.enable_constants},
              {"key_atom", mcfg.key_atom ? json(key_atom_text(*mcfg.key_atom)) : json()},
              {"minconf", rcfg.minconf}};
  json frequent = json::array();
  for (const auto& e : entries) {
    json item{{"query", e.text}, {"support", e.support}, {"level", e.level}};
    if (!e.instantiations.empty()) {
      json insts = json::array();
      for (const auto& inst : e.instantiations) {
        json assignment = json::object();
        for (const auto& [label, value] : inst.assignment) assignment[label] = value;
        insts.push_back({{"constants", assignment}, {"support", inst.support}});
      }
      item["instantiations"] = std::move(insts);
    }
    frequent.push_back(std::move(item));
  }
  json rule_list = json::array();
  for (const auto& r : rules)
    rule_list.push_back({{"antecedent", r.antecedent_text},
                         {"consequent", r.consequent_text},
                         {"antecedent_support", r.antecedent_support},
                         {"support", r.support},
                         {"confidence", r.confidence}});
  return {{"config", config}, {"frequent", frequent}, {"rules", rule_list}};
}

}  // namespace cqmine
