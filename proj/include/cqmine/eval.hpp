#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cqmine/containment.hpp"
#include "cqmine/query.hpp"
#include "cqmine/relational.hpp"

namespace cqmine {

using AnswerSet = std::set<std::vector<std::string>>;

/// Support of every instantiation of a query's symbolic constants that reaches the threshold.
struct GroupedSupport {
  std::vector<int> symbols;  // ascending symbol ids; keys of `counts` follow this order
  std::map<std::vector<std::string>, std::size_t> counts;

  bool empty() const { return counts.empty(); }

  std::map<int, std::string> assignment(const std::vector<std::string>& values) const {
    std::map<int, std::string> out;
    for (std::size_t i = 0; i < symbols.size(); ++i) out[symbols[i]] = values.at(i);
    return out;
  }

  std::size_t max_support() const {
    std::size_t m = 0;
    for (const auto& [k, c] : counts) m = std::max(m, c);
    return m;
  }
};

namespace detail {

/// Backtracking matcher over an instance. Variables and symbolic constants both occupy slots;
/// the caller decides which slots form the projected output.
class Matcher {
 public:
  Matcher(const Query& q, const Instance& inst) : inst_(inst) {
    std::map<Term, int> slots;
    auto slot_of = [&](const Term& t) {
      auto [it, fresh] = slots.try_emplace(t, static_cast<int>(slots.size()));
      return it->second;
    };
    for (int v : q.head()) head_slots_.push_back(slot_of(Term::var(v)));
    for (const auto& a : q.body()) {
      const auto& decl = inst.schema().at(a.relation);
      if (decl.arity() != a.args.size())
        throw InputError("atom over '" + a.relation + "' has wrong arity");
      CompiledAtom ca{&inst.relation(a.relation), {}};
      for (const auto& t : a.args) {
        Arg arg;
        if (t.is_constant()) {
          auto id = inst.dictionary().find(t.value);
          if (!id) unsatisfiable_ = true;
          arg.constant = id.value_or(0);
        } else {
          arg.slot = slot_of(t);
        }
        ca.args.push_back(arg);
      }
      atoms_.push_back(std::move(ca));
    }
    for (int s : q.symbols()) symbol_slots_.push_back(slot_of(Term::symbol(s)));
    slot_count_ = slots.size();
  }

  /// Distinct projections of all matchings onto `output` slots.
  std::vector<Tuple> project(const std::vector<int>& output) {
    std::vector<Tuple> rows;
    if (unsatisfiable_) return rows;
    binding_.assign(slot_count_, kUnbound);
    done_.assign(atoms_.size(), false);
    output_ = &output;
    rows_ = &rows;
    search(0);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
  }

  const std::vector<int>& head_slots() const { return head_slots_; }
  const std::vector<int>& symbol_slots() const { return symbol_slots_; }

 private:
  static constexpr ConstantId kUnbound = ~ConstantId{0};

  struct Arg {
    int slot = -1;  // -1 for constants
    ConstantId constant = 0;
  };
  struct CompiledAtom {
    const Relation* relation;
    std::vector<Arg> args;
  };

  // Picks the candidate tuple list for an atom: the shortest index list over bound positions.
  const std::vector<std::size_t>* candidates(const CompiledAtom& a, std::size_t& count) const {
    const std::vector<std::size_t>* best = nullptr;
    count = a.relation->size();
    for (std::size_t c = 0; c < a.args.size(); ++c) {
      ConstantId v = a.args[c].slot < 0 ? a.args[c].constant : binding_[a.args[c].slot];
      if (v == kUnbound) continue;
      const auto& list = a.relation->lookup(c, v);
      if (!best || list.size() < best->size()) best = &list;
    }
    if (best) count = best->size();
    return best;
  }

  void search(std::size_t depth) {
    if (depth == atoms_.size()) {
      Tuple row;
      row.reserve(output_->size());
      for (int s : *output_) row.push_back(binding_[s]);
      rows_->push_back(std::move(row));
      return;
    }
    std::size_t pick = atoms_.size(), pick_count = ~std::size_t{0};
    const std::vector<std::size_t>* pick_list = nullptr;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (done_[i]) continue;
      std::size_t count;
      const auto* list = candidates(atoms_[i], count);
      if (count < pick_count) pick = i, pick_count = count, pick_list = list;
    }
    if (pick_count == 0) return;
    done_[pick] = true;
    const CompiledAtom& atom = atoms_[pick];
    auto visit = [&](const Tuple& t) {
      std::vector<int> newly;
      bool ok = true;
      for (std::size_t c = 0; c < atom.args.size() && ok; ++c) {
        const Arg& arg = atom.args[c];
        if (arg.slot < 0) {
          ok = t[c] == arg.constant;
        } else if (binding_[arg.slot] == kUnbound) {
          binding_[arg.slot] = t[c];
          newly.push_back(arg.slot);
        } else {
          ok = binding_[arg.slot] == t[c];
        }
      }
      if (ok) search(depth + 1);
      for (int s : newly) binding_[s] = kUnbound;
    };
    const auto& tuples = atom.relation->tuples();
    if (pick_list) {
      for (std::size_t idx : *pick_list) visit(tuples[idx]);
    } else {
      for (const auto& t : tuples) visit(t);
    }
    done_[pick] = false;
  }

  const Instance& inst_;
  std::vector<CompiledAtom> atoms_;
  std::vector<int> head_slots_, symbol_slots_;
  std::size_t slot_count_ = 0;
  bool unsatisfiable_ = false;
  std::vector<ConstantId> binding_;
  std::vector<bool> done_;
  const std::vector<int>* output_ = nullptr;
  std::vector<Tuple>* rows_ = nullptr;
};

inline void check_plain(const Query& q) {
  if (q.has_symbols())
    throw ConfigError("query has symbolic constants; use grouped evaluation: " + render_query(q));
}

}  // namespace detail

/// The answer of q on the instance: the distinct head tuples of all matchings.
inline AnswerSet evaluate(const Query& q, const Instance& inst) {
  detail::check_plain(q);
  detail::Matcher m(q, inst);
  AnswerSet out;
  for (const auto& row : m.project(m.head_slots())) {
    std::vector<std::string> values;
    for (auto id : row) values.push_back(inst.dictionary().value(id));
    out.insert(std::move(values));
  }
  return out;
}

inline std::size_t support(const Query& q, const Instance& inst) {
  detail::check_plain(q);
  detail::Matcher m(q, inst);
  return m.project(m.head_slots()).size();
}

/// Counts matchings bucketed by the values of the symbolic constants, in one pass.
inline GroupedSupport support_grouped(const Query& q, const Instance& inst, std::size_t minsup) {
  if (!q.has_symbols()) throw ConfigError("grouped evaluation needs a symbolic constant");
  detail::Matcher m(q, inst);
  std::vector<int> output = m.symbol_slots();
  output.insert(output.end(), m.head_slots().begin(), m.head_slots().end());
  GroupedSupport out;
  for (int s : q.symbols()) out.symbols.push_back(s);
  const std::size_t width = m.symbol_slots().size();
  auto rows = m.project(output);  // sorted, so equal symbol prefixes are adjacent
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && std::equal(rows[i].begin(), rows[i].begin() + width, rows[j].begin())) ++j;
    if (j - i >= minsup) {
      std::vector<std::string> key;
      for (std::size_t c = 0; c < width; ++c) key.push_back(inst.dictionary().value(rows[i][c]));
      out.counts.emplace(std::move(key), j - i);
    }
    i = j;
  }
  return out;
}

/// SQL text for q: SELECT DISTINCT for plain queries, a grouped count with a `:minsup` parameter
/// for queries with symbolic constants. Atoms appear as t1, t2, ... in rendered order.
inline std::string emit_sql(const Query& q, const Schema& schema) {
  const Query rep = detail::least_renaming(q, false).query;
  std::vector<std::string> from, where;
  std::map<Term, std::string> first;
  for (std::size_t i = 0; i < rep.body().size(); ++i) {
    const auto& a = rep.body()[i];
    const auto& decl = schema.at(a.relation);
    std::string alias = "t" + std::to_string(i + 1);
    from.push_back(a.relation + " AS " + alias);
    for (std::size_t c = 0; c < a.args.size(); ++c) {
      std::string col = alias + "." + decl.columns.at(c);
      const Term& t = a.args[c];
      if (t.is_constant()) {
        std::string lit = "'";
        for (char ch : t.value) {
          if (ch == '\'') lit += '\'';
          lit += ch;
        }
        where.push_back(col + " = " + lit + "'");
      } else if (auto it = first.find(t); it != first.end()) {
        where.push_back(it->second + " = " + col);
      } else {
        first.emplace(t, col);
      }
    }
  }
  auto join = [](const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
  };
  std::vector<std::string> head_cols, sym_cols;
  for (int v : rep.head()) head_cols.push_back(first.at(Term::var(v)));
  for (int s : rep.symbols()) sym_cols.push_back(first.at(Term::symbol(s)));
  std::string body = "FROM " + join(from, ", ");
  if (!where.empty()) body += " WHERE " + join(where, " AND ");

  if (sym_cols.empty()) return "SELECT DISTINCT " + join(head_cols, ", ") + " " + body + ";";

  const std::string having = " HAVING COUNT(*) >= :minsup;";
  // When every variable is in the head, distinct rows of the join are distinct answers.
  if (rep.variables().size() == rep.head().size())
    return "SELECT " + join(sym_cols, ", ") + ", COUNT(*) " + body + " GROUP BY " +
           join(sym_cols, ", ") + having;
  std::vector<std::string> inner, outer;
  for (std::size_t i = 0; i < sym_cols.size(); ++i) {
    inner.push_back(sym_cols[i] + " AS c" + std::to_string(i + 1));
    outer.push_back("c" + std::to_string(i + 1));
  }
  for (std::size_t i = 0; i < head_cols.size(); ++i)
    inner.push_back(head_cols[i] + " AS h" + std::to_string(i + 1));
  return "SELECT " + join(outer, ", ") + ", COUNT(*) FROM (SELECT DISTINCT " + join(inner, ", ") +
         " " + body + ") AS m GROUP BY " + join(outer, ", ") + having;
}

}  // namespace cqmine
