#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cqmine/containment.hpp"
#include "cqmine/eval.hpp"
#include "cqmine/parallel.hpp"
#include "cqmine/query.hpp"
#include "cqmine/relational.hpp"

namespace cqmine {

struct MinerConfig {
  std::size_t minsup = 1;
  std::size_t max_atoms = 2;
  bool enable_constants = true;
  // Warmode-style bias: every query contains this atom and its variables form the head.
  std::optional<Atom> key_atom;
  bool modulo_head_permutation = true;
  unsigned jobs = 1;

  void validate(const Schema& schema) const {
    if (minsup < 1) throw ConfigError("minsup must be at least 1");
    if (max_atoms < 1) throw ConfigError("max_atoms must be at least 1");
    if (key_atom) {
      const auto* decl = schema.find(key_atom->relation);
      if (!decl) throw ConfigError("key atom names unknown relation '" + key_atom->relation + "'");
      if (decl->arity() != key_atom->args.size()) throw ConfigError("key atom has wrong arity");
      std::set<Term> seen;
      for (const auto& t : key_atom->args)
        if (!t.is_var() || !seen.insert(t).second)
          throw ConfigError("key atom arguments must be distinct variables");
    }
  }
};

/// Parses a key-atom pattern such as `visits(_,_)`.
inline Atom parse_key_atom(std::string_view text, const Schema& schema) {
  std::string s = detail::trim(text);
  auto open = s.find('('), close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw InputError("key atom must look like rel(_,_)");
  Atom a{detail::trim(s.substr(0, open)), {}};
  const auto& decl = schema.at(a.relation);
  std::string inner = s.substr(open + 1, close - open - 1);
  std::size_t n = static_cast<std::size_t>(std::count(inner.begin(), inner.end(), ',')) + 1;
  if (n != decl.arity())
    throw InputError("key atom '" + a.relation + "' needs " + std::to_string(decl.arity()) +
                     " arguments");
  for (std::size_t i = 0; i < n; ++i) a.args.push_back(Term::var(static_cast<int>(i)));
  return a;
}

struct QueryRecord {
  Query query;
  std::string key;
  std::size_t support = 0;            // plain queries; best instantiation for symbolic ones
  GroupedSupport frequent_constants;  // symbolic queries only
  std::size_t level = 0;

  bool symbolic() const { return query.has_symbols(); }
};

struct MinerLevel {
  std::vector<Query> candidates;       // C_i
  std::vector<std::string> frequent;   // keys of F_i, sorted
};

struct MinerState {
  std::vector<MinerLevel> levels;
  std::map<std::string, QueryRecord> frequent_index;
  std::set<std::string> infrequent_index;
  std::set<std::string> candidate_keys;  // union of all C_i
};

// ---------------------------------------------------------------------------
// Mining language and operations.

/// True iff the (minimized) query belongs to the bounded mining language.
inline bool in_language(const Query& q, const MinerConfig& cfg) {
  if (q.head().empty() || q.body().empty() || !q.head_distinct() || !q.is_safe()) return false;
  if (q.body().size() > cfg.max_atoms || q.has_constants()) return false;
  if (!cfg.enable_constants && q.has_symbols()) return false;
  if (cfg.key_atom) {
    std::set<int> head(q.head().begin(), q.head().end());
    if (head.size() != cfg.key_atom->args.size()) return false;
    bool found = false;
    for (const auto& a : q.body()) {
      if (a.relation != cfg.key_atom->relation) continue;
      std::set<int> vars;
      bool all_vars = true;
      for (const auto& t : a.args) {
        if (!t.is_var()) all_vars = false;
        else vars.insert(t.id);
      }
      if (all_vars && vars == head && vars.size() == a.args.size()) found = true;
    }
    if (!found) return false;
  }
  return true;
}

namespace detail {

inline std::vector<int> remove_from_head(const std::vector<int>& head, int v) {
  std::vector<int> out;
  for (int h : head)
    if (h != v) out.push_back(h);
  return out;
}

inline std::vector<int> rename_in_head(const std::vector<int>& head, int from, int to) {
  std::vector<int> out;
  for (int h : head) {
    int r = h == from ? to : h;
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

/// Collects canonical forms of in-language queries other than `self`, keyed for determinism.
class FormSet {
 public:
  FormSet(const MinerConfig& cfg, std::string self) : cfg_(cfg), self_(std::move(self)) {}

  void add(const Query& raw) {
    if (raw.head().empty() || !raw.is_safe()) return;
    auto form = canonical_form(raw, cfg_.modulo_head_permutation);
    if (form.key == self_ || !in_language(form.query, cfg_)) return;
    forms_.try_emplace(form.key, std::move(form));
  }

  std::map<std::string, CanonicalForm>& forms() { return forms_; }

 private:
  const MinerConfig& cfg_;
  std::string self_;
  std::map<std::string, CanonicalForm> forms_;
};

inline std::vector<Query> queries_of(std::map<std::string, CanonicalForm>& forms) {
  std::vector<Query> out;
  for (auto& [k, f] : forms) out.push_back(f.query);
  return out;
}

}  // namespace detail

/// C_1: every multiset of max_atoms relation atoms over pairwise distinct fresh variables, all of
/// them in the head. With a key atom, the key atom alone.
inline std::vector<Query> initial_candidates(const Schema& schema, const MinerConfig& cfg) {
  std::map<std::string, CanonicalForm> forms;
  auto add = [&](const Query& q) {
    auto form = canonical_form(q, cfg.modulo_head_permutation);
    forms.try_emplace(form.key, std::move(form));
  };
  if (cfg.key_atom) {
    std::vector<int> head;
    for (const auto& t : cfg.key_atom->args) head.push_back(t.id);
    add(Query(head, {*cfg.key_atom}));
    return detail::queries_of(forms);
  }
  const auto& rels = schema.relations();
  std::vector<std::size_t> pick(cfg.max_atoms, 0);
  while (true) {
    std::vector<Atom> body;
    std::vector<int> head;
    int next = 0;
    for (std::size_t r : pick) {
      Atom a{rels[r].name, {}};
      for (std::size_t c = 0; c < rels[r].arity(); ++c) {
        a.args.push_back(Term::var(next));
        head.push_back(next++);
      }
      body.push_back(std::move(a));
    }
    add(Query(head, body));
    // next non-decreasing index sequence
    std::size_t i = pick.size();
    while (i > 0 && pick[i - 1] + 1 == rels.size()) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < pick.size(); ++j) pick[j] = pick[i - 1];
  }
  return detail::queries_of(forms);
}

namespace detail {

inline std::map<std::string, CanonicalForm> specialization_forms(const Query& q0, const Schema& schema,
                                                                 const MinerConfig& cfg) {
  const Query q = minimize(q0);
  FormSet out(cfg, canonical_form(q, cfg.modulo_head_permutation).key);
  const auto vars = q.variables();

  // extension: a new atom over fresh variables; the head is unchanged
  if (q.body().size() < cfg.max_atoms) {
    for (const auto& decl : schema.relations()) {
      int next = q.next_id();
      std::vector<Atom> body = q.body();
      Atom a{decl.name, {}};
      for (std::size_t c = 0; c < decl.arity(); ++c) a.args.push_back(Term::var(next++));
      body.push_back(std::move(a));
      out.add(Query(q.head(), body));
    }
  }
  // join: replace every occurrence of x by y
  for (int x : vars)
    for (int y : vars) {
      if (x == y) continue;
      if (cfg.key_atom && q.in_head(x) && q.in_head(y)) continue;
      out.add(substitute(q, {{Term::var(x), Term::var(y)}}, rename_in_head(q.head(), x, y)));
    }
  // selection: a non-head variable becomes a fresh symbolic constant
  if (cfg.enable_constants)
    for (int x : vars)
      if (!q.in_head(x)) out.add(substitute(q, {{Term::var(x), Term::symbol(q.next_id())}}, q.head()));
  // projection: drop a head variable, never emptying the head
  if (!cfg.key_atom && q.head().size() > 1)
    for (int x : q.head()) out.add(Query(remove_from_head(q.head(), x), q.body()));
  return std::move(out.forms());
}

/// Single inverse-operation results: queries of which q may be a specialization. May contain
/// queries that are more general than q without q being one of their specializations; callers
/// filter with specialization_forms.
inline std::map<std::string, CanonicalForm> generalization_candidates(const Query& q0,
                                                                      const MinerConfig& cfg) {
  const Query q = minimize(q0);
  FormSet out(cfg, canonical_form(q, cfg.modulo_head_permutation).key);
  const auto vars = q.variables();
  const int fresh = q.next_id();

  std::map<int, int> occurrences;
  for (const auto& a : q.body())
    for (const auto& t : a.args)
      if (t.is_var()) ++occurrences[t.id];

  if (!cfg.key_atom) {
    // inverse projection: a body variable joins the head ...
    for (int v : vars)
      if (!q.in_head(v)) {
        auto head = q.head();
        head.push_back(v);
        out.add(Query(head, q.body()));
      }
    // ... or a new head variable whose atom folds away once it is projected out again
    if (q.body().size() < cfg.max_atoms) {
      std::vector<Term> pool;
      for (int v : vars) pool.push_back(Term::var(v));
      for (int s : q.symbols()) pool.push_back(Term::symbol(s));
      const Term added = Term::var(fresh);
      pool.push_back(added);
      pool.push_back(Term::var(-1));  // placeholder: a distinct fresh variable per position
      for (const auto& a : q.body()) {
        const std::size_t arity = a.args.size();
        std::vector<std::size_t> choice(arity, 0);
        while (true) {
          Atom extra{a.relation, {}};
          bool uses_added = false;
          for (std::size_t c = 0; c < arity; ++c) {
            Term t = pool[choice[c]];
            if (t == Term::var(-1)) t = Term::var(fresh + 1 + static_cast<int>(c));
            if (t == added) uses_added = true;
            extra.args.push_back(t);
          }
          if (uses_added) {
            auto body = q.body();
            body.push_back(extra);
            auto head = q.head();
            head.push_back(fresh);
            out.add(Query(head, body));
          }
          std::size_t i = 0;
          while (i < arity && ++choice[i] == pool.size()) choice[i++] = 0;
          if (i == arity) break;
        }
      }
    }
  }
  // inverse extension: drop an atom whose variables are distinct, private and not in the head
  for (std::size_t i = 0; i < q.body().size() && q.body().size() > 1; ++i) {
    std::set<int> own;
    bool removable = true;
    for (const auto& t : q.body()[i].args)
      if (!t.is_var() || occurrences[t.id] != 1 || q.in_head(t.id) || !own.insert(t.id).second)
        removable = false;
    if (!removable) continue;
    auto body = q.body();
    body.erase(body.begin() + static_cast<std::ptrdiff_t>(i));
    out.add(Query(q.head(), body));
  }
  // inverse join: split some occurrences of a variable off into a fresh one
  for (int y : vars) {
    std::vector<std::pair<std::size_t, std::size_t>> where;
    for (std::size_t i = 0; i < q.body().size(); ++i)
      for (std::size_t c = 0; c < q.body()[i].args.size(); ++c)
        if (q.body()[i].args[c] == Term::var(y)) where.emplace_back(i, c);
    if (where.size() < 2) continue;
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << where.size()); ++mask) {
      auto body = q.body();
      for (std::size_t k = 0; k < where.size(); ++k)
        if (mask >> k & 1) body[where[k].first].args[where[k].second] = Term::var(fresh);
      out.add(Query(q.head(), body));
      if (q.in_head(y) && !cfg.key_atom) {
        auto head = q.head();
        head.push_back(fresh);
        out.add(Query(head, body));
      }
    }
  }
  // inverse selection: a symbolic constant becomes a fresh body variable
  for (int s : q.symbols()) out.add(substitute(q, {{Term::symbol(s), Term::var(fresh)}}, q.head()));
  return std::move(out.forms());
}

}  // namespace detail

/// Every single-operation specialization of q (extension, join, selection, projection),
/// minimized and canonicalized, restricted to the mining language.
inline std::vector<Query> specializations(const Query& q, const Schema& schema, const MinerConfig& cfg) {
  auto forms = detail::specialization_forms(q, schema, cfg);
  return detail::queries_of(forms);
}

/// The in-language queries from which q is obtained by a single specialization step.
inline std::vector<Query> immediate_generalizations(const Query& q, const Schema& schema,
                                                    const MinerConfig& cfg) {
  const std::string self = canonical_key(q, cfg.modulo_head_permutation);
  std::vector<Query> out;
  for (auto& [key, form] : detail::generalization_candidates(q, cfg)) {
    auto below = detail::specialization_forms(form.query, schema, cfg);
    if (below.count(self)) out.push_back(form.query);
  }
  return out;
}

/// Levelwise search for all frequent queries of the mining language.
class Phase1Miner {
 public:
  Phase1Miner(const Instance& inst, MinerConfig cfg) : inst_(inst), cfg_(std::move(cfg)) {
    cfg_.validate(inst.schema());
  }

  MinerState run() {
    MinerState state;
    std::vector<Query> candidates = initial_candidates(inst_.schema(), cfg_);
    for (std::size_t level = 1; !candidates.empty(); ++level) {
      MinerLevel current;
      current.candidates = candidates;
      std::vector<std::string> keys;
      for (const auto& q : candidates) {
        keys.push_back(canonical_key(q, cfg_.modulo_head_permutation));
        state.candidate_keys.insert(keys.back());
      }
      std::vector<std::optional<QueryRecord>> results(candidates.size());
      parallel_for(candidates.size(), cfg_.jobs, [&](std::size_t i) {
        results[i] = evaluate_candidate(candidates[i], keys[i], level);
      });
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (results[i]) {
          current.frequent.push_back(keys[i]);
          state.frequent_index.emplace(keys[i], std::move(*results[i]));
        } else {
          state.infrequent_index.insert(keys[i]);
        }
      }
      std::sort(current.frequent.begin(), current.frequent.end());
      state.levels.push_back(current);
      candidates = prune_candidates(generate(state, current), state);
    }
    return state;
  }

  /// Retains the generated queries none of whose immediate generalizations is outside the known
  /// frequent set, and that were not candidates before.
  std::vector<Query> prune_candidates(const std::vector<Query>& generated, const MinerState& state) {
    std::vector<Query> out;
    for (const auto& q : generated) {
      const std::string key = canonical_key(q, cfg_.modulo_head_permutation);
      if (state.candidate_keys.count(key)) continue;
      if (!has_unknown_generalization(q, key, state)) out.push_back(q);
    }
    return out;
  }

  const MinerConfig& config() const { return cfg_; }

 private:
  std::optional<QueryRecord> evaluate_candidate(const Query& q, const std::string& key,
                                                std::size_t level) const {
    QueryRecord rec{q, key, 0, {}, level};
    if (q.has_symbols()) {
      rec.frequent_constants = support_grouped(q, inst_, cfg_.minsup);
      if (rec.frequent_constants.empty()) return std::nullopt;
      rec.support = rec.frequent_constants.max_support();
    } else {
      rec.support = support(q, inst_);
      if (rec.support < cfg_.minsup) return std::nullopt;
    }
    return rec;
  }

  std::vector<Query> generate(const MinerState& state, const MinerLevel& level) {
    std::map<std::string, Query> next;
    for (const auto& key : level.frequent)
      for (const auto& [child_key, form] : specialization_keys(state.frequent_index.at(key).query, key))
        if (!state.candidate_keys.count(child_key)) next.try_emplace(child_key, form);
    std::vector<Query> out;
    for (auto& [k, q] : next) out.push_back(q);
    return out;
  }

  bool has_unknown_generalization(const Query& q, const std::string& key, const MinerState& state) {
    for (auto& [gkey, form] : detail::generalization_candidates(q, cfg_)) {
      if (state.frequent_index.count(gkey)) continue;
      if (specialization_keys(form.query, gkey).count(key)) return true;
    }
    return false;
  }

  const std::map<std::string, Query>& specialization_keys(const Query& q, const std::string& key) {
    auto it = spec_cache_.find(key);
    if (it != spec_cache_.end()) return it->second;
    std::map<std::string, Query> children;
    for (auto& [k, f] : detail::specialization_forms(q, inst_.schema(), cfg_)) children.emplace(k, f.query);
    return spec_cache_.emplace(key, std::move(children)).first->second;
  }

  const Instance& inst_;
  MinerConfig cfg_;
  std::map<std::string, std::map<std::string, Query>> spec_cache_;
};

inline MinerState run_phase1(const Instance& inst, const MinerConfig& cfg) {
  return Phase1Miner(inst, cfg).run();
}

}  // namespace cqmine
