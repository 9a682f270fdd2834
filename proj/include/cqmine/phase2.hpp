#pragma once

#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "cqmine/containment.hpp"
#include "cqmine/eval.hpp"
#include "cqmine/parallel.hpp"
#include "cqmine/phase1.hpp"

namespace cqmine {

struct RuleConfig {
  double minconf = 1.0;
  bool include_trivial = false;
  unsigned jobs = 1;

  void validate() const {
    if (!(minconf > 0.0 && minconf <= 1.0)) throw ConfigError("minconf must lie in (0, 1]");
  }
};

/// antecedent => consequent, with the consequent contained in the antecedent.
struct AssociationRule {
  Query antecedent;
  Query consequent;
  std::size_t antecedent_support = 0;
  std::size_t support = 0;  // of the consequent
  double confidence = 0.0;
  std::string antecedent_text;
  std::string consequent_text;
};

/// Meets the threshold: support / antecedent_support >= minconf, with slack for rounding.
inline bool is_confident(std::size_t support, std::size_t antecedent_support, double minconf) {
  return static_cast<long double>(support) + 1e-9L >=
         static_cast<long double>(minconf) * static_cast<long double>(antecedent_support);
}

/// Key of a rule up to renaming of either side and a simultaneous permutation of both heads.
inline std::string rule_key(const Query& antecedent, const Query& consequent) {
  const std::size_t k = consequent.head().size();
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::string best;
  bool first = true;
  do {
    std::vector<int> ah, ch;
    for (std::size_t i : perm) {
      ah.push_back(antecedent.head()[i]);
      ch.push_back(consequent.head()[i]);
    }
    std::string key = canonical_key(Query(ah, antecedent.body()), false) + " => " +
                      canonical_key(Query(ch, consequent.body()), false);
    if (first || key < best) best = std::move(key);
    first = false;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Plain queries admissible on either side of a rule.
inline bool in_rule_language(const Query& q, const MinerConfig& cfg) {
  return !q.head().empty() && !q.body().empty() && q.head_distinct() && q.is_safe() &&
         q.body().size() <= cfg.max_atoms && !q.has_symbols();
}

/// Single inverse extension, inverse join or inverse selection steps on q that keep its head.
/// Results are minimized and renamed with head positions preserved.
inline std::vector<Query> antecedent_generalizations(const Query& q0, const MinerConfig& cfg) {
  const Query q = minimize(q0);
  const std::string self = canonical_key(q, false);
  std::map<std::string, Query> out;
  auto add = [&](const Query& raw) {
    if (!raw.is_safe() || raw.body().empty()) return;
    auto form = canonical_form(raw, false);
    if (form.key == self || !in_rule_language(form.query, cfg)) return;
    out.try_emplace(form.key, std::move(form.query));
  };
  const int fresh = q.next_id();

  // inverse extension: drop an atom
  if (q.body().size() > 1)
    for (std::size_t i = 0; i < q.body().size(); ++i) {
      auto body = q.body();
      body.erase(body.begin() + static_cast<std::ptrdiff_t>(i));
      add(Query(q.head(), body));
    }
  // inverse join / inverse selection: some occurrences of a variable or constant become fresh
  std::map<Term, std::vector<std::pair<std::size_t, std::size_t>>> where;
  for (std::size_t i = 0; i < q.body().size(); ++i)
    for (std::size_t c = 0; c < q.body()[i].args.size(); ++c)
      where[q.body()[i].args[c]].emplace_back(i, c);
  for (const auto& [term, positions] : where) {
    if (term.is_symbol()) continue;
    const std::size_t n = positions.size();
    if (term.is_var() && n < 2) continue;
    // variables keep at least one occurrence; constants may be replaced everywhere
    const std::size_t limit = (std::size_t{1} << n) - (term.is_var() ? 1 : 0);
    for (std::size_t mask = 1; mask < limit; ++mask) {
      auto body = q.body();
      for (std::size_t k = 0; k < n; ++k)
        if (mask >> k & 1) body[positions[k].first].args[positions[k].second] = Term::var(fresh);
      add(Query(q.head(), body));
    }
  }
  // an atom duplicated, then each copy weakened at different positions; the intermediate
  // duplicate is equivalent to q, so both steps are taken at once
  if (q.body().size() < cfg.max_atoms)
    for (std::size_t i = 0; i < q.body().size(); ++i) {
      const Atom& a = q.body()[i];
      const std::size_t n = a.args.size();
      auto weaken = [&](std::size_t mask, int base) {
        Atom w = a;
        for (std::size_t c = 0; c < n; ++c)
          if (mask >> c & 1) w.args[c] = Term::var(base + static_cast<int>(c));
        return w;
      };
      const std::size_t full = std::size_t{1} << n;
      for (std::size_t m1 = 1; m1 < full; ++m1)
        for (std::size_t m2 = m1 + 1; m2 < full; ++m2) {
          auto body = q.body();
          body[i] = weaken(m1, fresh);
          body.push_back(weaken(m2, fresh + static_cast<int>(n)));
          add(Query(q.head(), body));
        }
    }
  std::vector<Query> result;
  for (auto& [k, g] : out) result.push_back(std::move(g));
  return result;
}

/// For every frequent query Q, walks antecedents upward from Q => Q, keeping the confident ones.
class Phase2Miner {
 public:
  Phase2Miner(const Instance& inst, MinerConfig mcfg, RuleConfig rcfg)
      : inst_(inst), mcfg_(std::move(mcfg)), rcfg_(rcfg) {
    rcfg_.validate();
  }

  std::vector<AssociationRule> run(const MinerState& state) {
    struct Consequent {
      Query query;
      std::size_t support;
    };
    std::map<std::string, Consequent> consequents;
    auto note = [&](const Query& q, std::size_t sup) {
      auto form = canonical_form(q, true);
      memo_.try_emplace(form.key, sup);
      consequents.try_emplace(form.key, Consequent{form.query, sup});
    };
    for (const auto& [key, rec] : state.frequent_index) {
      if (!rec.symbolic()) {
        note(rec.query, rec.support);
        continue;
      }
      for (const auto& [values, count] : rec.frequent_constants.counts)
        note(instantiate(rec.query, rec.frequent_constants.assignment(values)), count);
    }

    std::vector<const Consequent*> work;
    for (const auto& [k, c] : consequents) work.push_back(&c);
    std::vector<std::vector<AssociationRule>> found(work.size());
    parallel_for(work.size(), rcfg_.jobs, [&](std::size_t i) {
      found[i] = rules_for(work[i]->query, work[i]->support);
    });

    std::map<std::string, AssociationRule> unique;
    for (auto& rules : found)
      for (auto& r : rules) unique.try_emplace(rule_key(r.antecedent, r.consequent), std::move(r));
    std::vector<AssociationRule> out;
    for (auto& [k, r] : unique) out.push_back(std::move(r));
    std::sort(out.begin(), out.end(), [](const AssociationRule& a, const AssociationRule& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      if (a.antecedent_text != b.antecedent_text) return a.antecedent_text < b.antecedent_text;
      return a.consequent_text < b.consequent_text;
    });
    return out;
  }

  std::vector<AssociationRule> rules_for(const Query& consequent, std::size_t support) {
    std::vector<AssociationRule> rules;
    const std::string consequent_text = render_query(consequent);
    auto emit = [&](const Query& antecedent, std::size_t antecedent_support) {
      rules.push_back({antecedent, consequent, antecedent_support, support,
                       static_cast<double>(support) / static_cast<double>(antecedent_support),
                       render_query(antecedent), consequent_text});
    };
    if (rcfg_.include_trivial) emit(consequent, support);
    std::set<std::string> visited{canonical_key(consequent, false)};
    std::vector<Query> frontier{consequent};
    while (!frontier.empty()) {
      std::vector<Query> next;
      for (const auto& a : frontier)
        for (auto& g : antecedent_generalizations(a, mcfg_)) {
          if (!visited.insert(canonical_key(g, false)).second) continue;
          std::size_t sup = support_of(g);
          if (!is_confident(support, sup, rcfg_.minconf)) continue;
          emit(g, sup);
          next.push_back(std::move(g));
        }
      frontier = std::move(next);
    }
    return rules;
  }

 private:
  std::size_t support_of(const Query& q) {
    const std::string key = canonical_key(q, true);
    {
      std::lock_guard lock(memo_mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    std::size_t sup = support(q, inst_);
    std::lock_guard lock(memo_mutex_);
    return memo_.try_emplace(key, sup).first->second;
  }

  const Instance& inst_;
  MinerConfig mcfg_;
  RuleConfig rcfg_;
  std::map<std::string, std::size_t> memo_;
  std::mutex memo_mutex_;
};

inline std::vector<AssociationRule> run_phase2(const MinerState& state, const Instance& inst,
                                               const MinerConfig& mcfg, const RuleConfig& rcfg) {
  return Phase2Miner(inst, mcfg, rcfg).run(state);
}

}  // namespace cqmine
