#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cqmine/query.hpp"

namespace cqmine {

/// How symbolic constants of the source query may be mapped.
enum class SymbolMode {
  // To a constant or to a symbolic constant. Orders symbolic queries by generality.
  general,
  // Injectively to symbolic constants. Preserves every instantiation; used for cores and dedup.
  rigid,
};

/// What the mapping must do with the source head.
enum class HeadMode {
  pointwise,  // source head i goes to target head i
  cover,      // every target head variable is the image of some source head variable
  none,
};

using Mapping = std::map<Term, Term>;

namespace detail {

class HomomorphismSearch {
 public:
  HomomorphismSearch(const Query& from, const Query& to, SymbolMode symbols, HeadMode head)
      : from_(from), to_(to), symbols_(symbols), head_(head) {}

  std::optional<Mapping> run() {
    if (head_ == HeadMode::pointwise) {
      if (from_.head().size() != to_.head().size()) return std::nullopt;
      for (std::size_t i = 0; i < from_.head().size(); ++i) {
        Term src = Term::var(from_.head()[i]), dst = Term::var(to_.head()[i]);
        auto [it, fresh] = map_.try_emplace(src, dst);
        if (!fresh && it->second != dst) return std::nullopt;
      }
    }
    if (head_ == HeadMode::cover && to_.head().size() > from_.head().size()) return std::nullopt;
    by_relation_.clear();
    for (const auto& a : to_.body()) by_relation_[a.relation].push_back(&a);
    done_.assign(from_.body().size(), false);
    if (search(0)) return map_;
    return std::nullopt;
  }

 private:
  bool search(std::size_t depth) {
    if (depth == from_.body().size()) return head_ok();
    // most constrained atom next: fewest compatible targets
    std::size_t best = from_.body().size(), best_count = ~std::size_t{0};
    for (std::size_t i = 0; i < from_.body().size(); ++i) {
      if (done_[i]) continue;
      std::size_t count = 0;
      auto it = by_relation_.find(from_.body()[i].relation);
      if (it != by_relation_.end())
        for (const Atom* b : it->second)
          if (compatible(from_.body()[i], *b)) ++count;
      if (count == 0) return false;
      if (count < best_count) best = i, best_count = count;
    }
    done_[best] = true;
    const Atom& a = from_.body()[best];
    for (const Atom* b : by_relation_[a.relation]) {
      std::vector<Term> bound;
      if (!bind(a, *b, bound)) continue;
      if (search(depth + 1)) return true;
      unbind(bound);
    }
    done_[best] = false;
    return false;
  }

  bool allowed(const Term& src, const Term& dst) const {
    switch (src.kind) {
      case TermKind::constant: return src == dst;
      case TermKind::variable: return true;
      case TermKind::symbol:
        if (symbols_ == SymbolMode::general) return !dst.is_var();
        return dst.is_symbol() && !used_symbols_.count(dst);
    }
    return false;
  }

  bool compatible(const Atom& a, const Atom& b) const {
    std::map<Term, Term> local;
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      const Term& s = a.args[i];
      const Term& d = b.args[i];
      if (s.is_constant()) {
        if (s != d) return false;
        continue;
      }
      if (auto it = map_.find(s); it != map_.end()) {
        if (it->second != d) return false;
        continue;
      }
      if (auto it = local.find(s); it != local.end()) {
        if (it->second != d) return false;
        continue;
      }
      if (!allowed(s, d)) return false;
      if (s.is_symbol() && symbols_ == SymbolMode::rigid)
        for (const auto& [k, v] : local)
          if (k.is_symbol() && v == d) return false;
      local.emplace(s, d);
    }
    return true;
  }

  bool bind(const Atom& a, const Atom& b, std::vector<Term>& bound) {
    if (!compatible(a, b)) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      const Term& s = a.args[i];
      if (s.is_constant() || map_.count(s)) continue;
      map_.emplace(s, b.args[i]);
      if (s.is_symbol()) used_symbols_.insert(b.args[i]);
      bound.push_back(s);
    }
    return true;
  }

  void unbind(const std::vector<Term>& bound) {
    for (const auto& s : bound) {
      if (s.is_symbol()) used_symbols_.erase(map_.at(s));
      map_.erase(s);
    }
  }

  bool head_ok() const {
    if (head_ != HeadMode::cover) return true;
    std::set<Term> image;
    for (int v : from_.head()) {
      auto it = map_.find(Term::var(v));
      if (it != map_.end()) image.insert(it->second);
    }
    return std::all_of(to_.head().begin(), to_.head().end(),
                       [&](int v) { return image.count(Term::var(v)) > 0; });
  }

  const Query& from_;
  const Query& to_;
  SymbolMode symbols_;
  HeadMode head_;
  Mapping map_;
  std::set<Term> used_symbols_;
  std::map<std::string, std::vector<const Atom*>> by_relation_;
  std::vector<bool> done_;
};

}  // namespace detail

/// Searches a homomorphism from `from` into `to`: identity on constants, body atoms into body
/// atoms, head constrained per `head`.
inline std::optional<Mapping> find_homomorphism(const Query& from, const Query& to,
                                                SymbolMode symbols = SymbolMode::general,
                                                HeadMode head = HeadMode::pointwise) {
  return detail::HomomorphismSearch(from, to, symbols, head).run();
}

/// Containment mapping witnessing q1 ⊆ q2: maps q2's terms onto q1's terms.
/// Throws ConfigError when head arities differ.
inline std::optional<Mapping> find_containment_mapping(const Query& q2, const Query& q1,
                                                       SymbolMode symbols = SymbolMode::general) {
  if (q1.head().size() != q2.head().size()) throw ConfigError("head arity mismatch");
  return find_homomorphism(q2, q1, symbols, HeadMode::pointwise);
}

/// q1 ⊆ q2 on every instance. False when head arities differ.
inline bool is_contained(const Query& q1, const Query& q2, SymbolMode symbols = SymbolMode::general) {
  if (q1.head().size() != q2.head().size()) return false;
  return find_homomorphism(q2, q1, symbols, HeadMode::pointwise).has_value();
}

inline bool is_equivalent(const Query& q1, const Query& q2, SymbolMode symbols = SymbolMode::general) {
  return is_contained(q1, q2, symbols) && is_contained(q2, q1, symbols);
}

/// q1 is contained in some projection of q2's head, retained positions in any order.
inline bool is_diagonally_contained(const Query& q1, const Query& q2,
                                    SymbolMode symbols = SymbolMode::general) {
  return find_homomorphism(q2, q1, symbols, HeadMode::cover).has_value();
}

/// The core of q: greedily drops atoms while the query stays equivalent. Symbolic constants are
/// handled rigidly so every instantiation of the result is equivalent to that of q.
inline Query minimize(const Query& q) {
  std::vector<Atom> body = q.body();
  bool changed = true;
  while (changed && body.size() > 1) {
    changed = false;
    Query current(q.head(), body);
    for (std::size_t i = 0; i < body.size(); ++i) {
      std::vector<Atom> reduced = body;
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(i));
      Query candidate(q.head(), reduced);
      if (!candidate.is_safe()) continue;
      if (find_homomorphism(current, candidate, SymbolMode::rigid, HeadMode::pointwise)) {
        body = std::move(reduced);
        changed = true;
        break;
      }
    }
  }
  return Query(q.head(), std::move(body));
}

struct CanonicalForm {
  Query query;      // renamed representative: head vars 0..k-1, then body vars, symbols 0..s-1
  std::string key;  // equal keys iff the queries are isomorphic
  std::map<Term, Term> renaming;  // original term -> term in `query`
};

namespace detail {

inline void append_term(std::string& out, const Term& t) {
  switch (t.kind) {
    case TermKind::variable: out += 'v' + std::to_string(t.id); break;
    case TermKind::symbol: out += 's' + std::to_string(t.id); break;
    case TermKind::constant: out += quote_constant(t.value); break;
  }
}

inline std::string key_of(const Query& q) {
  std::string out = "(";
  for (std::size_t i = 0; i < q.head().size(); ++i) {
    if (i) out += ',';
    out += 'v' + std::to_string(q.head()[i]);
  }
  out += ')';
  for (const auto& a : q.body()) {
    out += a.relation;
    out += '(';
    for (std::size_t j = 0; j < a.args.size(); ++j) {
      if (j) out += ',';
      append_term(out, a.args[j]);
    }
    out += ')';
  }
  return out;
}

/// Isomorphism-invariant colours of q's variables and symbolic constants, refined by their
/// neighbourhoods until stable. Head variables carry their position unless permute_head.
inline std::map<Term, int> refined_colours(const Query& q, bool permute_head) {
  std::map<Term, int> colour;
  std::map<Term, std::string> base;
  for (int v : q.variables()) {
    std::string c = "v";
    if (q.in_head(v)) {
      c += "H";
      if (!permute_head)
        c += std::to_string(std::find(q.head().begin(), q.head().end(), v) - q.head().begin());
    }
    base[Term::var(v)] = c;
  }
  for (int s : q.symbols()) base[Term::symbol(s)] = "s";
  auto rank = [](const std::map<Term, std::string>& sig) {
    std::set<std::string> distinct;
    for (const auto& [t, c] : sig) distinct.insert(c);
    std::map<Term, int> out;
    for (const auto& [t, c] : sig)
      out[t] = static_cast<int>(std::distance(distinct.begin(), distinct.find(c)));
    return std::make_pair(out, distinct.size());
  };
  auto [current, classes] = rank(base);
  while (true) {
    std::map<Term, std::vector<std::string>> occ;
    for (const auto& a : q.body()) {
      std::string atom = a.relation + "(";
      for (const auto& t : a.args) {
        if (t.is_constant()) atom += quote_constant(t.value);
        else atom += '#' + std::to_string(current.at(t));
        atom += ',';
      }
      for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!a.args[i].is_constant()) occ[a.args[i]].push_back(std::to_string(i) + '@' + atom);
    }
    std::map<Term, std::string> sig;
    for (auto& [t, list] : occ) {
      std::sort(list.begin(), list.end());
      std::string c = base.at(t) + '|' + std::to_string(current.at(t));
      for (const auto& o : list) c += ';' + o;
      sig[t] = std::move(c);
    }
    auto [next, n] = rank(sig);
    current = std::move(next);
    if (n == classes) break;
    classes = n;
  }
  return current;
}

/// Lexicographically least rendering over all renamings (and head orders when permute_head).
/// Only renamings that respect the refined colour classes are tried; since the classes are
/// isomorphism-invariant the result is still canonical.
inline CanonicalForm least_renaming(const Query& q, bool permute_head) {
  const std::vector<int>& head = q.head();
  const int k = static_cast<int>(head.size());
  const auto colour = refined_colours(q, permute_head);

  // ordered slots: head variables (fixed, or grouped by colour), other variables, symbols
  struct Group {
    std::vector<Term> members;
    std::vector<Term> targets;
  };
  std::vector<Group> groups;
  auto add_groups = [&](const std::vector<Term>& terms, int first_target, TermKind kind) {
    std::map<int, std::vector<Term>> by_colour;
    for (const auto& t : terms) by_colour[colour.at(t)].push_back(t);
    int next = first_target;
    for (auto& [c, members] : by_colour) {
      Group g{members, {}};
      for (std::size_t i = 0; i < members.size(); ++i)
        g.targets.push_back(kind == TermKind::variable ? Term::var(next++) : Term::symbol(next++));
      groups.push_back(std::move(g));
    }
  };
  std::map<Term, Term> fixed;
  std::vector<Term> head_terms, others, syms;
  for (int i = 0; i < k; ++i) {
    if (permute_head) head_terms.push_back(Term::var(head[static_cast<std::size_t>(i)]));
    else fixed[Term::var(head[static_cast<std::size_t>(i)])] = Term::var(i);
  }
  for (int v : q.variables())
    if (!q.in_head(v)) others.push_back(Term::var(v));
  for (int s : q.symbols()) syms.push_back(Term::symbol(s));
  add_groups(head_terms, 0, TermKind::variable);
  add_groups(others, k, TermKind::variable);
  add_groups(syms, 0, TermKind::symbol);

  std::optional<CanonicalForm> best;
  std::map<Term, Term> sub = fixed;
  std::vector<std::vector<std::size_t>> perms(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    perms[g].resize(groups[g].members.size());
    std::iota(perms[g].begin(), perms[g].end(), 0);
  }
  auto visit = [&](auto&& self, std::size_t g) -> void {
    if (g == groups.size()) {
      std::vector<int> new_head;
      for (int v : head) new_head.push_back(sub.at(Term::var(v)).id);
      if (permute_head) std::sort(new_head.begin(), new_head.end());
      Query renamed = substitute(q, sub, new_head);
      std::string key = key_of(renamed);
      if (!best || key < best->key) best = CanonicalForm{std::move(renamed), std::move(key), sub};
      return;
    }
    auto& p = perms[g];
    std::sort(p.begin(), p.end());
    do {
      for (std::size_t i = 0; i < p.size(); ++i) sub[groups[g].members[p[i]]] = groups[g].targets[i];
      self(self, g + 1);
    } while (std::next_permutation(p.begin(), p.end()));
  };
  visit(visit, 0);
  return *best;
}

}  // namespace detail

/// Minimizes, then picks the least renaming. Equal keys imply equivalent queries; with
/// `modulo_head_permutation` set, head order is ignored.
inline CanonicalForm canonical_form(const Query& q, bool modulo_head_permutation) {
  return detail::least_renaming(minimize(q), modulo_head_permutation);
}

inline std::string canonical_key(const Query& q, bool modulo_head_permutation) {
  return canonical_form(q, modulo_head_permutation).key;
}

struct RenderedQuery {
  std::string text;
  std::map<int, int> symbol_labels;  // symbol id in the input query -> n of its printed $c<n>
};

/// Deterministic text of q (not minimized, head order kept). Variables are numbered x1, x2, ...
/// by first occurrence, symbolic constants $c1, $c2, ... likewise.
inline RenderedQuery render_query_labeled(const Query& q) {
  auto form = detail::least_renaming(q, false);
  const Query& rep = form.query;
  std::map<int, int> vars, syms;
  auto note = [](std::map<int, int>& m, int id) { m.try_emplace(id, static_cast<int>(m.size())); };
  for (int v : rep.head()) note(vars, v);
  for (const auto& a : rep.body())
    for (const auto& t : a.args) {
      if (t.is_var()) note(vars, t.id);
      if (t.is_symbol()) note(syms, t.id);
    }
  auto term = [&](const Term& t) -> std::string {
    switch (t.kind) {
      case TermKind::variable: return "x" + std::to_string(vars.at(t.id) + 1);
      case TermKind::symbol: return "$c" + std::to_string(syms.at(t.id) + 1);
      case TermKind::constant: return detail::quote_constant(t.value);
    }
    return {};
  };
  RenderedQuery out;
  std::string& text = out.text;
  text = "Q(";
  for (std::size_t i = 0; i < rep.head().size(); ++i) {
    if (i) text += ',';
    text += term(Term::var(rep.head()[i]));
  }
  text += ") :- ";
  for (std::size_t i = 0; i < rep.body().size(); ++i) {
    if (i) text += ", ";
    const auto& a = rep.body()[i];
    text += a.relation + "(";
    for (std::size_t j = 0; j < a.args.size(); ++j) {
      if (j) text += ',';
      text += term(a.args[j]);
    }
    text += ')';
  }
  text += '.';
  for (const auto& [from, to] : form.renaming)
    if (from.is_symbol()) out.symbol_labels[from.id] = syms.at(to.id) + 1;
  return out;
}

inline std::string render_query(const Query& q) { return render_query_labeled(q).text; }

}  // namespace cqmine
