#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cqmine/error.hpp"
#include "cqmine/relational.hpp"

namespace cqmine {

enum class TermKind : std::uint8_t { variable, constant, symbol };

/// A variable, a constant, or a symbolic constant standing for one unknown constant.
struct Term {
  TermKind kind = TermKind::variable;
  int id = 0;          // variables and symbols
  std::string value;   // constants

  static Term var(int id) { return {TermKind::variable, id, {}}; }
  static Term constant(std::string v) { return {TermKind::constant, 0, std::move(v)}; }
  static Term symbol(int id) { return {TermKind::symbol, id, {}}; }

  bool is_var() const { return kind == TermKind::variable; }
  bool is_constant() const { return kind == TermKind::constant; }
  bool is_symbol() const { return kind == TermKind::symbol; }

  auto operator<=>(const Term&) const = default;
};

struct Atom {
  std::string relation;
  std::vector<Term> args;

  auto operator<=>(const Atom&) const = default;
};

/// A conjunctive query. The body is kept sorted and duplicate-free (set semantics).
class Query {
 public:
  Query() = default;
  Query(std::vector<int> head, std::vector<Atom> body) : head_(std::move(head)), body_(std::move(body)) {
    normalize();
  }

  const std::vector<int>& head() const { return head_; }
  const std::vector<Atom>& body() const { return body_; }

  std::set<int> variables() const {
    std::set<int> out;
    for (const auto& a : body_)
      for (const auto& t : a.args)
        if (t.is_var()) out.insert(t.id);
    return out;
  }

  std::set<int> symbols() const {
    std::set<int> out;
    for (const auto& a : body_)
      for (const auto& t : a.args)
        if (t.is_symbol()) out.insert(t.id);
    return out;
  }

  std::set<std::string> constants() const {
    std::set<std::string> out;
    for (const auto& a : body_)
      for (const auto& t : a.args)
        if (t.is_constant()) out.insert(t.value);
    return out;
  }

  bool has_symbols() const { return !symbols().empty(); }
  bool has_constants() const { return !constants().empty(); }

  bool in_head(int var) const { return std::find(head_.begin(), head_.end(), var) != head_.end(); }

  /// Every head variable occurs in the body.
  bool is_safe() const {
    auto vars = variables();
    return std::all_of(head_.begin(), head_.end(), [&](int v) { return vars.count(v) > 0; });
  }

  bool head_distinct() const {
    std::set<int> s(head_.begin(), head_.end());
    return s.size() == head_.size();
  }

  /// One past the largest variable or symbol id in use.
  int next_id() const {
    int m = 0;
    for (int v : head_) m = std::max(m, v + 1);
    for (const auto& a : body_)
      for (const auto& t : a.args)
        if (!t.is_constant()) m = std::max(m, t.id + 1);
    return m;
  }

  bool operator==(const Query& o) const { return head_ == o.head_ && body_ == o.body_; }

 private:
  void normalize() {
    std::sort(body_.begin(), body_.end());
    body_.erase(std::unique(body_.begin(), body_.end()), body_.end());
  }

  std::vector<int> head_;
  std::vector<Atom> body_;
};

/// Applies a term substitution to every body position; unmapped terms are kept.
inline Query substitute(const Query& q, const std::map<Term, Term>& sub, std::vector<int> head) {
  std::vector<Atom> body;
  body.reserve(q.body().size());
  for (const auto& a : q.body()) {
    Atom b{a.relation, {}};
    b.args.reserve(a.args.size());
    for (const auto& t : a.args) {
      auto it = sub.find(t);
      b.args.push_back(it == sub.end() ? t : it->second);
    }
    body.push_back(std::move(b));
  }
  return Query(std::move(head), std::move(body));
}

/// Replaces each symbolic constant by the constant bound to it in `assignment`.
inline Query instantiate(const Query& q, const std::map<int, std::string>& assignment) {
  std::map<Term, Term> sub;
  for (const auto& [sym, value] : assignment) sub[Term::symbol(sym)] = Term::constant(value);
  return substitute(q, sub, q.head());
}

// ---------------------------------------------------------------------------
// Text form:  Q(x1,x2) :- likes(x1,x2), serves(x3,'Duvel'), likes(x1,$c1).

namespace detail {

inline std::string quote_constant(const std::string& v) {
  std::string out = "'";
  for (char c : v) {
    if (c == '\'' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

class QueryParser {
 public:
  QueryParser(std::string_view text, const Schema* schema) : text_(text), schema_(schema) {}

  Query parse() {
    skip_ws();
    std::string name = identifier("query name");
    (void)name;
    expect('(');
    std::vector<int> head;
    std::vector<std::size_t> head_pos;
    skip_ws();
    if (!peek(')')) {
      do {
        skip_ws();
        std::size_t at = pos_;
        Term t = term();
        if (!t.is_var()) throw ParseError("head may only contain variables", at);
        if (std::find(head.begin(), head.end(), t.id) != head.end())
          throw ParseError("duplicate head variable", at);
        head.push_back(t.id);
        head_pos.push_back(at);
        skip_ws();
      } while (accept(','));
    }
    expect(')');
    skip_ws();
    if (!(accept(':') && accept('-'))) throw ParseError("expected ':-'", pos_);
    std::vector<Atom> body;
    do {
      body.push_back(atom());
      skip_ws();
    } while (accept(','));
    accept('.');
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    if (body.empty()) throw ParseError("empty body", pos_);
    Query q(std::move(head), std::move(body));
    auto vars = q.variables();
    for (std::size_t i = 0; i < q.head().size(); ++i)
      if (!vars.count(q.head()[i]))
        throw ParseError("unsafe head variable '" + var_names_.at(q.head()[i]) + "'", head_pos[i]);
    return q;
  }

 private:
  Atom atom() {
    skip_ws();
    std::size_t at = pos_;
    Atom a{identifier("relation name"), {}};
    expect('(');
    do {
      skip_ws();
      a.args.push_back(term());
      skip_ws();
    } while (accept(','));
    expect(')');
    if (schema_) {
      const auto* decl = schema_->find(a.relation);
      if (!decl) throw ParseError("unknown relation '" + a.relation + "'", at);
      if (decl->arity() != a.args.size())
        throw ParseError("relation '" + a.relation + "' has arity " +
                             std::to_string(decl->arity()) + ", got " +
                             std::to_string(a.args.size()),
                         at);
    }
    return a;
  }

  Term term() {
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '\'') return Term::constant(quoted());
    if (c == '$') {
      std::size_t at = pos_++;
      std::string id = identifier("symbolic constant");
      auto [it, fresh] = sym_ids_.try_emplace(id, static_cast<int>(sym_ids_.size()));
      (void)fresh;
      if (id.empty()) throw ParseError("bad symbolic constant", at);
      return Term::symbol(it->second);
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::string id = identifier("variable");
      auto [it, fresh] = var_ids_.try_emplace(id, static_cast<int>(var_ids_.size()));
      if (fresh) var_names_[it->second] = id;
      return Term::var(it->second);
    }
    throw ParseError("expected variable, quoted constant or $symbol", pos_);
  }

  std::string quoted() {
    std::size_t at = pos_++;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '\'') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out.push_back(text_[pos_++]);
    }
    if (pos_ >= text_.size()) throw ParseError("unterminated constant", at);
    ++pos_;
    return out;
  }

  std::string identifier(const char* what) {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_ || std::isdigit(static_cast<unsigned char>(text_[start])))
      throw ParseError(std::string("expected ") + what, start);
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
  bool accept(char c) {
    skip_ws();
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  std::string_view text_;
  const Schema* schema_;
  std::size_t pos_ = 0;
  std::map<std::string, int> var_ids_;
  std::map<int, std::string> var_names_;
  std::map<std::string, int> sym_ids_;
};

}  // namespace detail

/// Parses `Name(v1,...,vk) :- r(t,...), ... .` and checks relations against the schema.
inline Query parse_query(std::string_view text, const Schema& schema) {
  return detail::QueryParser(text, &schema).parse();
}

/// Parses without schema checks; used by tests that build queries over ad-hoc relations.
inline Query parse_query_unchecked(std::string_view text) {
  return detail::QueryParser(text, nullptr).parse();
}

/// Prints the query exactly as stored, naming variables x<id+1> and symbols $c<id+1>.
inline std::string print_query(const Query& q) {
  auto term = [](const Term& t) -> std::string {
    switch (t.kind) {
      case TermKind::variable: return "x" + std::to_string(t.id + 1);
      case TermKind::symbol: return "$c" + std::to_string(t.id + 1);
      case TermKind::constant: return detail::quote_constant(t.value);
    }
    return {};
  };
  std::string out = "Q(";
  for (std::size_t i = 0; i < q.head().size(); ++i) {
    if (i) out += ',';
    out += term(Term::var(q.head()[i]));
  }
  out += ") :- ";
  for (std::size_t i = 0; i < q.body().size(); ++i) {
    if (i) out += ", ";
    const auto& a = q.body()[i];
    out += a.relation + "(";
    for (std::size_t j = 0; j < a.args.size(); ++j) {
      if (j) out += ',';
      out += term(a.args[j]);
    }
    out += ')';
  }
  out += '.';
  return out;
}

}  // namespace cqmine
