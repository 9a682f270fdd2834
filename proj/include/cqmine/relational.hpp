#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cqmine/error.hpp"

namespace cqmine {

using ConstantId = std::uint32_t;

struct RelationDecl {
  std::string name;
  std::vector<std::string> columns;

  std::size_t arity() const { return columns.size(); }
};

class Schema {
 public:
  Schema() = default;

  explicit Schema(std::vector<RelationDecl> relations) {
    for (auto& r : relations) add(std::move(r));
  }

  void add(RelationDecl decl) {
    if (decl.name.empty()) throw InputError("relation with empty name");
    if (decl.columns.empty()) throw InputError("relation '" + decl.name + "' has no columns");
    if (index_.count(decl.name)) throw InputError("duplicate relation '" + decl.name + "'");
    index_.emplace(decl.name, relations_.size());
    relations_.push_back(std::move(decl));
  }

  const std::vector<RelationDecl>& relations() const { return relations_; }

  const RelationDecl* find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &relations_[it->second];
  }

  const RelationDecl& at(std::string_view name) const {
    if (const auto* r = find(name)) return *r;
    throw InputError("unknown relation '" + std::string(name) + "'");
  }

  std::size_t size() const { return relations_.size(); }

 private:
  std::vector<RelationDecl> relations_;
  std::map<std::string, std::size_t> index_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

// Splits one CSV record. Fields may be double-quoted; "" inside quotes is a literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && trim(field).empty()) {
      field.clear();
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else if (!(was_quoted && std::isspace(static_cast<unsigned char>(c)))) {
      field.push_back(c);
    }
  }
  if (quoted) throw InputError("unterminated quoted field on line " + std::to_string(line_no));
  fields.push_back(was_quoted ? field : trim(field));
  return fields;
}

inline std::string quote_csv_field(const std::string& v) {
  bool needs = v.empty() || v.find_first_of(",\"\n\r") != std::string::npos ||
               std::isspace(static_cast<unsigned char>(v.front())) ||
               std::isspace(static_cast<unsigned char>(v.back()));
  if (!needs) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

/// Parses schema text: one `name(col1, col2, ...)` per line, `#` starts a comment.
inline Schema parse_schema(std::string_view text) {
  Schema schema;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string line = detail::trim(raw);
    if (line.empty()) continue;
    auto open = line.find('('), close = line.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open ||
        !detail::trim(line.substr(close + 1)).empty()) {
      throw InputError("schema line " + std::to_string(line_no) + ": expected name(col, ...)");
    }
    RelationDecl decl;
    decl.name = detail::trim(line.substr(0, open));
    if (!detail::is_identifier(decl.name))
      throw InputError("schema line " + std::to_string(line_no) + ": bad relation name");
    std::string cols = line.substr(open + 1, close - open - 1);
    std::istringstream cs(cols);
    std::string col;
    while (std::getline(cs, col, ',')) {
      col = detail::trim(col);
      if (!detail::is_identifier(col))
        throw InputError("schema line " + std::to_string(line_no) + ": bad column name '" + col +
                         "'");
      decl.columns.push_back(col);
    }
    schema.add(std::move(decl));
  }
  if (schema.size() == 0) throw InputError("no relations declared");
  return schema;
}

inline Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read schema file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

/// Interns constant strings so tuples can be stored as small integers.
class Dictionary {
 public:
  ConstantId intern(const std::string& value) {
    auto [it, inserted] = ids_.try_emplace(value, static_cast<ConstantId>(values_.size()));
    if (inserted) values_.push_back(value);
    return it->second;
  }

  std::optional<ConstantId> find(const std::string& value) const {
    auto it = ids_.find(value);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& value(ConstantId id) const { return values_.at(id); }
  std::size_t size() const { return values_.size(); }

 private:
  std::unordered_map<std::string, ConstantId> ids_;
  std::vector<std::string> values_;
};

using Tuple = std::vector<ConstantId>;

/// A relation's tuples (sorted, distinct) plus a per-column value index.
class Relation {
 public:
  Relation() = default;
  Relation(std::size_t arity, std::vector<Tuple> tuples) : arity_(arity), tuples_(std::move(tuples)) {
    std::sort(tuples_.begin(), tuples_.end());
    tuples_.erase(std::unique(tuples_.begin(), tuples_.end()), tuples_.end());
    by_column_.resize(arity_);
    for (std::size_t i = 0; i < tuples_.size(); ++i)
      for (std::size_t c = 0; c < arity_; ++c) by_column_[c][tuples_[i][c]].push_back(i);
  }

  std::size_t arity() const { return arity_; }
  std::size_t size() const { return tuples_.size(); }
  const std::vector<Tuple>& tuples() const { return tuples_; }

  /// Indices of tuples whose `column` equals `value`.
  const std::vector<std::size_t>& lookup(std::size_t column, ConstantId value) const {
    static const std::vector<std::size_t> none;
    auto it = by_column_[column].find(value);
    return it == by_column_[column].end() ? none : it->second;
  }

 private:
  std::size_t arity_ = 0;
  std::vector<Tuple> tuples_;
  std::vector<std::unordered_map<ConstantId, std::vector<std::size_t>>> by_column_;
};

/// Immutable after construction; safe for concurrent readers.
class Instance {
 public:
  class Builder {
   public:
    explicit Builder(Schema schema) : schema_(std::move(schema)) {
      for (const auto& r : schema_.relations()) rows_[r.name];
    }

    Builder& add(const std::string& relation, const std::vector<std::string>& row) {
      const auto& decl = schema_.at(relation);
      if (row.size() != decl.arity())
        throw InputError("relation '" + relation + "' expects " + std::to_string(decl.arity()) +
                         " fields, got " + std::to_string(row.size()));
      Tuple t;
      t.reserve(row.size());
      for (const auto& v : row) t.push_back(dict_.intern(v));
      rows_[relation].push_back(std::move(t));
      return *this;
    }

    Instance build() && {
      Instance inst;
      inst.schema_ = std::move(schema_);
      inst.dict_ = std::move(dict_);
      for (const auto& r : inst.schema_.relations())
        inst.relations_.emplace(r.name, Relation(r.arity(), std::move(rows_[r.name])));
      return inst;
    }

   private:
    Schema schema_;
    Dictionary dict_;
    std::map<std::string, std::vector<Tuple>> rows_;
  };

  const Schema& schema() const { return schema_; }
  const Dictionary& dictionary() const { return dict_; }

  const Relation& relation(std::string_view name) const {
    auto it = relations_.find(std::string(name));
    if (it == relations_.end()) throw InputError("unknown relation '" + std::string(name) + "'");
    return it->second;
  }

  /// Rows of a relation as strings, in sorted tuple order.
  std::vector<std::vector<std::string>> rows(std::string_view name) const {
    std::vector<std::vector<std::string>> out;
    for (const auto& t : relation(name).tuples()) {
      auto& row = out.emplace_back();
      for (auto id : t) row.push_back(dict_.value(id));
    }
    return out;
  }

  /// Every constant occurring anywhere in the instance.
  std::set<std::string> constants() const {
    std::set<std::string> out;
    for (std::size_t i = 0; i < dict_.size(); ++i) out.insert(dict_.value(static_cast<ConstantId>(i)));
    return out;
  }

 private:
  Instance() = default;
  Schema schema_;
  Dictionary dict_;
  std::map<std::string, Relation> relations_;
};

inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    rows.push_back(detail::split_csv_line(line, line_no));
  }
  return rows;
}

/// Reads `<relation>.csv` for every relation of the schema. Duplicate rows collapse.
inline Instance load_instance(const Schema& schema, const std::filesystem::path& dir) {
  Instance::Builder builder(schema);
  for (const auto& decl : schema.relations()) {
    auto file = dir / (decl.name + ".csv");
    std::ifstream in(file);
    if (!in) throw InputError("missing data file for relation '" + decl.name + "': " + file.string());
    std::size_t row_no = 0;
    for (const auto& row : parse_csv(in)) {
      ++row_no;
      if (row.size() != decl.arity())
        throw InputError(file.string() + " row " + std::to_string(row_no) + ": expected " +
                         std::to_string(decl.arity()) + " fields, got " +
                         std::to_string(row.size()));
      builder.add(decl.name, row);
    }
  }
  return std::move(builder).build();
}

inline void write_csv(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << detail::quote_csv_field(row[i]);
    }
    out << '\n';
  }
}

inline void save_instance(const Instance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& decl : inst.schema().relations()) {
    std::ofstream out(dir / (decl.name + ".csv"));
    write_csv(out, inst.rows(decl.name));
  }
}

inline std::set<std::string> active_domain(const Instance& inst, std::string_view relation,
                                           std::size_t column) {
  const auto& rel = inst.relation(relation);
  if (column >= rel.arity())
    throw InputError("column " + std::to_string(column) + " out of range for '" +
                     std::string(relation) + "'");
  std::set<std::string> out;
  for (const auto& t : rel.tuples()) out.insert(inst.dictionary().value(t[column]));
  return out;
}

}  // namespace cqmine
