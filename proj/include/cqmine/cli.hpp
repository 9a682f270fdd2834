#pragma once
// Command implementations behind tools/cqmine. Each returns a process exit status and writes only
// to the streams it is given, so tests can drive them directly.

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "cqmine/eval.hpp"
#include "cqmine/phase1.hpp"
#include "cqmine/phase2.hpp"
#include "cqmine/report.hpp"

namespace cqmine::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kInputError = 3;

enum class Format { text, structured };

struct Manifest {
  std::filesystem::path schema;
  std::filesystem::path data;
  MinerConfig miner;
  RuleConfig rules;
  std::optional<std::string> key_atom;  // unparsed, e.g. "visits(_,_)"
  std::filesystem::path out_dir = ".";
  Format format = Format::text;
};

namespace detail {

// Maps library exceptions to exit codes; everything else propagates.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

inline Schema load_schema_checked(const Manifest& m) {
  if (m.schema.empty()) throw ConfigError("--schema is required");
  return load_schema(m.schema);
}

inline Instance load_instance_checked(const Manifest& m, const Schema& schema) {
  if (m.data.empty()) throw ConfigError("--data is required");
  if (!std::filesystem::is_directory(m.data))
    throw InputError("data directory not found: " + m.data.string());
  return load_instance(schema, m.data);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

}  // namespace detail

/// Phase 1 then phase 2; writes frequent.txt, rules.txt and dump.json into the output directory.
inline int cmd_mine(const Manifest& m, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Schema schema = detail::load_schema_checked(m);
    MinerConfig mcfg = m.miner;
    if (m.key_atom) mcfg.key_atom = parse_key_atom(*m.key_atom, schema);
    mcfg.validate(schema);
    m.rules.validate();
    if (mcfg.max_atoms > 3)
      err << "warning: --max-atoms " << mcfg.max_atoms
          << " may take very long; the search space grows combinatorially\n";
    const Instance inst = detail::load_instance_checked(m, schema);

    const MinerState state = run_phase1(inst, mcfg);
    RuleConfig rcfg = m.rules;
    rcfg.jobs = mcfg.jobs;
    const auto rules = run_phase2(state, inst, mcfg, rcfg);
    const auto entries = report_entries(state);

    std::ostringstream frequent_text, rules_text;
    write_frequent_report(frequent_text, entries);
    write_rule_report(rules_text, rules);
    const auto dump = dump_json(mcfg, rcfg, entries, rules);

    std::filesystem::create_directories(m.out_dir);
    detail::write_file(m.out_dir / "frequent.txt", frequent_text.str());
    detail::write_file(m.out_dir / "rules.txt", rules_text.str());
    detail::write_file(m.out_dir / "dump.json", dump.dump(2) + "\n");

    if (m.format == Format::structured) {
      out << nlohmann::json{{"levels", state.levels.size()},
                            {"frequent", entries.size()},
                            {"rules", rules.size()},
                            {"out_dir", m.out_dir.string()}}
                 .dump()
          << '\n';
    } else {
      out << "levels: " << state.levels.size() << '\n'
          << "frequent queries: " << entries.size() << '\n'
          << "rules: " << rules.size() << '\n'
          << "reports written to " << m.out_dir.string() << '\n';
    }
    return kOk;
  });
}

/// Prints the answer set and support, or the grouped supports of a symbolic query.
inline int cmd_eval(const std::string& text, const Manifest& m, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Schema schema = detail::load_schema_checked(m);
    const Query q = parse_query(text, schema);
    const Instance inst = detail::load_instance_checked(m, schema);
    const bool structured = m.format == Format::structured;

    if (q.has_symbols()) {
      auto grouped = support_grouped(q, inst, m.miner.minsup);
      auto labels = render_query_labeled(q).symbol_labels;
      std::vector<std::string> names;
      for (int s : grouped.symbols) names.push_back("$c" + std::to_string(labels.at(s)));
      std::vector<std::pair<std::vector<std::string>, std::size_t>> rows(grouped.counts.begin(),
                                                                         grouped.counts.end());
      std::stable_sort(rows.begin(), rows.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      if (structured) {
        nlohmann::json groups = nlohmann::json::array();
        for (const auto& [values, count] : rows) {
          nlohmann::json assignment = nlohmann::json::object();
          for (std::size_t i = 0; i < names.size(); ++i) assignment[names[i]] = values[i];
          groups.push_back({{"constants", assignment}, {"support", count}});
        }
        out << nlohmann::json{{"query", render_query(q)}, {"groups", groups}}.dump() << '\n';
      } else {
        for (const auto& n : names) out << n << '\t';
        out << "support\n";
        for (const auto& [values, count] : rows) {
          for (const auto& v : values) out << v << '\t';
          out << count << '\n';
        }
      }
      return kOk;
    }

    const AnswerSet answers = evaluate(q, inst);
    if (structured) {
      out << nlohmann::json{{"query", render_query(q)}, {"answers", answers}, {"support", answers.size()}}
                 .dump()
          << '\n';
    } else {
      for (const auto& row : answers) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
        out << '\n';
      }
      out << "support: " << answers.size() << '\n';
    }
    return kOk;
  });
}

/// The containment relationship between two queries, as a single phrase.
inline std::string containment_relation(const Query& q1, const Query& q2) {
  const bool c12 = is_contained(q1, q2), c21 = is_contained(q2, q1);
  if (c12 && c21) return "equivalent";
  if (c12) return "q1 ⊂ q2";
  if (c21) return "q2 ⊂ q1";
  if (is_diagonally_contained(q1, q2)) return "q1 ⊂Δ q2 (diagonal only)";
  if (is_diagonally_contained(q2, q1)) return "q2 ⊂Δ q1 (diagonal only)";
  return "incomparable";
}

/// Queries are checked against the schema when one is given.
inline int cmd_contain(const std::string& text1, const std::string& text2, const Manifest& m,
                       std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    std::optional<Schema> schema;
    if (!m.schema.empty()) schema = load_schema(m.schema);
    auto parse = [&](const std::string& t) { return schema ? parse_query(t, *schema) : parse_query_unchecked(t); };
    const Query q1 = parse(text1), q2 = parse(text2);
    const std::string relation = containment_relation(q1, q2);
    if (m.format == Format::structured)
      out << nlohmann::json{{"q1", render_query(q1)}, {"q2", render_query(q2)}, {"relation", relation}}.dump()
          << '\n';
    else
      out << relation << '\n';
    return kOk;
  });
}

inline int cmd_emit_sql(const std::string& text, const Manifest& m, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Schema schema = detail::load_schema_checked(m);
    const Query q = parse_query(text, schema);
    const std::string sql = emit_sql(q, schema);
    if (m.format == Format::structured)
      out << nlohmann::json{{"query", render_query(q)}, {"sql", sql}}.dump() << '\n';
    else
      out << sql << '\n';
    return kOk;
  });
}

}  // namespace cqmine::cli
