// cqmine: frequent conjunctive queries and association rules over a CSV-backed instance.
//
//   cqmine mine --schema S --data D [--minsup N] [--minconf C] [--max-atoms K] [--out-dir O]
//   cqmine eval --schema S --data D "Q(x) :- likes(x,'Duvel')."
//   cqmine contain "Q(x) :- r(x,y)." "Q(x) :- r(x,x)."
//   cqmine emit-sql --schema S "Q(x) :- likes(x,$c)."

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "cqmine/cli.hpp"

int main(int argc, char** argv) {
  using namespace cqmine;
  cli::Manifest m;
  std::string format = "text";
  bool no_constants = false;
  std::string key_atom;
  std::string query, query2;

  CLI::App app{"Mine frequent conjunctive queries and association rules"};
  app.require_subcommand(1);

  auto add_format = [&](CLI::App* c) {
    c->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));
  };
  auto add_inputs = [&](CLI::App* c, bool need_data) {
    c->add_option("--schema", m.schema, "Schema file")->required()->check(CLI::ExistingFile);
    if (need_data) c->add_option("--data", m.data, "Directory with one <relation>.csv per relation")->required();
  };

  auto* mine = app.add_subcommand("mine", "Run both mining phases and write reports");
  add_inputs(mine, true);
  mine->add_option("--minsup", m.miner.minsup, "Minimal support (absolute count)")->capture_default_str();
  mine->add_option("--minconf", m.rules.minconf, "Minimal confidence in (0,1]")->capture_default_str();
  mine->add_option("--max-atoms", m.miner.max_atoms, "Maximal number of body atoms")->capture_default_str();
  mine->add_flag("--no-constants", no_constants, "Disable the selection operation");
  mine->add_option("--key-atom", key_atom, "Require this atom, e.g. \"visits(_,_)\"");
  mine->add_option("--jobs", m.miner.jobs, "Worker threads")->capture_default_str();
  mine->add_option("--out-dir", m.out_dir, "Report directory")->capture_default_str();
  add_format(mine);

  auto* eval = app.add_subcommand("eval", "Evaluate a query on the instance");
  add_inputs(eval, true);
  eval->add_option("query", query, "Query text")->required();
  eval->add_option("--minsup", m.miner.minsup, "Threshold for grouped supports")->capture_default_str();
  add_format(eval);

  auto* contain = app.add_subcommand("contain", "Compare two queries by containment");
  contain->add_option("--schema", m.schema, "Optional schema to check the queries against")
      ->check(CLI::ExistingFile);
  contain->add_option("q1", query, "First query")->required();
  contain->add_option("q2", query2, "Second query")->required();
  add_format(contain);

  auto* sql = app.add_subcommand("emit-sql", "Print the SQL evaluating a query");
  add_inputs(sql, false);
  sql->add_option("query", query, "Query text")->required();
  add_format(sql);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsage;
  }

  m.format = format == "structured" ? cli::Format::structured : cli::Format::text;
  m.miner.enable_constants = !no_constants;
  if (!key_atom.empty()) m.key_atom = key_atom;

  if (*mine) return cli::cmd_mine(m, std::cout, std::cerr);
  if (*eval) return cli::cmd_eval(query, m, std::cout, std::cerr);
  if (*contain) return cli::cmd_contain(query, query2, m, std::cout, std::cerr);
  return cli::cmd_emit_sql(query, m, std::cout, std::cerr);
}
