#include <iostream>

#include <CLI11.hpp>

#include "opalg/commands.hpp"

int main(int argc, char** argv) {
  using namespace opalg;
  CLI::App app{"finite-dimensional operator-algebraic dynamics"};
  std::string command, format = "text";
  CommandArgs args;
  double rank_rel = 0, rank_abs = 0, verify = 0, report = 0;

  std::string list;
  for (const auto& n : command_names()) list += (list.empty() ? "" : " | ") + n;
  app.add_option("command", command, list)->required();
  app.add_option("--system", args.system_path, "system description (JSON)");
  app.add_option("--q-generators", args.q_generators, "generators of Q: inline JSON list or a file");
  auto* o1 = app.add_option("--tol-rank-rel", rank_rel);
  auto* o2 = app.add_option("--tol-rank-abs", rank_abs);
  auto* o3 = app.add_option("--tol-verify", verify);
  auto* o4 = app.add_option("--tol-report", report);
  app.add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
  app.add_option("--kmax", args.kmax, "top level for hkz-tower");
  app.add_option("--k", args.k, "seminorm index");
  // one value per flag, kept whole: element literals contain brackets and commas
  app.add_option("--probe", args.probes, "\"(v1,...,vn)\" or an element literal; repeatable")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter('\0');
  app.add_option("--wordlen", args.wordlen, "word length for infinite groups");
  app.add_option("--budget", args.budget, "cap on frame size squared (default OPALG_BUDGET or 262144)");
  app.add_flag("--timing", args.timing, "include wall time in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*o1) args.tol_rank_rel = rank_rel;
  if (*o2) args.tol_rank_abs = rank_abs;
  if (*o3) args.tol_verify = verify;
  if (*o4) args.tol_report = report;

  try {
    Report r = run_command(command, args);
    std::cout << emit_report(r, format == "json" ? Format::Json : Format::Text);
    return r.passed() ? 0 : 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
