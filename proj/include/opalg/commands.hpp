#pragma once

#include <optional>
#include <string>

#include "opalg/io.hpp"

namespace opalg {

struct CommandArgs {
  std::string system_path;
  std::string q_generators;  // inline JSON or a path; overrides the file's subalgebra
  std::optional<double> tol_rank_rel, tol_rank_abs, tol_verify, tol_report;
  int kmax = 3;
  int k = 2;
  int wordlen = 4;
  long budget = 0;  // 0: OPALG_BUDGET or the default
  std::vector<std::string> probes;
  bool timing = false;
};

struct LoadedSystem {
  SystemFile file;
  DynamicalSystem system;
};

LoadedSystem load_system(const CommandArgs& args);

struct Report {
  std::string command;
  std::string digest;
  json results = json::object();
  json assertions = json::object();  // name -> bool
  std::optional<double> runtime;

  bool passed() const;
  json to_json() const;
};

enum class Format { Text, Json };

const std::vector<std::string>& command_names();
Report run_command(const std::string& cmd, const std::optional<LoadedSystem>& sys, const CommandArgs& args);
// loads the system named in args unless the command is selftest
Report run_command(const std::string& cmd, const CommandArgs& args);
std::string emit_report(const Report& r, Format f);

}  // namespace opalg
