#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "opalg/commands.hpp"
#include "opalg/fixtures.hpp"

using namespace opalg;
namespace fs = std::filesystem;

namespace {

std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

std::string fixture(const std::string& name) { return std::string(OPALG_SOURCE_DIR) + "/fixtures/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CliRun {
  int exit_code;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  static int counter = 0;
  fs::path out = fs::temp_directory_path() / ("opalg_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::string cmd = std::string(OPALG_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  CliRun r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out.string())};
  fs::remove(out);
  return r;
}

const char* kSysB = R"({
  "schema_version": 1,
  "algebra": {"blocks": [2], "weights": [1.0]},
  "group": {"kind": "finite_abelian", "orders": [2, 2]},
  "generators": [
    {"label": "clock", "unitary": [[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]]},
    {"label": "shift", "unitary": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]]}
  ]
})";

}  // namespace

TEST(IO, ParseRoundTrip) {
  for (const char* f : {"sys_a.json", "sys_b.json", "sys_c.json", "sys_d.json"}) {
    SystemFile a = read_system_file(fixture(f));
    std::string once = canonical_json(system_to_json(a));
    SystemFile b = parse_system_text(once);
    EXPECT_EQ(canonical_json(system_to_json(b)), once) << f;
    DynamicalSystem S = build_system(b);
    DynamicalSystem T = parse_system_file(fixture(f));
    ASSERT_EQ(S.koopman().size(), T.koopman().size());
    for (std::size_t g = 0; g < S.koopman().size(); ++g)
      EXPECT_LE((S.koopman()[g] - T.koopman()[g]).cwiseAbs().maxCoeff(), 1e-15) << f;
    EXPECT_EQ(S.Q().dim(), T.Q().dim()) << f;
  }
}

TEST(IO, FilesMatchBuiltInFixtures) {
  for (const char* n : {"A", "B", "C", "D"}) {
    std::string lower(1, char(std::tolower(n[0])));
    DynamicalSystem F = parse_system_file(fixture("sys_" + lower + ".json"));
    DynamicalSystem S = fixtures::by_name(n);
    ASSERT_EQ(F.dim(), S.dim()) << n;
    EXPECT_EQ(F.Q().dim(), S.Q().dim()) << n;
    for (std::size_t g = 0; g < S.koopman().size(); ++g)
      EXPECT_LE((F.koopman()[g] - S.koopman()[g]).cwiseAbs().maxCoeff(), 1e-12) << n;
  }
}

TEST(IO, RejectsBadInput) {
  auto build = [](const std::string& text) { build_system(parse_system_text(text)); };
  std::string weights = kSysB;
  weights.replace(weights.find("[1.0]"), 5, "[0.9]");
  EXPECT_EQ(kind_of([&] { build(weights); }), ErrorKind::WeightSum);
  std::string nonunitary = kSysB;
  nonunitary.replace(nonunitary.find("[-1, 0]"), 7, "[-2, 0]");
  EXPECT_EQ(kind_of([&] { build(nonunitary); }), ErrorKind::NotAutomorphism);
  EXPECT_EQ(kind_of([&] { build("{\"schema_version\": 1, \"algebra\": "); }), ErrorKind::Parse);
  std::string no_group = kSysB;
  no_group.replace(no_group.find("\"group\""), 7, "\"grope\"");
  EXPECT_EQ(kind_of([&] { build(no_group); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { read_system_file("/nonexistent/system.json"); }), ErrorKind::Parse);
  DynamicalSystem A = fixtures::sys_a();
  EXPECT_EQ(kind_of([&] { parse_probe(A.algebra(), "(1,2,3)"); }), ErrorKind::Parse);
  Element p = parse_probe(A.algebra(), "(1,-1)");
  EXPECT_EQ(p.block(1)(0, 0), cd(-1.0));
}

TEST(IO, CanonicalSerialization) {
  json j = {{"b", 1.0 / 3.0}, {"a", {{"z", 1}, {"y", true}}}, {"c", std::vector<double>{0.5, -0.0}}};
  std::string s = canonical_json(j);
  EXPECT_EQ(s, canonical_json(json::parse(j.dump())));
  EXPECT_LT(s.find("\"a\""), s.find("\"b\""));
  EXPECT_NE(s.find("0.333333333333"), std::string::npos);
  EXPECT_EQ(s.find('\r'), std::string::npos);
  EXPECT_EQ(s.back(), '\n');
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  std::string t = canonical_text(j);
  EXPECT_NE(t.find("a.y = true"), std::string::npos);
}

TEST(IO, ReportsCarryDigest) {
  CommandArgs args;
  args.system_path = fixture("sys_a.json");
  Report r = run_command("ap-decompose", args);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.digest.size(), 16u);
  EXPECT_NE(emit_report(r, Format::Json).find(r.digest), std::string::npos);
  EXPECT_NE(emit_report(r, Format::Text).find(r.digest), std::string::npos);
}

TEST(IO, CLIDeterministic) {
  const std::map<std::string, std::string> probe_for = {
      {"sys_a.json", "'(1,-1)'"}, {"sys_b.json", "'[[[[0,0],[1,0]],[[1,0],[0,0]]]]'"}, {"sys_c.json", "'(1,-1,1,-1)'"}};
  std::vector<std::string> runs;
  for (const auto& cmd : command_names()) {
    if (cmd == "selftest") {
      runs.push_back("selftest");
      continue;
    }
    for (const char* f : {"sys_a.json", "sys_b.json", "sys_c.json"}) {
      std::string base = cmd + " --system " + fixture(f);
      if (cmd == "expect" || cmd == "seminorm") base += " --probe " + probe_for.at(f);
      runs.push_back(base);
    }
  }
  for (const auto& r : runs) {
    for (const char* fmt : {"text", "json"}) {
      CliRun a = run_cli(r + " --format " + fmt), b = run_cli(r + " --format " + fmt);
      EXPECT_EQ(a.exit_code, 0) << r;
      EXPECT_FALSE(a.out.empty()) << r;
      EXPECT_EQ(a.out, b.out) << r;
    }
  }
}

TEST(IO, CLIExitCodes) {
  EXPECT_EQ(run_cli("hkz-tower --system " + fixture("sys_d.json")).exit_code, 2);
  EXPECT_EQ(run_cli("hkz-tower --budget 1 --kmax 3 --system " + fixture("sys_c.json")).exit_code, 4);
  EXPECT_EQ(run_cli("seminorm --system " + fixture("sys_a.json")).exit_code, 2);
  EXPECT_EQ(run_cli("no-such-command").exit_code, 2);
  EXPECT_EQ(run_cli("describe --system /nonexistent.json").exit_code, 2);
}

TEST(IO, GoldenReports) {
  const std::string g = std::string(OPALG_SOURCE_DIR) + "/tests/golden/";
  CliRun a = run_cli("hkz-tower --kmax 3 --format json --system " + fixture("sys_a.json"));
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.out, slurp(g + "sys_a_hkz_tower_k3.json"));
  CliRun b = run_cli("ap-decompose --format json --system " + fixture("sys_b.json"));
  EXPECT_EQ(b.exit_code, 0);
  EXPECT_EQ(b.out, slurp(g + "sys_b_ap_decompose.json"));
}
