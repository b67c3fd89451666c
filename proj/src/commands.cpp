#include "opalg/commands.hpp"

#include <chrono>
#include <cmath>

#include "opalg/fixtures.hpp"
#include "opalg/hkz.hpp"
#include "opalg/joinings.hpp"

namespace opalg {

namespace {

[[noreturn]] void bad_arg(const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); }

double min_eig(const Element& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : x.blocks()) {
    Mat h = 0.5 * (b + b.adjoint());
    m = std::min(m, hermitian_eig(h).values.minCoeff());
  }
  return m;
}

std::vector<Element> probes_of(const Algebra& A, const CommandArgs& args, bool required) {
  std::vector<Element> out;
  for (const auto& p : args.probes) out.push_back(parse_probe(A, p));
  if (required && out.empty()) bad_arg("this command needs at least one --probe");
  return out;
}

long budget_of(const CommandArgs& args) { return args.budget > 0 ? args.budget : default_budget(); }

struct ExpectationCheck {
  double idempotent = 0, bimodular = 0, trace = 0, positivity = 0;
};

ExpectationCheck check_expectation(const Subalgebra& Q, const Element& x, const std::vector<Element>& qb) {
  const Algebra& A = Q.parent();
  ExpectationCheck c;
  Element e = cond_expect(Q, x);
  c.idempotent = (cond_expect(Q, e) - e).max_abs();
  c.trace = std::abs(trace(A, e) - trace(A, x));
  for (const auto& a : qb)
    for (const auto& b : qb)
      c.bimodular = std::max(c.bimodular, (cond_expect(Q, a * x * b) - a * e * b).max_abs());
  c.positivity = std::max(0.0, -min_eig(cond_expect(Q, x.adjoint() * x)));
  return c;
}

json levels_json(const TowerReport& rep, double tol) {
  json out = json::array();
  for (const auto& l : rep.levels)
    out.push_back({{"k", l.k},
                   {"frame_dim", l.frame_dim},
                   {"diagonal_invariant_dim", l.I_dim},
                   {"side_invariant_dim", l.J_dim},
                   {"zero_coordinate_residual", l.zerocoord_residual},
                   {"side_unitarity_residual", l.side_unitarity_residual},
                   {"side_state_residual", l.side_state_residual},
                   {"traciality_residual", l.traciality_residual},
                   {"tracial", l.traciality_residual <= tol}});
  return out;
}

// ---- commands ----

void cmd_describe(const LoadedSystem& L, Report& r) {
  const DynamicalSystem& S = L.system;
  const Algebra& A = S.algebra();
  json g = system_to_json(L.file)["group"];
  g["generators"] = S.group().labels;
  r.results = {{"algebra", {{"blocks", A.blocks()}, {"weights", A.weights()}, {"dim_l2", A.dim()},
                            {"commutative", A.is_commutative()}, {"center_dim", center(A).size()}}},
               {"group", g},
               {"ergodic", S.ergodic()},
               {"fixed_algebra_dim", fixed_algebra(S).dim()},
               {"Q_dim", S.Q().dim()},
               {"tolerances", system_to_json(L.file)["tolerances"]}};
  r.assertions["valid_system"] = true;
}

void cmd_expect(const LoadedSystem& L, const CommandArgs& args, Report& r) {
  const DynamicalSystem& S = L.system;
  const Algebra& A = S.algebra();
  const auto& tol = A.tol();
  auto xs = probes_of(A, args, true);
  auto qb = S.Q().basis();
  json items = json::array();
  ExpectationCheck worst;
  for (const auto& x : xs) {
    ExpectationCheck c = check_expectation(S.Q(), x, qb);
    items.push_back({{"input", element_to_json(x)}, {"expectation", element_to_json(cond_expect(S.Q(), x))}});
    worst.idempotent = std::max(worst.idempotent, c.idempotent);
    worst.bimodular = std::max(worst.bimodular, c.bimodular);
    worst.trace = std::max(worst.trace, c.trace);
    worst.positivity = std::max(worst.positivity, c.positivity);
  }
  r.results = {{"probes", items}, {"Q_dim", S.Q().dim()}};
  r.assertions["idempotent"] = worst.idempotent <= tol.verify * 10;
  r.assertions["Q_bimodular"] = worst.bimodular <= tol.verify * 10;
  r.assertions["trace_preserving"] = worst.trace <= tol.verify * 10;
  r.assertions["positive"] = worst.positivity <= tol.verify * 10;
}

void cmd_ap(const LoadedSystem& L, Report& r) {
  const DynamicalSystem& S = L.system;
  const auto& tol = S.algebra().tol();
  APDecomposition ap = ap_decompose(S);
  CompactnessReport c = is_compact_extension(S, ap);
  json ranks = json::array();
  for (const auto& m : c.modules) ranks.push_back(m.rank());
  r.results = {{"fusion_dim", ap.F.dim()},
               {"invariant_fusion_vectors", ap.witnesses.cols()},
               {"ap_rank", ap.ap_basis.cols()},
               {"wm_rank", ap.wm_basis.cols()},
               {"dim_l2", S.dim()},
               {"module_ranks", ranks},
               {"module_dimQ", c.module_dimQ},
               {"module_rank_sum", c.module_rank_sum},
               {"total_dimQ", c.total_dimQ},
               {"compact", c.compact}};
  r.assertions["ap_full_rank"] = ap.ap_basis.cols() == S.dim();
  r.assertions["module_ranks_sum_to_dim"] = c.module_rank_sum == S.dim();
  r.assertions["dimQ_consistent"] = c.dimQ_residual <= tol.report;
  r.assertions["modules_invariant"] = c.max_invariance_residual <= tol.report;
}

void cmd_wm(const LoadedSystem& L, const CommandArgs& args, Report& r) {
  const DynamicalSystem& S = L.system;
  const auto& tol = S.algebra().tol();
  WeakMixingResult wm = test_weak_mixing(S);
  r.results = {{"weakly_mixing", wm.weakly_mixing}, {"max_residual", wm.max_residual}};
  if (!wm.weakly_mixing) {
    FusionSpace F = build_fusion(S.Q());
    double inv = 0;
    for (const auto& U : diagonal_action(S, F)) inv = std::max(inv, (U * wm.witness - wm.witness).norm());
    Mat E = orth(F.q_image(), tol);
    r.results["witness"] = vector_to_json(wm.witness);
    r.results["witness_invariance_residual"] = inv;
    r.results["witness_Q_overlap"] = (E.adjoint() * wm.witness).norm();
    r.assertions["witness_invariant"] = inv <= tol.report;
  }
  auto F = probes_of(S.algebra(), args, false);
  if (!F.empty()) {
    PopaProbeResult p = popa_probe(S, F, args.wordlen);
    r.results["popa"] = {{"value", p.value}, {"word", S.group().word_label(p.word)},
                         {"words_enumerated", p.words.size()}};
  }
}

void cmd_fusion_dim(const LoadedSystem& L, Report& r) {
  const DynamicalSystem& S = L.system;
  FusionSpace F = build_fusion(S.Q());
  Mat G = 0.5 * (F.gram() + F.gram().adjoint());
  double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
  double herm = (F.gram() - F.gram().adjoint()).cwiseAbs().maxCoeff();
  double mn = hermitian_eig(G).values.minCoeff();
  r.results = {{"fusion_dim", F.dim()}, {"coefficient_dim", F.coeff_dim()}, {"Q_dim", S.Q().dim()},
               {"dim_l2", S.dim()}, {"gram_hermitian_residual", herm}};
  r.assertions["gram_positive"] = mn >= -S.algebra().tol().verify * scale;
  r.assertions["gram_hermitian"] = herm <= S.algebra().tol().verify * scale;
}

void cmd_joining(const LoadedSystem& L, const CommandArgs& args, Report& r) {
  const DynamicalSystem& S = L.system;
  const auto& tol = S.algebra().tol();
  JoiningProblem J = self_joining_problem(S);
  JoiningState base = rel_indep_joining(J);
  GNSComparison g = compare_gns_with_fusion(J, base);
  CPMap cp = cp_from_joining(J, base);
  // the relatively independent joining should give back E_Q
  double eq = 0;
  const Algebra& A = S.algebra();
  for (int i = 0; i < A.dim(); ++i) {
    Element b = A.basis(i);
    eq = std::max(eq, (cp.apply(A, A, b) - cond_expect(S.Q(), b)).max_abs());
  }
  r.results = {{"params", J.num_params()},
               {"rel_indep", {{"constraint_residual", base.constraint_residual},
                              {"min_eigenvalue", base.min_eigenvalue},
                              {"gns_rank", g.gram_rank},
                              {"fusion_dim", g.fusion_dim},
                              {"gns_inner_residual", g.max_inner_residual},
                              {"cp_equals_EQ_residual", eq}}}};
  r.assertions["rel_indep_feasible"] = base.constraint_residual <= 1e-9 && base.min_eigenvalue >= -tol.verify;
  r.assertions["gns_matches_fusion"] = g.gram_rank == g.fusion_dim && g.max_inner_residual <= tol.report;
  r.assertions["cp_equals_EQ"] = eq <= tol.report;
  auto xs = probes_of(A, args, false);
  if (!xs.empty()) {
    TestObservable T;
    for (const auto& x : xs) T.push_back({x, x});
    ProbeResult p = disjointness_probe(J, T);
    r.results["probe"] = {{"max_value", p.max_value},
                          {"rel_indep_value", p.rel_indep_value},
                          {"non_disjoint", p.non_disjoint},
                          {"free_dims", p.free_dims},
                          {"optimizer_min_eigenvalue", p.optimizer.min_eigenvalue},
                          {"optimizer_constraint_residual", p.optimizer.constraint_residual}};
    r.assertions["probe_optimizer_feasible"] =
        p.optimizer.constraint_residual <= tol.report && p.optimizer.min_eigenvalue >= -tol.report;
  }
}

void cmd_rel_product(const LoadedSystem& L, Report& r) {
  const DynamicalSystem& S = L.system;
  const auto& tol = S.algebra().tol();
  Identification id = identity_identification(S.Q());
  RelativeProduct P = rel_product_central(S.Q(), S.Q(), id);
  TheoremBReport tb = theoremB_check(S, S, id);
  r.results = {{"dim_l2_P", P.F.dim()},
               {"blocks", P.algebra().blocks()},
               {"weights", P.algebra().weights()},
               {"trace_residual", P.trace_residual},
               {"hom_residual", P.hom_residual},
               {"agree_residual", P.agree_residual},
               {"ap_tensor", {{"ap1", tb.ap1}, {"ap2", tb.ap2}, {"apP", tb.apP}, {"tensor_rank", tb.tensor_rank},
                              {"subspace_residual", tb.subspace_residual}, {"witness_pairs", tb.witness_pairs},
                              {"witness_rank", tb.witness_rank}, {"witness_residual", tb.witness_residual}}}};
  r.assertions["tracial"] = P.trace_residual <= tol.report;
  r.assertions["embeddings_homomorphic"] = P.hom_residual <= tol.report;
  r.assertions["embeddings_agree_on_Q"] = P.agree_residual <= tol.report;
  r.assertions["ap_of_product_is_tensor_of_ap"] = tb.passed;
}

void cmd_hkz(const LoadedSystem& L, const CommandArgs& args, Report& r) {
  const DynamicalSystem& S = L.system;
  const auto& tol = S.algebra().tol();
  auto xs = probes_of(S.algebra(), args, false);
  TowerReport rep = tower_report(S, args.kmax, xs, budget_of(args));
  json z = json::array();
  bool normchar = true, algebras = true, compact = true;
  for (const auto& zi : rep.z) {
    z.push_back({{"index", zi.k - 1},
                 {"dim", zi.dim},
                 {"is_algebra", zi.is_algebra},
                 {"invariance_residual", zi.invariance_residual},
                 {"kernel_power_max", zi.normchar_kernel_max},
                 {"complement_seminorm_min", zi.normchar_complement_min},
                 {"compact_over_previous", zi.compact_over_previous}});
    normchar = normchar && zi.normchar_kernel_max <= tol.verify && zi.normchar_complement_min > tol.report;
    algebras = algebras && zi.is_algebra && zi.invariance_residual <= tol.report;
    compact = compact && zi.compact_over_previous;
  }
  json sn = json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) sn.push_back({{"probe", args.probes[i]}, {"values", rep.seminorms[i]}});
  r.results = {{"kmax", rep.kmax}, {"levels", levels_json(rep, tol.verify * 100)}, {"z", z},
               {"increasing", rep.increasing}, {"seminorms", sn}};
  if (rep.ap_rank_over_C >= 0) r.results["ap_rank_over_C"] = rep.ap_rank_over_C;
  double side = 0;
  for (const auto& l : rep.levels) side = std::max({side, l.side_unitarity_residual, l.side_state_residual});
  r.assertions["side_transformations_unitary"] = side <= tol.report;
  r.assertions["Z0_scalar"] = rep.z[0].dim == 1;
  if (rep.ap_rank_over_C >= 0) r.assertions["Z1_matches_ap"] = rep.z[1].dim == rep.ap_rank_over_C;
  r.assertions["Z_increasing"] = rep.increasing;
  r.assertions["Z_invariant_algebras"] = algebras;
  r.assertions["kernel_characterized_by_seminorm"] = normchar;
  r.assertions["Z_compact_extensions"] = compact;
}

void cmd_seminorm(const LoadedSystem& L, const CommandArgs& args, Report& r) {
  const DynamicalSystem& S = L.system;
  auto xs = probes_of(S.algebra(), args, true);
  if (args.k < 1) bad_arg("--k must be >= 1");
  CubicTower T(S, budget_of(args));
  json items = json::array();
  for (std::size_t i = 0; i < xs.size(); ++i)
    items.push_back({{"probe", args.probes[i]}, {"value", T.seminorm(xs[i], args.k)}});
  r.results = {{"k", args.k}, {"seminorms", items}};
}

// ---- selftest ----

void selftest(Report& r) {
  std::mt19937_64 rng(20240917);
  json fx = json::object();
  auto put = [&](const std::string& name, bool ok) { r.assertions[name] = ok; };
  for (std::string name : {"A", "B", "C", "D"}) {
    DynamicalSystem S = fixtures::by_name(name);
    const Algebra& A = S.algebra();
    const auto& tol = A.tol();
    auto qb = S.Q().basis();
    ExpectationCheck worst;
    for (int t = 0; t < 20; ++t) {
      ExpectationCheck c = check_expectation(S.Q(), random_element(A, rng), qb);
      worst.idempotent = std::max({worst.idempotent, c.idempotent, c.bimodular, c.trace, c.positivity});
    }
    put(name + ".expectation_axioms", worst.idempotent <= 1e-9);
    APDecomposition ap = ap_decompose(S);
    CompactnessReport c = is_compact_extension(S, ap);
    put(name + ".ap_full_rank", ap.ap_basis.cols() == S.dim() && c.module_rank_sum == S.dim() &&
                                    c.dimQ_residual <= tol.report);
    WeakMixingResult wm = test_weak_mixing(S);
    put(name + ".not_weakly_mixing", !wm.weakly_mixing && wm.witness.size() > 0);
    put(name + ".weakly_mixing_over_N", test_weak_mixing(with_subalgebra(S, full_subalgebra(A))).weakly_mixing);
    JoiningProblem J = self_joining_problem(S);
    JoiningState base = rel_indep_joining(J);
    GNSComparison g = compare_gns_with_fusion(J, base);
    put(name + ".rel_indep_joining", base.constraint_residual <= 1e-9 && g.gram_rank == g.fusion_dim);
    if (S.ergodic()) {
      CubicTower T(S);
      double one = 0;
      for (int k = 1; k <= 2; ++k) one = std::max(one, std::abs(T.seminorm(A.identity(), k) - 1));
      put(name + ".seminorm_of_one", one <= 1e-12);
    }
    fx[name] = {{"dim_l2", S.dim()}, {"ergodic", S.ergodic()}, {"fusion_dim", ap.F.dim()}};
  }
  {
    DynamicalSystem S = fixtures::sys_a();
    CubicTower T(S);
    Element f({Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, -1.0)});
    put("A.seminorms", std::abs(T.seminorm(f, 1)) <= 1e-8 && std::abs(T.seminorm(f, 2) - 1) <= 1e-8);
    put("A.theoremB", theoremB_check(S, S, identity_identification(S.Q())).passed);
  }
  {
    DynamicalSystem S = fixtures::sys_c();
    put("C.theoremB", theoremB_check(S, S, identity_identification(S.Q())).passed);
  }
  r.results = {{"fixtures", fx}};
}

}  // namespace

bool Report::passed() const {
  for (auto it = assertions.begin(); it != assertions.end(); ++it)
    if (!it.value().get<bool>()) return false;
  return true;
}

json Report::to_json() const {
  json j = {{"command", command}, {"inputs_digest", digest}, {"results", results}, {"assertions", assertions},
            {"passed", passed()}};
  if (runtime) j["runtime_seconds"] = *runtime;
  return j;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"describe",     "expect",      "ap-decompose", "wm-test",
                                                 "fusion-dim",   "joining-probe", "rel-product", "hkz-tower",
                                                 "seminorm",     "selftest"};
  return names;
}

LoadedSystem load_system(const CommandArgs& args) {
  if (args.system_path.empty()) bad_arg("--system is required");
  LoadedSystem L;
  L.file = read_system_file(args.system_path);
  if (args.tol_rank_rel) L.file.tol.rank_rel = *args.tol_rank_rel;
  if (args.tol_rank_abs) L.file.tol.rank_abs = *args.tol_rank_abs;
  if (args.tol_verify) L.file.tol.verify = *args.tol_verify;
  if (args.tol_report) L.file.tol.report = *args.tol_report;
  if (!args.q_generators.empty()) {
    Algebra A(L.file.blocks, L.file.weights, L.file.tol);
    L.file.q_generators = parse_q_generators(A, args.q_generators);
  }
  L.system = build_system(L.file);
  return L;
}

Report run_command(const std::string& cmd, const std::optional<LoadedSystem>& sys, const CommandArgs& args) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), cmd) == names.end())
    throw Error(ErrorKind::UnknownCommand, "unknown command '" + cmd + "'");
  auto t0 = std::chrono::steady_clock::now();
  Report r;
  r.command = cmd;
  json inputs = {{"command", cmd}};
  if (cmd != "selftest") {
    if (!sys) bad_arg("command '" + cmd + "' needs a system");
    inputs["system"] = system_to_json(sys->file);
    const auto& t = sys->file.tol;
    inputs["tolerances"] = {{"rank_rel", t.rank_rel}, {"rank_abs", t.rank_abs}, {"verify", t.verify}, {"report", t.report}};
    inputs["probes"] = args.probes;
    if (cmd == "hkz-tower") inputs["kmax"] = args.kmax;
    if (cmd == "seminorm") inputs["k"] = args.k;
    if (cmd == "wm-test") inputs["wordlen"] = args.wordlen;
  }
  r.digest = fnv1a_hex(inputs.dump());

  if (cmd == "selftest") selftest(r);
  else if (cmd == "describe") cmd_describe(*sys, r);
  else if (cmd == "expect") cmd_expect(*sys, args, r);
  else if (cmd == "ap-decompose") cmd_ap(*sys, r);
  else if (cmd == "wm-test") cmd_wm(*sys, args, r);
  else if (cmd == "fusion-dim") cmd_fusion_dim(*sys, r);
  else if (cmd == "joining-probe") cmd_joining(*sys, args, r);
  else if (cmd == "rel-product") cmd_rel_product(*sys, r);
  else if (cmd == "hkz-tower") cmd_hkz(*sys, args, r);
  else if (cmd == "seminorm") cmd_seminorm(*sys, args, r);

  if (args.timing)
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Report run_command(const std::string& cmd, const CommandArgs& args) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), cmd) == names.end())
    throw Error(ErrorKind::UnknownCommand, "unknown command '" + cmd + "'");
  std::optional<LoadedSystem> sys;
  if (cmd != "selftest") sys = load_system(args);
  return run_command(cmd, sys, args);
}

std::string emit_report(const Report& r, Format f) {
  json j = r.to_json();
  return f == Format::Json ? canonical_json(j) : canonical_text(j);
}

}  // namespace opalg
