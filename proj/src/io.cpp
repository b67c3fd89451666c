#include "opalg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace opalg {

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::Parse, field + ": " + msg);
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) parse_fail(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) parse_fail(field, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) parse_fail(field, "expected an integer");
  return j.get<int>();
}

cd complex_entry(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) parse_fail(field, "complex entries are [re, im] pairs");
  return {number(j[0], field), number(j[1], field)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, path + ": cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "\"nan\"" : (v > 0 ? "\"inf\"" : "\"-inf\"");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

bool is_scalar(const json& j) { return !j.is_array() && !j.is_object(); }

std::string scalar(const json& j) {
  if (j.is_number_float()) return format_number(j.get<double>());
  return j.dump();
}

void emit(const json& j, int indent, std::string& out) {
  const std::string pad(indent, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + "  " + json(it.key()).dump() + ": ";
      emit(it.value(), indent + 2, out);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    bool flat = true;
    for (const auto& e : j) flat = flat && (is_scalar(e) || (e.is_array() && e.size() <= 2 && e.size() > 0 && is_scalar(e[0])));
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        if (j[i].is_array()) {
          out += "[";
          for (std::size_t k = 0; k < j[i].size(); ++k) out += (k ? ", " : "") + scalar(j[i][k]);
          out += "]";
        } else {
          out += scalar(j[i]);
        }
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad + "  ";
      emit(j[i], indent + 2, out);
    }
    out += "\n" + pad + "]";
  } else {
    out += scalar(j);
  }
}

void emit_text(const json& j, const std::string& path, std::string& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      emit_text(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else if (j.is_array() && !j.empty() && !is_scalar(j[0]) && !(j[0].is_array() && j[0].size() == 2 && is_scalar(j[0][0]))) {
    for (std::size_t i = 0; i < j.size(); ++i) emit_text(j[i], path + "[" + std::to_string(i) + "]", out);
  } else {
    std::string v;
    emit(j, 0, v);
    out += path + " = " + v + "\n";
  }
}

}  // namespace

Mat matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) parse_fail(field, "expected a non-empty list of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) parse_fail(field, "expected a list of rows");
  const std::size_t cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) parse_fail(field, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m(r, c) = complex_entry(j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

json matrix_to_json(const Mat& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    out.push_back(row);
  }
  return out;
}

json vector_to_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

Element element_from_json(const Algebra& A, const json& j, const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) != A.num_blocks())
    parse_fail(field, "element needs one matrix per block (" + std::to_string(A.num_blocks()) + ")");
  std::vector<Mat> blocks;
  for (int b = 0; b < A.num_blocks(); ++b) {
    Mat m = matrix_from_json(j[b], field + "[" + std::to_string(b) + "]");
    if (m.rows() != A.blocks()[b] || m.cols() != A.blocks()[b])
      parse_fail(field, "block " + std::to_string(b) + " has the wrong size");
    blocks.push_back(std::move(m));
  }
  return Element(std::move(blocks));
}

json element_to_json(const Element& x) {
  json out = json::array();
  for (const auto& b : x.blocks()) out.push_back(matrix_to_json(b));
  return out;
}

SystemFile parse_system_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1 + std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n');
    parse_fail("line " + std::to_string(line), "malformed JSON");
  }
  SystemFile f;
  f.schema_version = integer(need(j, "schema_version", "file"), "schema_version");
  if (f.schema_version != 1) parse_fail("schema_version", "only version 1 is supported");

  const json& alg = need(j, "algebra", "file");
  const json& blocks = need(alg, "blocks", "algebra");
  const json& weights = need(alg, "weights", "algebra");
  if (!blocks.is_array() || !weights.is_array()) parse_fail("algebra", "blocks and weights are lists");
  for (std::size_t i = 0; i < blocks.size(); ++i) f.blocks.push_back(integer(blocks[i], "algebra.blocks"));
  for (std::size_t i = 0; i < weights.size(); ++i) f.weights.push_back(number(weights[i], "algebra.weights"));

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) parse_fail("tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      double v = number(it.value(), "tolerances." + it.key());
      if (it.key() == "rank_rel") f.tol.rank_rel = v;
      else if (it.key() == "rank_abs") f.tol.rank_abs = v;
      else if (it.key() == "verify") f.tol.verify = v;
      else if (it.key() == "report") f.tol.report = v;
      else parse_fail("tolerances." + it.key(), "unknown tolerance");
    }
  }

  const json& grp = need(j, "group", "file");
  const json& kind = need(grp, "kind", "group");
  if (!kind.is_string()) parse_fail("group.kind", "expected a string");
  const std::string k = kind.get<std::string>();
  if (k == "finite_abelian") {
    const json& o = need(grp, "orders", "group");
    if (!o.is_array()) parse_fail("group.orders", "expected a list");
    std::vector<int> orders;
    for (const auto& e : o) orders.push_back(integer(e, "group.orders"));
    f.group = finite_abelian(orders);
  } else if (k == "free_abelian") {
    f.group = free_abelian(integer(need(grp, "rank", "group"), "group.rank"));
  } else if (k == "presented") {
    f.group.kind = GroupKind::Presented;
  } else {
    parse_fail("group.kind", "unknown kind '" + k + "'");
  }

  const json& gens = need(j, "generators", "file");
  if (!gens.is_array()) parse_fail("generators", "expected a list");
  if (f.group.kind == GroupKind::Presented) f.group.labels.clear();
  else if (static_cast<int>(gens.size()) != f.group.num_generators())
    parse_fail("generators", "group has " + std::to_string(f.group.num_generators()) + " generators, file lists " +
                                 std::to_string(gens.size()));
  Algebra A(f.blocks, f.weights, f.tol);
  for (std::size_t g = 0; g < gens.size(); ++g) {
    const std::string where = "generators[" + std::to_string(g) + "]";
    const json& gj = gens[g];
    GeneratorSpec spec;
    if (gj.contains("label")) {
      if (!gj["label"].is_string()) parse_fail(where + ".label", "expected a string");
      spec.label = gj["label"].get<std::string>();
    } else {
      spec.label = f.group.kind == GroupKind::Presented ? std::string(1, char('a' + g)) : f.group.labels[g];
    }
    int forms = gj.contains("unitary") + gj.contains("matrix") + gj.contains("permutation");
    if (forms != 1) parse_fail(where, "give exactly one of unitary, matrix, permutation");
    if (gj.contains("unitary")) {
      spec.kind = "unitary";
      spec.unitary = element_from_json(A, gj["unitary"], where + ".unitary");
    } else if (gj.contains("matrix")) {
      spec.kind = "matrix";
      spec.matrix = matrix_from_json(gj["matrix"], where + ".matrix");
    } else {
      spec.kind = "permutation";
      if (!gj["permutation"].is_array()) parse_fail(where + ".permutation", "expected a list");
      for (const auto& e : gj["permutation"]) spec.permutation.push_back(integer(e, where + ".permutation"));
    }
    if (f.group.kind == GroupKind::Presented) f.group.labels.push_back(spec.label);
    else f.group.labels[g] = spec.label;
    f.generators.push_back(std::move(spec));
  }
  if (grp.contains("relations")) {
    if (!grp["relations"].is_array()) parse_fail("group.relations", "expected a list of words");
    for (const auto& r : grp["relations"]) {
      if (!r.is_array()) parse_fail("group.relations", "each relation is a list of tokens");
      std::vector<std::string> w;
      for (const auto& t : r) {
        if (!t.is_string()) parse_fail("group.relations", "tokens are strings");
        w.push_back(t.get<std::string>());
      }
      f.group.relations.push_back(std::move(w));
    }
  }

  if (j.contains("subalgebra")) {
    const json& gq = need(j["subalgebra"], "generators", "subalgebra");
    if (!gq.is_array()) parse_fail("subalgebra.generators", "expected a list");
    for (std::size_t i = 0; i < gq.size(); ++i)
      f.q_generators.push_back(element_from_json(A, gq[i], "subalgebra.generators[" + std::to_string(i) + "]"));
  }
  return f;
}

SystemFile read_system_file(const std::string& path) { return parse_system_text(slurp(path)); }

json system_to_json(const SystemFile& f) {
  json j;
  j["schema_version"] = f.schema_version;
  j["algebra"] = {{"blocks", f.blocks}, {"weights", f.weights}};
  json g;
  switch (f.group.kind) {
    case GroupKind::FiniteAbelian: g["kind"] = "finite_abelian"; g["orders"] = f.group.orders; break;
    case GroupKind::FreeAbelian: g["kind"] = "free_abelian"; g["rank"] = f.group.rank; break;
    case GroupKind::Presented: g["kind"] = "presented"; break;
  }
  if (!f.group.relations.empty()) g["relations"] = f.group.relations;
  j["group"] = g;
  json gens = json::array();
  for (const auto& s : f.generators) {
    json e;
    e["label"] = s.label;
    if (s.kind == "unitary") e["unitary"] = element_to_json(s.unitary);
    else if (s.kind == "matrix") e["matrix"] = matrix_to_json(s.matrix);
    else e["permutation"] = s.permutation;
    gens.push_back(e);
  }
  j["generators"] = gens;
  if (!f.q_generators.empty()) {
    json q = json::array();
    for (const auto& x : f.q_generators) q.push_back(element_to_json(x));
    j["subalgebra"] = {{"generators", q}};
  }
  j["tolerances"] = {{"rank_rel", f.tol.rank_rel}, {"rank_abs", f.tol.rank_abs}, {"verify", f.tol.verify},
                     {"report", f.tol.report}};
  return j;
}

DynamicalSystem build_system(const SystemFile& f) {
  f.tol.validate();
  Algebra A(f.blocks, f.weights, f.tol);
  std::vector<Mat> maps;
  for (const auto& s : f.generators) {
    if (s.kind == "unitary") {
      A.check(s.unitary);
      Element uu = s.unitary.adjoint() * s.unitary;
      if ((uu - A.identity()).max_abs() > f.tol.verify * 100)
        throw Error(ErrorKind::NotAutomorphism, "generator " + s.label + " is not a unitary");
      maps.push_back(inner_automorphism(A, s.unitary));
    } else if (s.kind == "matrix") {
      if (s.matrix.rows() != A.dim() || s.matrix.cols() != A.dim())
        throw Error(ErrorKind::Shape, "generator " + s.label + " must act on L^2(N) of dimension " +
                                          std::to_string(A.dim()));
      maps.push_back(s.matrix);
    } else {
      if (!A.is_commutative()) throw Error(ErrorKind::NotAutomorphism, "permutation generators need a commutative algebra");
      std::vector<int> seen(A.dim(), 0);
      if (static_cast<int>(s.permutation.size()) != A.dim())
        throw Error(ErrorKind::NotAutomorphism, "generator " + s.label + " is not a permutation");
      for (int p : s.permutation)
        if (p < 0 || p >= A.dim() || seen[p]++)
          throw Error(ErrorKind::NotAutomorphism, "generator " + s.label + " is not a permutation");
      maps.push_back(permutation_automorphism(A, s.permutation));
    }
  }
  Subalgebra Q = f.q_generators.empty() ? scalar_subalgebra(A) : generate_subalgebra(A, f.q_generators);
  return make_system(A, f.group, maps, Q);
}

DynamicalSystem parse_system_file(const std::string& path) { return build_system(read_system_file(path)); }

Element parse_probe(const Algebra& A, const std::string& text) {
  std::size_t s = text.find_first_not_of(" \t");
  if (s == std::string::npos) parse_fail("probe", "empty probe");
  if (text[s] == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error&) {
      parse_fail("probe", "malformed element literal");
    }
    return element_from_json(A, j, "probe");
  }
  if (!A.is_commutative()) parse_fail("probe", "tuple probes need a commutative algebra; use an element literal");
  std::string body = text.substr(s);
  if (body.front() != '(' || body.back() != ')') parse_fail("probe", "expected (v1,...,vn)");
  body = body.substr(1, body.size() - 2);
  std::vector<Mat> blocks;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
      blocks.push_back(Mat::Constant(1, 1, v));
    } catch (const std::logic_error&) {
      parse_fail("probe", "bad number '" + tok + "'");
    }
  }
  if (static_cast<int>(blocks.size()) != A.num_blocks())
    parse_fail("probe", "expected " + std::to_string(A.num_blocks()) + " values");
  return Element(std::move(blocks));
}

std::vector<Element> parse_q_generators(const Algebra& A, const std::string& text_or_path) {
  std::size_t s = text_or_path.find_first_not_of(" \t");
  std::string text = (s != std::string::npos && text_or_path[s] == '[') ? text_or_path : slurp(text_or_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    parse_fail("q-generators", "malformed JSON");
  }
  if (!j.is_array()) parse_fail("q-generators", "expected a list of element literals");
  std::vector<Element> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(element_from_json(A, j[i], "q-generators[" + std::to_string(i) + "]"));
  return out;
}

std::string canonical_json(const json& j) {
  std::string out;
  emit(j, 0, out);
  out += "\n";
  return out;
}

std::string canonical_text(const json& j) {
  std::string out;
  emit_text(j, "", out);
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace opalg
