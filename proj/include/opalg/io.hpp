#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "opalg/dynamics.hpp"

namespace opalg {

using json = nlohmann::json;

struct GeneratorSpec {
  std::string label;
  std::string kind;          // "unitary" | "matrix" | "permutation"
  Element unitary;           // unitary: implements Ad(u)
  Mat matrix;                // matrix: Koopman matrix on L^2(N), orthonormal coordinates
  std::vector<int> permutation;
};

struct SystemFile {
  int schema_version = 1;
  std::vector<int> blocks;
  std::vector<double> weights;
  GroupSpec group;
  std::vector<GeneratorSpec> generators;
  std::vector<Element> q_generators;  // empty means Q = C
  ToleranceProfile tol;
};

SystemFile parse_system_text(const std::string& text);
SystemFile read_system_file(const std::string& path);
json system_to_json(const SystemFile& f);
DynamicalSystem build_system(const SystemFile& f);
DynamicalSystem parse_system_file(const std::string& path);

// block list of row lists of [re, im] pairs
Element element_from_json(const Algebra& A, const json& j, const std::string& field);
json element_to_json(const Element& x);
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j, const std::string& field);
json vector_to_json(const Vec& v);

// "(1,-1)" lists the diagonal of a commutative element; anything starting with '[' is an element literal
Element parse_probe(const Algebra& A, const std::string& text);
// inline JSON list of element literals, or a path to a file holding one
std::vector<Element> parse_q_generators(const Algebra& A, const std::string& text_or_path);

// sorted keys, fixed 12-decimal numbers, two-space indent, LF
std::string canonical_json(const json& j);
std::string canonical_text(const json& j);
std::string fnv1a_hex(const std::string& bytes);

}  // namespace opalg
