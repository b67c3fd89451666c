#include "opalg/fixtures.hpp"

#include "opalg/fusion.hpp"

namespace opalg::fixtures {

DynamicalSystem sys_a() {
  Algebra A({1, 1}, {0.5, 0.5});
  return make_system(A, finite_abelian({2}), {permutation_automorphism(A, {1, 0})}, scalar_subalgebra(A));
}

DynamicalSystem sys_b() {
  Algebra A({2}, {1.0});
  Element z({Mat(Eigen::Vector2cd(1, -1).asDiagonal())});
  Mat x(2, 2);
  x << 0, 1, 1, 0;
  GroupSpec g = finite_abelian({2, 2});
  return make_system(A, g, {inner_automorphism(A, z), inner_automorphism(A, Element({x}))}, scalar_subalgebra(A));
}

std::vector<int> sys_c_partition() { return {0, 0, 1, 1}; }

DynamicalSystem sys_c() {
  Algebra A({1, 1, 1, 1}, {0.25, 0.25, 0.25, 0.25});
  return make_system(A, finite_abelian({4}), {permutation_automorphism(A, {2, 3, 1, 0})},
                     partition_subalgebra(A, sys_c_partition()));
}

DynamicalSystem sys_d() {
  Algebra A({2}, {1.0});
  return make_system(A, finite_abelian({}), {}, scalar_subalgebra(A));
}

DynamicalSystem rotation(int n) {
  Algebra A(std::vector<int>(n, 1), std::vector<double>(n, 1.0 / n));
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = (i + 1) % n;
  return make_system(A, finite_abelian({n}), {permutation_automorphism(A, perm)}, scalar_subalgebra(A));
}

DynamicalSystem by_name(const std::string& name) {
  if (name == "A") return sys_a();
  if (name == "B") return sys_b();
  if (name == "C") return sys_c();
  if (name == "D") return sys_d();
  throw Error(ErrorKind::InvalidArgument, "unknown fixture " + name);
}

Subalgebra diagonal(const Algebra& A) {
  std::vector<Element> gens;
  for (int b = 0; b < A.num_blocks(); ++b)
    for (int i = 0; i < A.blocks()[b]; ++i) gens.push_back(A.matrix_unit(b, i, i));
  return generate_subalgebra(A, gens);
}

}  // namespace opalg::fixtures
