#pragma once

#include "opalg/dynamics.hpp"

namespace opalg::fixtures {

// C^2 with the swap, Q = C
DynamicalSystem sys_a();
// M_2 with Ad(diag(1,-1)) and Ad([[0,1],[1,0]]), Q = C
DynamicalSystem sys_b();
// C^4 uniform, Z_4 acting by the 4-cycle 0->2->1->3->0, Q = functions of the fibers {0,1},{2,3}
DynamicalSystem sys_c();
std::vector<int> sys_c_partition();
// M_2 with the trivial group, Q = C
DynamicalSystem sys_d();
// Z_n acting on C^n by translation, Q = C
DynamicalSystem rotation(int n);

// by name: "A", "B", "C", "D"
DynamicalSystem by_name(const std::string& name);
// diagonal subalgebra of a single-block algebra
Subalgebra diagonal(const Algebra& A);

}  // namespace opalg::fixtures
