#pragma once

#include <vector>

#include "saferl/tabular/cmdp.hpp"

namespace saferl::tabular::detail {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// A is n x n row-major. Throws FaultError on a vanishing pivot.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                int n);

// Exact state values of pi under adversary nu for objective f, via the
// linear system (I - gamma M) v = b induced by the corrupted policy.
std::vector<double> exact_values(const TabularCmdp& m, const TabularPolicy& pi,
                                 const TabularAdversary& nu, Objective f);

}  // namespace saferl::tabular::detail
