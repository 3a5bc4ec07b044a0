#pragma once

#include <optional>

#include "saferl/tabular/cmdp.hpp"

namespace saferl::tabular {

// Best return subject to the cost budget, over trajectory-wise mixtures of
// deterministic policies. When the budget binds, the optimum is a
// two-component mixture sitting exactly on the budget; otherwise it is the
// single best feasible deterministic policy.
struct ConstrainedOptimum {
  MixedPolicy policy;
  double v_r = 0.0;  // at mu0
  double v_c = 0.0;  // at mu0
};

// Enumerates all |A|^|S| deterministic policies (SizeError beyond budget),
// throws InfeasibleError when no policy meets the budget.
ConstrainedOptimum solve_constrained_optimum(const TabularCmdp& m,
                                             double budget = 1e5);

enum class Temptation { kTempting, kNonTempting };

struct TemptationResult {
  Temptation status = Temptation::kNonTempting;
  // Higher-return-than-optimal policy; present iff tempting. Its cost
  // always exceeds the budget.
  std::optional<TabularPolicy> witness;
  double witness_v_r = 0.0;
  double witness_v_c = 0.0;
  double constrained_v_r = 0.0;
  double constrained_v_c = 0.0;
};

// An instance is tempting when the unconstrained return optimum exceeds the
// constrained one.
TemptationResult classify_temptation(const TabularCmdp& m,
                                     double budget = 1e5);

}  // namespace saferl::tabular
