#pragma once

#include "saferl/tabular/cmdp.hpp"
#include "saferl/util/rng.hpp"

namespace saferl::tabular {

// Random instances for diagnostics and verification batteries. Transition
// rows and mu0 are Dirichlet-like draws; rewards are uniform in [0, 1];
// costs are positive only into a random nonempty set of unsafe states.
TabularCmdp random_cmdp(Rng& rng, int n_states, int n_actions, double gamma);

TabularPolicy random_policy(Rng& rng, int n_states, int n_actions);

// Per-state perturbation sets containing the true state plus up to
// max_extra random others.
StateBall random_ball(Rng& rng, int n_states, int max_extra);

// Adjusts kappa so the return-greedy policy violates the budget while some
// policy still meets it; retries draws until the classification holds.
TabularCmdp random_tempting_cmdp(Rng& rng, int n_states, int n_actions,
                                 double gamma);

// Adjusts kappa so the return-greedy policy is feasible (or the budget is
// vacuous), making the instance non-tempting.
TabularCmdp random_nontempting_cmdp(Rng& rng, int n_states, int n_actions,
                                    double gamma, bool vacuous);

}  // namespace saferl::tabular
