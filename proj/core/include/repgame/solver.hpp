#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "repgame/grid.hpp"
#include "repgame/response.hpp"

namespace repgame {

// Value of the normal type per grid point. Commitment types have no decision;
// their play enters through the forecast and the belief transition.
struct ValueFunction {
  std::vector<double> values;
  int iterations = 0;
  double residual = 0.0;
};

// Normal-type action per grid point (mixed; pure entries are point masses).
struct MarkovPolicy {
  std::vector<std::vector<double>> actions;
};

struct SolveOptions {
  // Player 2's model of the normal type's stage mixture, used for the myopic
  // response and the belief transition inside the backup. Defaults to the
  // normal's stage-Nash action (stage_nash_normal_action).
  std::optional<std::vector<double>> conjecture;
  int max_iterations = 100000;
  // Optional randomization menu: candidate mixtures with denominator
  // mixture_resolution in addition to the pure actions. 0 keeps pure only.
  int mixture_resolution = 0;
  double eta = 1e-9;  // indifference-region surveillance tolerance
  int threads = 0;    // 0 = hardware concurrency
};

// The normal type's action in a stage Nash equilibrium of (u1, u2); the
// default conjecture behind Player 2's filter. Picks the pure equilibrium
// best for Player 1 when several exist, and falls back to Player 1's maximin
// pure action in games without a pure equilibrium.
std::vector<double> stage_nash_normal_action(const StageGame& game);

struct SolveResult {
  ValueFunction value;
  MarkovPolicy policy;
  std::vector<double> residual_history;
  // Grid points whose forecast sits eta-close to an indifference hyperplane.
  std::int64_t indifference_points = 0;
};

// One synchronous backup of the discounted Bellman operator on the grid.
ValueFunction bellman_operator(const ValueFunction& v, const GameSpec& spec,
                               const BeliefGrid& grid, const SolveOptions& options = {});

// Iterate from V = 0 until the sup-norm change is at most
// tol * (1 - delta) / (2 delta), so the fixed point is within tol.
// Throws IterationLimitExceeded past options.max_iterations.
SolveResult value_iteration(const GameSpec& spec, const BeliefGrid& grid, double tol,
                            const SolveOptions& options = {});

// Exact finite-horizon backward induction; stage t holds the value/policy
// with t periods already played (t = 0 is the full T-period problem).
struct HorizonSolution {
  std::vector<ValueFunction> values;
  std::vector<MarkovPolicy> policies;
};
HorizonSolution backward_induction(const GameSpec& spec, const BeliefGrid& grid, int horizon,
                                   const SolveOptions& options = {});

struct PolicyValue {
  double mean = 0.0;          // normalized: (1-delta) * discounted sum
  double ci_halfwidth = 0.0;  // 1.96 * stderr across replications
  bool ci_defined = true;     // false when reps == 1
  int reps = 0;
};

// Monte Carlo value of a grid policy for the normal type against
// Bayes-myopic Player 2s holding `conjecture`; deterministic given seed.
PolicyValue evaluate_policy(const GameSpec& spec, const BeliefGrid& grid,
                            const MarkovPolicy& policy, const Belief& mu0, int reps,
                            std::uint64_t seed,
                            const std::optional<std::vector<double>>& conjecture = std::nullopt);

// Empirical Lipschitz-type modulus max |V(mu) - V(mu')| / ||mu - mu'||_1 of an
// interpolated value table over the supplied probe pairs.
double perturbation_modulus(const BeliefGrid& grid, const ValueFunction& value,
                            std::span<const std::pair<Belief, Belief>> probe_pairs);

// CSV exports: one row per grid point.
void export_values_csv(std::ostream& out, const BeliefGrid& grid, const ValueFunction& value);
void export_policy_csv(std::ostream& out, const GameSpec& spec, const BeliefGrid& grid,
                       const MarkovPolicy& policy);

}  // namespace repgame
