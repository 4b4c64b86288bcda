#pragma once

#include <span>
#include <vector>

#include "repgame/game.hpp"

namespace repgame {

// Default absolute tolerance for best-response ties.
inline constexpr double kBrTol = 1e-9;

// All maximizers of Player 2's expected payoff under the action forecast
// kappa, ties within `tol`.
std::vector<int> best_response_set(const StageGame& game, std::span<const double> kappa,
                                   double tol = kBrTol);

// Among tied best responses, pick the action best for Player 1 in expectation
// under the same kappa; remaining ties go to the lowest action index.
int tie_break(const StageGame& game, std::span<const double> kappa,
              const std::vector<int>& candidates);

// tie_break(best_response_set(kappa)): Player 2's deterministic myopic
// response as a total function of the forecast.
int myopic_response(const StageGame& game, std::span<const double> kappa, double tol = kBrTol);

// True iff kappa lies within eta of some indifference hyperplane
// sum_a kappa(a) (u2(a,k) - u2(a,m)) = 0, k != m.
bool in_indifference_region(const StageGame& game, std::span<const double> kappa, double eta);

struct PureStackelberg {
  int a1 = 0;
  double payoff = 0.0;
};

// Best pure commitment for Player 1 given the tie-broken myopic reply.
PureStackelberg pure_stackelberg(const StageGame& game);

struct MixedStackelberg {
  std::vector<double> alpha1;
  int a2 = 0;
  double payoff = 0.0;
};

// Best mixed commitment: for each Player 2 action, maximize Player 1's
// expected payoff over the polytope of forecasts to which that action is a
// weak best response (exact vertex enumeration), favorable tie selection.
MixedStackelberg mixed_stackelberg(const StageGame& game);

// min over Player 2's best responses to type m's mixture of Player 1's
// expected payoff: the floor the mimicked reputation guarantees.
double stackelberg_floor(const GameSpec& spec, int type_index);
double stackelberg_floor(const GameSpec& spec, const std::string& type_name);

}  // namespace repgame
