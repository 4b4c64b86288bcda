#pragma once

#include <span>
#include <vector>

#include "repgame/game.hpp"

namespace repgame {

// Posterior over the type space; the state of the controlled Markov chain.
struct Belief {
  std::vector<double> w;

  int size() const { return static_cast<int>(w.size()); }
  double operator[](int i) const { return w[static_cast<std::size_t>(i)]; }

  static Belief vertex(int dim, int index);
};

// One period's action rule paired with a GameSpec: the normal type plays
// `normal` (a mixture over A1), commitment types play their committed
// mixtures. This is the object Player 2 conditions on when filtering.
struct ActionRule {
  std::vector<double> normal;
};

// P(a1 | omega) row for a given type under the rule.
std::span<const double> type_action_probs(const GameSpec& spec, const ActionRule& rule,
                                          int type_index);

// Player 2's one-step forecast of Player 1's action: sum_w mu(w) P(a1|w).
std::vector<double> predicted_action_dist(const GameSpec& spec, const Belief& mu,
                                          const ActionRule& rule);

// Distribution of the public signal implied by the forecast:
// P(z) = sum_a rho2(z|a) * forecast(a).
std::vector<double> signal_marginal(const GameSpec& spec, const Belief& mu,
                                    const ActionRule& rule);

// Exact Bayes update of the type posterior given public signal z2:
// mu'(w) proportional to [sum_a rho2(z|a) P(a|w)] * mu(w).
// Throws ZeroProbabilitySignal when z2 has zero marginal; callers choose the
// off-path policy (the simulator keeps the belief and logs the event).
Belief belief_update(const GameSpec& spec, const Belief& mu, const ActionRule& rule, int z2);

// max_w | sum_z P(z) mu'_z(w) - mu(w) | over signals with positive marginal.
// Exact Bayes makes beliefs a martingale, so this is numerical noise.
double martingale_residual(const GameSpec& spec, const Belief& mu, const ActionRule& rule);

struct DivergenceReport {
  double kl = 0.0;  // nats; +infinity when p is not absolutely continuous wrt q
  double tv = 0.0;  // total variation, (1/2) sum |p - q|
  bool pinsker_ok = false;
};

// KL divergence (natural log, 0 log 0 = 0), total variation, and the Pinsker
// check tv <= sqrt(kl/2) + 1e-12. Throws DimensionMismatch.
DivergenceReport divergence_diagnostics(std::span<const double> p, std::span<const double> q);

}  // namespace repgame
