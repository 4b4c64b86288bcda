#include "repgame/belief.hpp"

#include <cmath>
#include <limits>

#include "repgame/errors.hpp"

namespace repgame {

Belief Belief::vertex(int dim, int index) {
  Belief b;
  b.w.assign(static_cast<std::size_t>(dim), 0.0);
  b.w[static_cast<std::size_t>(index)] = 1.0;
  return b;
}

std::span<const double> type_action_probs(const GameSpec& spec, const ActionRule& rule,
                                          int type_index) {
  if (type_index == spec.types.normal_index()) {
    return {rule.normal.data(), rule.normal.size()};
  }
  const auto& mixed = spec.types.commitment_types[static_cast<std::size_t>(type_index)].mixed;
  return {mixed.data(), mixed.size()};
}

std::vector<double> predicted_action_dist(const GameSpec& spec, const Belief& mu,
                                          const ActionRule& rule) {
  int num_a1 = spec.stage.num_a1();
  std::vector<double> kappa(static_cast<std::size_t>(num_a1), 0.0);
  for (int w = 0; w < mu.size(); ++w) {
    double weight = mu[w];
    if (weight == 0.0) continue;
    auto probs = type_action_probs(spec, rule, w);
    for (int a = 0; a < num_a1; ++a) kappa[static_cast<std::size_t>(a)] += weight * probs[a];
  }
  return kappa;
}

std::vector<double> signal_marginal(const GameSpec& spec, const Belief& mu,
                                    const ActionRule& rule) {
  auto kappa = predicted_action_dist(spec, mu, rule);
  int num_z2 = spec.monitoring.num_z2();
  std::vector<double> marginal(static_cast<std::size_t>(num_z2), 0.0);
  for (int a = 0; a < spec.stage.num_a1(); ++a) {
    double ka = kappa[static_cast<std::size_t>(a)];
    if (ka == 0.0) continue;
    for (int z = 0; z < num_z2; ++z) {
      marginal[static_cast<std::size_t>(z)] += ka * spec.monitoring.rho2.at(a, z);
    }
  }
  return marginal;
}

Belief belief_update(const GameSpec& spec, const Belief& mu, const ActionRule& rule, int z2) {
  int num_types = mu.size();
  Belief posterior;
  posterior.w.assign(static_cast<std::size_t>(num_types), 0.0);
  double normalizer = 0.0;
  for (int w = 0; w < num_types; ++w) {
    auto probs = type_action_probs(spec, rule, w);
    double likelihood = 0.0;
    for (int a = 0; a < spec.stage.num_a1(); ++a) {
      likelihood += spec.monitoring.rho2.at(a, z2) * probs[a];
    }
    double mass = likelihood * mu[w];
    posterior.w[static_cast<std::size_t>(w)] = mass;
    normalizer += mass;
  }
  if (!(normalizer > 0.0)) {
    raise(Errc::ZeroProbabilitySignal,
          "signal " + std::to_string(z2) + " has zero marginal under the conjectured rule");
  }
  for (double& v : posterior.w) v /= normalizer;
  return posterior;
}

double martingale_residual(const GameSpec& spec, const Belief& mu, const ActionRule& rule) {
  auto marginal = signal_marginal(spec, mu, rule);
  std::vector<double> expected(static_cast<std::size_t>(mu.size()), 0.0);
  for (int z = 0; z < spec.monitoring.num_z2(); ++z) {
    double pz = marginal[static_cast<std::size_t>(z)];
    if (!(pz > 0.0)) continue;
    Belief next = belief_update(spec, mu, rule, z);
    for (int w = 0; w < mu.size(); ++w) {
      expected[static_cast<std::size_t>(w)] += pz * next[w];
    }
  }
  double residual = 0.0;
  for (int w = 0; w < mu.size(); ++w) {
    residual = std::max(residual, std::abs(expected[static_cast<std::size_t>(w)] - mu[w]));
  }
  return residual;
}

DivergenceReport divergence_diagnostics(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    raise(Errc::DimensionMismatch, "distributions of unequal length");
  }
  DivergenceReport report;
  double kl = 0.0;
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    tv += std::abs(p[i] - q[i]);
    if (p[i] > 0.0) {
      if (q[i] > 0.0) {
        kl += p[i] * std::log(p[i] / q[i]);
      } else {
        kl = std::numeric_limits<double>::infinity();
      }
    }
  }
  report.kl = kl;
  report.tv = 0.5 * tv;
  report.pinsker_ok = report.tv <= std::sqrt(kl / 2.0) + 1e-12;
  return report;
}

}  // namespace repgame
