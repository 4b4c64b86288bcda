#include "repgame/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "repgame/errors.hpp"
#include "repgame/parallel.hpp"
#include "repgame/sim.hpp"

namespace repgame {

namespace {

// Everything value-independent about one backup: Player 2's response per grid
// point, stage rewards, and interpolation supports of the successor beliefs.
// The successor map depends on the conjectured rule and the signal only, so a
// sweep is a plain max over actions of (reward + discounted expectation).
struct BellmanContext {
  struct Point {
    int response = 0;
    bool indifferent = false;
    std::vector<double> rewards;                    // per P1 action: u1(a, response)
    std::vector<BeliefGrid::Support> successors;    // per signal
    std::vector<bool> on_path;                      // per signal
  };
  std::vector<Point> points;
  std::vector<std::vector<double>> candidates;      // action menu (pure first)
  std::vector<double> conjecture;
  double eta = 0.0;
  int threads = 0;
};

std::vector<std::vector<double>> candidate_menu(int num_a1, int mixture_resolution) {
  std::vector<std::vector<double>> menu;
  for (int a = 0; a < num_a1; ++a) {
    std::vector<double> pure(static_cast<std::size_t>(num_a1), 0.0);
    pure[static_cast<std::size_t>(a)] = 1.0;
    menu.push_back(std::move(pure));
  }
  if (mixture_resolution > 1) {
    std::vector<int> comp(static_cast<std::size_t>(num_a1), 0);
    std::function<void(int, int)> rec = [&](int idx, int left) {
      if (idx == num_a1 - 1) {
        comp[static_cast<std::size_t>(idx)] = left;
        int support = 0;
        for (int v : comp) support += v > 0 ? 1 : 0;
        if (support > 1) {  // pure points are already in the menu
          std::vector<double> mixed(static_cast<std::size_t>(num_a1));
          for (int i = 0; i < num_a1; ++i) {
            mixed[static_cast<std::size_t>(i)] =
                static_cast<double>(comp[static_cast<std::size_t>(i)]) / mixture_resolution;
          }
          menu.push_back(std::move(mixed));
        }
        return;
      }
      for (int k = 0; k <= left; ++k) {
        comp[static_cast<std::size_t>(idx)] = k;
        rec(idx + 1, left - k);
      }
    };
    rec(0, mixture_resolution);
  }
  return menu;
}

// Interpolation support of a successor belief for the backup. Grid points
// that put zero mass on a type the exact posterior keeps alive are excluded:
// a finite-likelihood posterior can never glue itself to a lower face, and
// letting the interpolation do so leaks the absorbing vertex values into the
// interior (the milking artifact). Posteriors that eliminate a type exactly
// keep their face supports.
BeliefGrid::Support successor_support(const BeliefGrid& grid, const Belief& posterior) {
  BeliefGrid::Support raw = grid.locate(posterior);
  BeliefGrid::Support filtered;
  double total = 0.0;
  for (std::size_t k = 0; k < raw.indices.size(); ++k) {
    const Belief& candidate = grid.point(raw.indices[k]);
    bool collapses = false;
    for (int w = 0; w < posterior.size(); ++w) {
      if (candidate[w] == 0.0 && posterior[w] > 0.0) {
        collapses = true;
        break;
      }
    }
    if (collapses) continue;
    filtered.indices.push_back(raw.indices[k]);
    filtered.weights.push_back(raw.weights[k]);
    total += raw.weights[k];
  }
  if (filtered.indices.empty() || !(total > 0.0)) return raw;  // ultra-coarse grids
  for (double& w : filtered.weights) w /= total;
  return filtered;
}

BellmanContext build_context(const GameSpec& spec, const BeliefGrid& grid,
                             const SolveOptions& options) {
  BellmanContext ctx;
  ctx.conjecture = options.conjecture ? *options.conjecture : stage_nash_normal_action(spec.stage);
  ctx.eta = options.eta;
  ctx.threads = options.threads;
  ctx.candidates = candidate_menu(spec.stage.num_a1(), options.mixture_resolution);
  ActionRule rule{ctx.conjecture};

  int num_z2 = spec.monitoring.num_z2();
  std::size_t normal_vertex = grid.vertex_index(spec.types.normal_index());
  ctx.points.resize(grid.size());
  parallel_for(grid.size(), options.threads, [&](std::size_t i) {
    const Belief& mu = grid.point(i);
    auto& pt = ctx.points[i];
    auto kappa = predicted_action_dist(spec, mu, rule);
    pt.response = myopic_response(spec.stage, kappa);
    pt.indifferent = in_indifference_region(spec.stage, kappa, options.eta);
    pt.rewards.resize(static_cast<std::size_t>(spec.stage.num_a1()));
    for (int a = 0; a < spec.stage.num_a1(); ++a) {
      pt.rewards[static_cast<std::size_t>(a)] = spec.stage.u1.at(a, pt.response);
    }
    auto marginal = signal_marginal(spec, mu, rule);
    pt.successors.resize(static_cast<std::size_t>(num_z2));
    pt.on_path.resize(static_cast<std::size_t>(num_z2));
    for (int z = 0; z < num_z2; ++z) {
      if (marginal[static_cast<std::size_t>(z)] > 0.0) {
        pt.on_path[static_cast<std::size_t>(z)] = true;
        pt.successors[static_cast<std::size_t>(z)] =
            successor_support(grid, belief_update(spec, mu, rule, z));
      } else {
        // A zero-probability public signal can only come from a deviation,
        // and only the strategic type deviates.
        pt.on_path[static_cast<std::size_t>(z)] = false;
        pt.successors[static_cast<std::size_t>(z)] = {{normal_vertex}, {1.0}};
      }
    }
  });
  return ctx;
}

// One synchronous sweep; writes values and optionally the argmax policy.
double sweep(const GameSpec& spec, const BellmanContext& ctx, std::span<const double> v,
             std::vector<double>& out, MarkovPolicy* policy) {
  int num_a1 = spec.stage.num_a1();
  int num_z2 = spec.monitoring.num_z2();
  double delta = spec.delta;
  std::vector<double> residuals(ctx.points.size(), 0.0);

  parallel_for(ctx.points.size(), ctx.threads, [&](std::size_t i) {
    const auto& pt = ctx.points[i];
    // Value of the successor belief per signal, shared across actions.
    double svals[16];
    std::vector<double> svals_dyn;
    double* sv = num_z2 <= 16 ? svals : (svals_dyn.resize(static_cast<std::size_t>(num_z2)),
                                         svals_dyn.data());
    for (int z = 0; z < num_z2; ++z) {
      const auto& sup = pt.successors[static_cast<std::size_t>(z)];
      double acc = 0.0;
      for (std::size_t k = 0; k < sup.indices.size(); ++k) {
        acc += sup.weights[k] * v[sup.indices[k]];
      }
      sv[z] = acc;
    }
    double q[16];
    std::vector<double> q_dyn;
    double* qv = num_a1 <= 16 ? q : (q_dyn.resize(static_cast<std::size_t>(num_a1)), q_dyn.data());
    for (int a = 0; a < num_a1; ++a) {
      double cont = 0.0;
      for (int z = 0; z < num_z2; ++z) {
        cont += spec.monitoring.rho2.at(a, z) * sv[z];
      }
      qv[a] = pt.rewards[static_cast<std::size_t>(a)] + delta * cont;
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t c = 0; c < ctx.candidates.size(); ++c) {
      const auto& mix = ctx.candidates[c];
      double val = 0.0;
      for (int a = 0; a < num_a1; ++a) val += mix[static_cast<std::size_t>(a)] * qv[a];
      if (val > best) {
        best = val;
        best_idx = c;
      }
    }
    residuals[i] = std::abs(best - v[i]);
    out[i] = best;
    if (policy) policy->actions[i] = ctx.candidates[best_idx];
  });

  double res = 0.0;
  for (double r : residuals) res = std::max(res, r);
  return res;
}

}  // namespace

std::vector<double> stage_nash_normal_action(const StageGame& game) {
  int best_a1 = -1;
  int best_a2 = -1;
  double best_u1 = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.num_a1(); ++i) {
    for (int j = 0; j < game.num_a2(); ++j) {
      bool p1_br = true;
      for (int i2 = 0; i2 < game.num_a1(); ++i2) {
        if (game.u1.at(i2, j) > game.u1.at(i, j) + kBrTol) p1_br = false;
      }
      bool p2_br = true;
      for (int j2 = 0; j2 < game.num_a2(); ++j2) {
        if (game.u2.at(i, j2) > game.u2.at(i, j) + kBrTol) p2_br = false;
      }
      if (p1_br && p2_br && game.u1.at(i, j) > best_u1) {
        best_u1 = game.u1.at(i, j);
        best_a1 = i;
        best_a2 = j;
      }
    }
  }
  if (best_a1 < 0) {
    // No pure stage equilibrium: fall back to Player 1's maximin action.
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < game.num_a1(); ++i) {
      double worst = std::numeric_limits<double>::infinity();
      for (int j = 0; j < game.num_a2(); ++j) worst = std::min(worst, game.u1.at(i, j));
      if (worst > best) {
        best = worst;
        best_a1 = i;
      }
    }
  }
  std::vector<double> action(static_cast<std::size_t>(game.num_a1()), 0.0);
  action[static_cast<std::size_t>(best_a1)] = 1.0;
  return action;
}

ValueFunction bellman_operator(const ValueFunction& v, const GameSpec& spec,
                               const BeliefGrid& grid, const SolveOptions& options) {
  BellmanContext ctx = build_context(spec, grid, options);
  ValueFunction next;
  next.values.assign(grid.size(), 0.0);
  next.iterations = v.iterations + 1;
  next.residual = sweep(spec, ctx, v.values, next.values, nullptr);
  return next;
}

SolveResult value_iteration(const GameSpec& spec, const BeliefGrid& grid, double tol,
                            const SolveOptions& options) {
  if (!(tol > 0.0)) raise(Errc::BadArgument, "tol must be positive");
  BellmanContext ctx = build_context(spec, grid, options);

  SolveResult result;
  result.policy.actions.assign(grid.size(), {});
  for (const auto& pt : ctx.points) {
    if (pt.indifferent) ++result.indifference_points;
  }

  double threshold = tol * (1.0 - spec.delta) / (2.0 * spec.delta);
  std::vector<double> current(grid.size(), 0.0);
  std::vector<double> next(grid.size(), 0.0);
  int iter = 0;
  double residual = std::numeric_limits<double>::infinity();
  while (true) {
    ++iter;
    residual = sweep(spec, ctx, current, next, nullptr);
    result.residual_history.push_back(residual);
    current.swap(next);
    if (residual <= threshold) break;
    if (iter >= options.max_iterations) {
      raise(Errc::IterationLimitExceeded,
            "no convergence after " + std::to_string(iter) + " sweeps (residual " +
                std::to_string(residual) + ")");
    }
  }
  // One more sweep to extract the argmax policy at the fixed point.
  sweep(spec, ctx, current, next, &result.policy);
  result.value.values = std::move(next);
  result.value.iterations = iter;
  result.value.residual = residual;
  return result;
}

HorizonSolution backward_induction(const GameSpec& spec, const BeliefGrid& grid, int horizon,
                                   const SolveOptions& options) {
  if (horizon < 1) raise(Errc::BadArgument, "horizon must be >= 1");
  BellmanContext ctx = build_context(spec, grid, options);

  HorizonSolution solution;
  solution.values.resize(static_cast<std::size_t>(horizon));
  solution.policies.resize(static_cast<std::size_t>(horizon));

  std::vector<double> continuation(grid.size(), 0.0);
  std::vector<double> stage_values(grid.size(), 0.0);
  // Stage T-1 backs up into the zero terminal value, stage 0 comes last.
  for (int t = horizon - 1; t >= 0; --t) {
    MarkovPolicy policy;
    policy.actions.assign(grid.size(), {});
    sweep(spec, ctx, continuation, stage_values, &policy);
    solution.values[static_cast<std::size_t>(t)] =
        ValueFunction{stage_values, horizon - t, 0.0};
    solution.policies[static_cast<std::size_t>(t)] = std::move(policy);
    continuation = stage_values;
  }
  return solution;
}

PolicyValue evaluate_policy(const GameSpec& spec, const BeliefGrid& grid,
                            const MarkovPolicy& policy, const Belief& mu0, int reps,
                            std::uint64_t seed,
                            const std::optional<std::vector<double>>& conjecture) {
  if (reps < 1) raise(Errc::BadArgument, "reps must be >= 1");
  GameSpec scenario = spec;
  scenario.mu0 = mu0.w;

  double max_u = std::max(1e-12, spec.stage.u1.max_abs());
  int horizon = static_cast<int>(std::ceil(std::log(1e-10 / max_u) / std::log(spec.delta)));
  horizon = std::clamp(horizon, 1, 200000);

  SimConfig config;
  config.seed = seed;
  config.horizon = horizon;
  config.reps = reps;
  config.p1_strategy = PlayGridPolicy{&policy, &grid};
  config.conjecture = conjecture ? *conjecture : stage_nash_normal_action(spec.stage);
  config.record_private = false;
  config.force_type = spec.types.normal_index();

  BatchSummary batch = run_batch(scenario, config);
  return {batch.mean_payoff, batch.ci_halfwidth, batch.ci_defined, batch.reps};
}

double perturbation_modulus(const BeliefGrid& grid, const ValueFunction& value,
                            std::span<const std::pair<Belief, Belief>> probe_pairs) {
  double modulus = 0.0;
  for (const auto& [a, b] : probe_pairs) {
    double dist = 0.0;
    for (int i = 0; i < a.size(); ++i) dist += std::abs(a[i] - b[i]);
    if (!(dist > 0.0)) continue;
    double va = grid.interpolate(value.values, a);
    double vb = grid.interpolate(value.values, b);
    modulus = std::max(modulus, std::abs(va - vb) / dist);
  }
  return modulus;
}

void export_values_csv(std::ostream& out, const BeliefGrid& grid, const ValueFunction& value) {
  int d = grid.dim();
  for (int k = 0; k < d; ++k) out << "mu" << k << ",";
  out << "value\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Belief& b = grid.point(i);
    for (int k = 0; k < d; ++k) out << b[k] << ",";
    out << value.values[i] << "\n";
  }
}

void export_policy_csv(std::ostream& out, const GameSpec& spec, const BeliefGrid& grid,
                       const MarkovPolicy& policy) {
  int d = grid.dim();
  for (int k = 0; k < d; ++k) out << "mu" << k << ",";
  for (int a = 0; a < spec.stage.num_a1(); ++a) {
    out << "p_" << spec.stage.a1_labels[static_cast<std::size_t>(a)]
        << (a + 1 < spec.stage.num_a1() ? "," : "\n");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Belief& b = grid.point(i);
    for (int k = 0; k < d; ++k) out << b[k] << ",";
    const auto& mix = policy.actions[i];
    for (int a = 0; a < spec.stage.num_a1(); ++a) {
      out << mix[static_cast<std::size_t>(a)] << (a + 1 < spec.stage.num_a1() ? "," : "\n");
    }
  }
}

}  // namespace repgame
