#include "repgame/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "repgame/errors.hpp"

namespace repgame {

double payoff_gap_epsilon(const StageGame& game) {
  double min_gap = std::numeric_limits<double>::infinity();
  for (int a1 = 0; a1 < game.num_a1(); ++a1) {
    for (int k = 0; k < game.num_a2(); ++k) {
      for (int m = k + 1; m < game.num_a2(); ++m) {
        min_gap = std::min(min_gap, std::abs(game.u2.at(a1, k) - game.u2.at(a1, m)));
      }
    }
  }
  if (!(min_gap > 0.0)) {
    raise(Errc::NoPositiveEpsilon, "some u2 row has tied entries");
  }
  double max_abs = game.u2.max_abs();
  if (max_abs == 0.0) {
    raise(Errc::NoPositiveEpsilon, "u2 is identically zero");
  }
  return min_gap / (min_gap + max_abs);
}

double likelihood_threshold(int num_types, double epsilon) {
  if (num_types < 2) raise(Errc::ParameterOutOfRange, "need at least two types");
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    raise(Errc::ParameterOutOfRange, "epsilon must lie in (0,1)");
  }
  return (1.0 - epsilon) / epsilon * num_types;
}

TauSample tau_from_trace(const GameSpec& spec, const Trace& trace, int type_index,
                         TauMethod method, double epsilon) {
  if (type_index < 0 || type_index >= spec.types.num_commitment()) {
    raise(Errc::UnknownType, "commitment type index " + std::to_string(type_index));
  }
  int horizon = static_cast<int>(trace.periods.size());
  if (horizon < 1) raise(Errc::BadArgument, "empty trace");

  TauSample sample;
  sample.horizon = horizon;
  sample.method = method;

  if (method == TauMethod::CriterionHit) {
    double f = likelihood_threshold(spec.types.total_types(), epsilon);
    for (int t = 0; t < horizon; ++t) {
      const Belief& mu = trace.belief_before(t);
      double mass_m = mu[type_index];
      bool hit = true;
      for (int w = 0; w < spec.types.total_types(); ++w) {
        if (w == type_index) continue;
        if (mass_m < f * mu[w]) {
          hit = false;
          break;
        }
      }
      if (hit) {
        sample.tau = t;
        return sample;
      }
    }
    return sample;  // censored
  }

  // BRLock: last stretch of periods whose realized response matches the
  // tie-broken best response to the type's committed action.
  const auto& mixed = spec.types.commitment_types[static_cast<std::size_t>(type_index)].mixed;
  int locked_response = myopic_response(spec.stage, mixed);
  int first_bad = -1;  // last period with a mismatching response
  for (int t = 0; t < horizon; ++t) {
    if (trace.periods[static_cast<std::size_t>(t)].a2 != locked_response) first_bad = t;
  }
  if (first_bad == horizon - 1) return sample;  // never locks within the trace
  sample.tau = first_bad + 1;
  return sample;
}

std::vector<double> survival_curve(const std::vector<TauSample>& samples) {
  int max_tau = 0;
  int n = 0;
  for (const auto& s : samples) {
    if (s.censored()) continue;
    max_tau = std::max(max_tau, *s.tau);
    ++n;
  }
  std::vector<double> survival(static_cast<std::size_t>(max_tau) + 2, 0.0);
  if (n == 0) return survival;
  for (const auto& s : samples) {
    if (s.censored()) continue;
    // tau >= k for all k <= tau.
    for (int k = 0; k <= *s.tau; ++k) survival[static_cast<std::size_t>(k)] += 1.0;
  }
  for (double& v : survival) v /= n;
  return survival;
}

TailFit estimate_tail(const std::vector<TauSample>& samples) {
  std::vector<int> taus;
  for (const auto& s : samples) {
    if (!s.censored()) taus.push_back(*s.tau);
  }
  int n = static_cast<int>(taus.size());
  if (n < 100) {
    raise(Errc::InsufficientSamples,
          "need >= 100 uncensored samples, have " + std::to_string(n));
  }

  TailFit fit;
  fit.sample_count = n;

  auto survival = survival_curve(samples);
  double cutoff = 5.0 / n;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k < survival.size(); ++k) {
    if (survival[k] >= cutoff && survival[k] > 0.0) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(std::log(survival[k]));
    }
  }
  if (xs.size() < 2) {
    // All mass at tau = 0: survival vanishes beyond k = 0.
    fit.R = 1.0;
    fit.rho = 0.0;
    fit.r_squared = 1.0;
    return fit;
  }

  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= xs.size();
  mean_y /= xs.size();
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    syy += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  double slope = sxy / sxx;
  double intercept = mean_y - slope * mean_x;
  if (!(slope < 0.0)) {
    raise(Errc::NonDecayingTail, "fitted survival slope is nonnegative");
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (intercept + slope * xs[i]);
    ss_res += r * r;
  }
  fit.R = std::exp(intercept);
  fit.rho = std::exp(slope);
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.slope_stderr =
      xs.size() > 2 ? std::sqrt(ss_res / (static_cast<double>(xs.size()) - 2.0) / sxx) : 0.0;
  return fit;
}

LowerBound lower_bound_L(const GameSpec& spec, int type_index,
                         const std::vector<double>& conjecture, int reps, std::uint64_t seed,
                         int horizon) {
  if (type_index < 0 || type_index >= spec.types.num_commitment()) {
    raise(Errc::UnknownType, "commitment type index " + std::to_string(type_index));
  }
  if (reps < 1) raise(Errc::BadArgument, "reps must be >= 1");

  double floor = stackelberg_floor(spec, type_index);
  std::optional<double> epsilon;
  try {
    epsilon = payoff_gap_epsilon(spec.stage);
  } catch (const Error& e) {
    if (e.code() != Errc::NoPositiveEpsilon) throw;
  }

  SimConfig config;
  config.seed = seed;
  config.horizon = horizon;
  config.reps = reps;
  config.p1_strategy = PlayMimic{type_index};
  config.conjecture = conjecture;
  config.record_private = false;
  config.force_type = spec.types.normal_index();  // the strategic type deviating to mimicry

  double delta = spec.delta;
  // Indexed by replication so the reduction order, and therefore every
  // reported digit, is independent of thread scheduling. Each entry holds the
  // discounted deviation stream: realized payoffs through the lock time, the
  // guaranteed floor afterwards.
  struct RepSample {
    double from_k1 = 0.0;  // the bound as displayed, summing from k = 1
    double full = 0.0;     // including period 0, the value-of-deviation form
    bool ok = false;
  };
  std::vector<RepSample> per_rep(static_cast<std::size_t>(reps));
  run_batch(spec, config, [&](const Trace& trace, int rep) {
    TauSample tau = tau_from_trace(spec, trace, type_index, TauMethod::BRLock, 0.0);
    if (tau.censored() && epsilon) {
      tau = tau_from_trace(spec, trace, type_index, TauMethod::CriterionHit, *epsilon);
    }
    if (tau.censored()) return;
    int t_lock = *tau.tau;
    double acc = 0.0;
    double weight = delta;
    for (int k = 1; k <= t_lock; ++k) {
      acc += weight * trace.periods[static_cast<std::size_t>(k)].u1;
      weight *= delta;
    }
    acc += std::pow(delta, t_lock + 1) / (1.0 - delta) * floor;
    auto& sample = per_rep[static_cast<std::size_t>(rep)];
    sample.from_k1 = acc;
    sample.full = acc + trace.periods[0].u1;
    sample.ok = true;
  });

  std::vector<double> from_k1;
  std::vector<double> full;
  from_k1.reserve(static_cast<std::size_t>(reps));
  full.reserve(static_cast<std::size_t>(reps));
  int censored = 0;
  for (const auto& s : per_rep) {
    if (s.ok) {
      from_k1.push_back(s.from_k1);
      full.push_back(s.full);
    } else {
      ++censored;
    }
  }
  double censor_rate = static_cast<double>(censored) / reps;
  if (censor_rate > 0.01) {
    raise(Errc::HorizonTooShort,
          "censoring rate " + std::to_string(censor_rate) + " at horizon " +
              std::to_string(horizon));
  }

  auto mean_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return m / static_cast<double>(v.size());
  };

  LowerBound bound;
  bound.type_index = type_index;
  bound.floor = floor;
  bound.censor_rate = censor_rate;
  bound.reps = static_cast<int>(full.size());
  // The unnormalized sum starts at k = 1, as displayed; the normalized form
  // covers the whole deviation (period 0 included) so it lower-bounds the
  // mimic value.
  bound.unnormalized = mean_of(from_k1);
  double full_mean = mean_of(full);
  bound.normalized = (1.0 - delta) * full_mean;
  if (full.size() > 1) {
    auto [lo, hi] = std::minmax_element(full.begin(), full.end());
    if (*lo < *hi) {  // identical replications have exactly zero width
      double var = 0.0;
      for (double s : full) var += (s - full_mean) * (s - full_mean);
      double se = std::sqrt(var / (full.size() - 1)) / std::sqrt(full.size());
      bound.ci_halfwidth = 1.96 * (1.0 - delta) * se;
    }
  }
  return bound;
}

LowerBound best_lower_bound(const GameSpec& spec, const std::vector<double>& conjecture,
                            int reps, std::uint64_t seed, int horizon) {
  if (spec.types.num_commitment() == 0) {
    raise(Errc::NoCommitmentTypes, "the type space has no commitment types");
  }
  LowerBound best;
  best.normalized = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < spec.types.num_commitment(); ++m) {
    LowerBound candidate = lower_bound_L(spec, m, conjecture, reps, seed, horizon);
    if (candidate.normalized > best.normalized) best = candidate;
  }
  return best;
}

double upper_bound(const GameSpec& spec) { return mixed_stackelberg(spec.stage).payoff; }

AbelianReport abelian_sweep(const std::vector<double>& stream,
                            const std::vector<double>& deltas) {
  if (stream.empty()) raise(Errc::BadArgument, "empty payoff stream");
  AbelianReport report;
  report.deltas = deltas;

  double min_v = *std::min_element(stream.begin(), stream.end());
  report.shift = min_v < 0.0 ? -min_v : 0.0;

  // Partial running averages of the (shifted) stream; shift cancels in the
  // reported quantities because every value below is an average of entries.
  std::size_t n = stream.size();
  double acc = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    acc += stream[t];
    double avg = acc / static_cast<double>(t + 1);
    lo = std::min(lo, avg);
    hi = std::max(hi, avg);
  }
  report.liminf_avg = lo;
  report.limsup_avg = hi;
  report.final_avg = acc / static_cast<double>(n);

  report.chain_ok = true;
  for (double delta : deltas) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
      raise(Errc::ParameterOutOfRange, "delta must lie in (0,1)");
    }
    // Within-horizon normalization: the weights (1-d) d^t / (1-d^T) sum to
    // one, and by Abel summation the value is a convex combination of the
    // partial averages, so the chain below cannot fail.
    double discounted = 0.0;
    double weight = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
      discounted += weight * stream[t];
      weight *= delta;
    }
    double value = (1.0 - delta) * discounted / (1.0 - std::pow(delta, static_cast<double>(n)));
    report.normalized_values.push_back(value);
    if (value < lo - 1e-9 || value > hi + 1e-9) report.chain_ok = false;
  }
  return report;
}

MimicReport verify_mimic_optimality(const GameSpec& spec, const std::vector<double>& conjecture,
                                    const std::vector<NamedStrategy>& candidates, int num_periods,
                                    int reps, std::uint64_t seed) {
  if (!rank_monitoring(spec).full_rank) {
    raise(Errc::FullRankRequired, "monitoring kernel is rank-deficient (Proposition 1 gate)");
  }
  if (spec.types.num_commitment() == 0) {
    raise(Errc::NoCommitmentTypes, "nothing to mimic");
  }

  // The Stackelberg commitment type: the one with the best guaranteed floor.
  int stackelberg_type = 0;
  double best_floor = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < spec.types.num_commitment(); ++m) {
    double floor = stackelberg_floor(spec, m);
    if (floor > best_floor) {
      best_floor = floor;
      stackelberg_type = m;
    }
  }

  auto run_average = [&](const P1Strategy& strategy) {
    SimConfig config;
    config.seed = seed;
    config.horizon = num_periods;
    config.reps = reps;
    config.p1_strategy = strategy;
    config.conjecture = conjecture;
    config.record_private = false;
    config.force_type = spec.types.normal_index();

    std::vector<double> averages(static_cast<std::size_t>(reps), 0.0);
    run_batch(spec, config, [&](const Trace& trace, int rep) {
      double acc = 0.0;
      for (const auto& rec : trace.periods) acc += rec.u1;
      averages[static_cast<std::size_t>(rep)] = acc / static_cast<double>(num_periods);
    });
    double mean = 0.0;
    for (double a : averages) mean += a;
    mean /= averages.size();
    double var = 0.0;
    for (double a : averages) var += (a - mean) * (a - mean);
    double ci = averages.size() > 1
                    ? 1.96 * std::sqrt(var / (averages.size() - 1)) / std::sqrt(averages.size())
                    : 0.0;
    return MimicReport::Entry{"", mean, ci};
  };

  MimicReport report;
  report.mimic = run_average(PlayMimic{stackelberg_type});
  report.mimic.name =
      "mimic-" + spec.types.commitment_types[static_cast<std::size_t>(stackelberg_type)].name;
  report.mimic_maximal = true;
  for (const auto& candidate : candidates) {
    MimicReport::Entry entry = run_average(candidate.strategy);
    entry.name = candidate.name;
    if (report.mimic.average < entry.average - entry.ci_halfwidth) {
      report.mimic_maximal = false;
    }
    report.candidates.push_back(std::move(entry));
  }
  return report;
}

TauCollection collect_tau_samples(const GameSpec& spec, const SimConfig& config) {
  std::optional<double> epsilon;
  try {
    epsilon = payoff_gap_epsilon(spec.stage);
  } catch (const Error& e) {
    if (e.code() != Errc::NoPositiveEpsilon) throw;
  }

  int num_commit = spec.types.num_commitment();
  TauCollection collection;
  collection.brlock.resize(static_cast<std::size_t>(num_commit));
  collection.criterion_hit.resize(static_cast<std::size_t>(epsilon ? num_commit : 0));
  for (auto& v : collection.brlock) v.resize(static_cast<std::size_t>(config.reps));
  for (auto& v : collection.criterion_hit) v.resize(static_cast<std::size_t>(config.reps));

  run_batch(spec, config, [&](const Trace& trace, int rep) {
    for (int m = 0; m < num_commit; ++m) {
      collection.brlock[static_cast<std::size_t>(m)][static_cast<std::size_t>(rep)] =
          tau_from_trace(spec, trace, m, TauMethod::BRLock, 0.0);
      if (epsilon) {
        collection.criterion_hit[static_cast<std::size_t>(m)][static_cast<std::size_t>(rep)] =
            tau_from_trace(spec, trace, m, TauMethod::CriterionHit, *epsilon);
      }
    }
  });
  return collection;
}

}  // namespace repgame
