#include "repgame/sim.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>

#include <json.hpp>

#include "repgame/errors.hpp"
#include "repgame/parallel.hpp"
#include "repgame/rng.hpp"

namespace repgame {

namespace {

std::vector<double> normal_mixture(const GameSpec& spec, const SimConfig& config,
                                   const Belief& belief) {
  if (const auto* grid_policy = std::get_if<PlayGridPolicy>(&config.p1_strategy)) {
    // Barycentric blend of the grid policy's mixtures: a convex combination
    // of probability vectors, so still a valid mixture.
    auto support = grid_policy->grid->locate(belief);
    std::vector<double> mixed(static_cast<std::size_t>(spec.stage.num_a1()), 0.0);
    for (std::size_t k = 0; k < support.indices.size(); ++k) {
      const auto& pa = grid_policy->policy->actions[support.indices[k]];
      for (std::size_t a = 0; a < mixed.size(); ++a) {
        mixed[a] += support.weights[k] * pa[a];
      }
    }
    return mixed;
  }
  if (const auto* mimic = std::get_if<PlayMimic>(&config.p1_strategy)) {
    return spec.types.commitment_types[static_cast<std::size_t>(mimic->type_index)].mixed;
  }
  return std::get<PlayFixedMixed>(config.p1_strategy).mixed;
}

}  // namespace

double Trace::discounted_normalized_u1(double delta) const {
  double sum = 0.0;
  double weight = 1.0;
  for (const auto& rec : periods) {
    sum += weight * rec.u1;
    weight *= delta;
  }
  return (1.0 - delta) * sum;
}

Trace run_episode(const GameSpec& spec, const SimConfig& config, int rep_index) {
  if (config.horizon < 1) raise(Errc::BadArgument, "horizon must be >= 1");
  Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(rep_index));
  ActionRule conjecture_rule{config.conjecture};

  Trace trace;
  trace.initial_belief.w = spec.mu0;
  trace.omega = config.force_type ? *config.force_type
                                  : rng.sample({spec.mu0.data(), spec.mu0.size()});
  trace.periods.reserve(static_cast<std::size_t>(config.horizon));

  Belief belief = trace.initial_belief;
  bool normal = trace.omega == spec.types.normal_index();

  for (int t = 0; t < config.horizon; ++t) {
    PeriodRecord rec;

    // Player 1 moves first.
    std::vector<double> own_mixture;
    if (normal) {
      own_mixture = normal_mixture(spec, config, belief);
    } else {
      own_mixture = spec.types.commitment_types[static_cast<std::size_t>(trace.omega)].mixed;
    }
    rec.a1 = rng.sample({own_mixture.data(), own_mixture.size()});

    // Public signal of the current action.
    rec.z2 = rng.sample(spec.monitoring.rho2.row(rec.a1));

    // Player 2 best-responds to the forecast carried by the current belief
    // state (the posterior after all signals observed so far).
    auto kappa = predicted_action_dist(spec, belief, conjecture_rule);
    if (in_indifference_region(spec.stage, kappa, config.eta)) {
      ++trace.indifference_visits;
    }
    rec.a2 = myopic_response(spec.stage, kappa);

    // Private signal of the realized action profile. Always drawn so the
    // random stream, and with it the public path, does not depend on whether
    // the signal is stored.
    int pair_row = rec.a1 * spec.stage.num_a2() + rec.a2;
    int z1 = rng.sample(spec.monitoring.rho1.row(pair_row));
    rec.z1 = config.record_private ? z1 : -1;

    rec.u1 = spec.stage.u1.at(rec.a1, rec.a2);
    rec.u2 = spec.stage.u2.at(rec.a1, rec.a2);

    // Public Bayes step under the batch conjecture; an off-path signal leaves
    // the belief unchanged and is logged.
    try {
      belief = belief_update(spec, belief, conjecture_rule, rec.z2);
    } catch (const Error& e) {
      if (e.code() != Errc::ZeroProbabilitySignal) throw;
      ++trace.off_path_events;
    }
    rec.belief = belief;
    trace.periods.push_back(std::move(rec));
  }
  return trace;
}

BatchSummary run_batch(const GameSpec& spec, const SimConfig& config,
                       const std::function<void(const Trace&, int)>& observer) {
  if (config.reps < 1) raise(Errc::BadArgument, "reps must be >= 1");
  int num_types = spec.types.total_types();

  struct PerRep {
    double payoff = 0.0;
    double off_path = 0.0;
    double indifference = 0.0;
    std::vector<double> final_belief;
    std::vector<double> increment_sum;  // per type coordinate
    int increments = 0;
  };
  std::vector<PerRep> rows(static_cast<std::size_t>(config.reps));
  std::mutex observer_mutex;

  parallel_for(static_cast<std::size_t>(config.reps), config.threads, [&](std::size_t r) {
    Trace trace = run_episode(spec, config, static_cast<int>(r));
    PerRep row;
    row.payoff = trace.discounted_normalized_u1(spec.delta);
    row.off_path = static_cast<double>(trace.off_path_events) / config.horizon;
    row.indifference = static_cast<double>(trace.indifference_visits) / config.horizon;
    row.final_belief = trace.periods.back().belief.w;
    row.increment_sum.assign(static_cast<std::size_t>(num_types), 0.0);
    const Belief* prev = &trace.initial_belief;
    for (const auto& rec : trace.periods) {
      for (int w = 0; w < num_types; ++w) {
        row.increment_sum[static_cast<std::size_t>(w)] += rec.belief[w] - (*prev)[w];
      }
      prev = &rec.belief;
      ++row.increments;
    }
    rows[r] = std::move(row);
    if (observer) {
      std::lock_guard<std::mutex> lock(observer_mutex);
      observer(trace, static_cast<int>(r));
    }
  });

  BatchSummary summary;
  summary.reps = config.reps;
  summary.mean_final_belief.assign(static_cast<std::size_t>(num_types), 0.0);
  summary.mean_increment.assign(static_cast<std::size_t>(num_types), 0.0);
  summary.increment_stderr.assign(static_cast<std::size_t>(num_types), 0.0);

  double mean = 0.0;
  double lo = rows.front().payoff;
  double hi = rows.front().payoff;
  for (const auto& row : rows) {
    mean += row.payoff;
    lo = std::min(lo, row.payoff);
    hi = std::max(hi, row.payoff);
  }
  mean /= config.reps;
  double var = 0.0;
  if (lo < hi) {  // identical replications have exactly zero spread
    for (const auto& row : rows) var += (row.payoff - mean) * (row.payoff - mean);
  }

  summary.mean_payoff = mean;
  if (config.reps > 1) {
    double stderr_mean = std::sqrt(var / (config.reps - 1)) / std::sqrt(config.reps);
    summary.ci_halfwidth = 1.96 * stderr_mean;
    summary.ci_defined = true;
  } else {
    summary.ci_halfwidth = std::numeric_limits<double>::infinity();
    summary.ci_defined = false;
  }

  for (const auto& row : rows) {
    summary.off_path_rate += row.off_path;
    summary.indifference_rate += row.indifference;
    for (int w = 0; w < num_types; ++w) {
      summary.mean_final_belief[static_cast<std::size_t>(w)] +=
          row.final_belief[static_cast<std::size_t>(w)];
    }
  }
  summary.off_path_rate /= config.reps;
  summary.indifference_rate /= config.reps;
  for (double& v : summary.mean_final_belief) v /= config.reps;

  // Per-coordinate mean and stderr of the average one-step increment.
  for (int w = 0; w < num_types; ++w) {
    std::size_t wi = static_cast<std::size_t>(w);
    double m = 0.0;
    for (const auto& row : rows) m += row.increment_sum[wi] / row.increments;
    m /= config.reps;
    double s = 0.0;
    for (const auto& row : rows) {
      double x = row.increment_sum[wi] / row.increments;
      s += (x - m) * (x - m);
    }
    summary.mean_increment[wi] = m;
    summary.increment_stderr[wi] =
        config.reps > 1 ? std::sqrt(s / (config.reps - 1)) / std::sqrt(config.reps)
                        : std::numeric_limits<double>::infinity();
  }
  return summary;
}

std::string batch_summary_json(const BatchSummary& summary, int indent) {
  nlohmann::json j;
  j["mean_payoff"] = summary.mean_payoff;
  j["ci_halfwidth"] = summary.ci_defined ? nlohmann::json(summary.ci_halfwidth)
                                         : nlohmann::json(nullptr);
  j["ci_defined"] = summary.ci_defined;
  j["reps"] = summary.reps;
  j["off_path_rate"] = summary.off_path_rate;
  j["indifference_rate"] = summary.indifference_rate;
  j["mean_final_belief"] = summary.mean_final_belief;
  j["mean_increment"] = summary.mean_increment;
  j["increment_stderr"] = summary.increment_stderr;
  return j.dump(indent);
}

void export_trace_csv(std::ostream& out, const GameSpec& spec, const Trace& trace) {
  out << "t,a1,a2,z1,z2";
  for (int w = 0; w < spec.types.total_types(); ++w) out << ",mu" << w;
  out << ",u1,u2\n";
  for (std::size_t t = 0; t < trace.periods.size(); ++t) {
    const auto& rec = trace.periods[t];
    out << t << "," << spec.stage.a1_labels[static_cast<std::size_t>(rec.a1)] << ","
        << spec.stage.a2_labels[static_cast<std::size_t>(rec.a2)] << ",";
    if (rec.z1 >= 0) out << spec.monitoring.z1_labels[static_cast<std::size_t>(rec.z1)];
    out << "," << spec.monitoring.z2_labels[static_cast<std::size_t>(rec.z2)];
    for (int w = 0; w < spec.types.total_types(); ++w) out << "," << rec.belief[w];
    out << "," << rec.u1 << "," << rec.u2 << "\n";
  }
}

}  // namespace repgame
