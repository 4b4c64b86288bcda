#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "repgame/solver.hpp"

namespace repgame {

// What the normal type plays. Commitment types always play their committed
// mixture regardless of this choice.
struct PlayGridPolicy {
  const MarkovPolicy* policy = nullptr;
  const BeliefGrid* grid = nullptr;
};
struct PlayMimic {
  int type_index = 0;
};
struct PlayFixedMixed {
  std::vector<double> mixed;
};
using P1Strategy = std::variant<PlayGridPolicy, PlayMimic, PlayFixedMixed>;

struct SimConfig {
  std::uint64_t seed = 0;
  int horizon = 1;
  int reps = 1;
  P1Strategy p1_strategy = PlayFixedMixed{};
  // Player 2s are Bayes-myopic against this model of the normal type's play,
  // fixed for the whole batch.
  std::vector<double> conjecture;
  bool record_private = true;
  // Condition the type draw (e.g. the normal type for policy evaluation);
  // unset draws omega from the prior.
  std::optional<int> force_type;
  double eta = 1e-9;
  int threads = 0;  // 0 = hardware concurrency
};

struct PeriodRecord {
  int a1 = 0;
  int a2 = 0;
  int z1 = -1;  // -1 when private recording is off
  int z2 = 0;
  double u1 = 0.0;
  double u2 = 0.0;
  Belief belief;  // post-update public belief
};

// One play path. The belief path satisfies the public Bayes recursion under
// the batch conjecture; off-path signals leave the belief unchanged and are
// counted.
struct Trace {
  int omega = 0;
  Belief initial_belief;
  std::vector<PeriodRecord> periods;
  int off_path_events = 0;
  int indifference_visits = 0;

  // Belief Player 2 of period t acts on (initial belief for t = 0).
  const Belief& belief_before(int t) const {
    return t == 0 ? initial_belief : periods[static_cast<std::size_t>(t) - 1].belief;
  }

  // (1-delta) * sum_t delta^t u1_t over the recorded horizon.
  double discounted_normalized_u1(double delta) const;
};

// Fully deterministic given (config.seed, rep_index).
Trace run_episode(const GameSpec& spec, const SimConfig& config, int rep_index);

struct BatchSummary {
  double mean_payoff = 0.0;  // normalized discounted u1, averaged over reps
  double ci_halfwidth = 0.0;
  bool ci_defined = true;
  int reps = 0;
  double off_path_rate = 0.0;        // events per period
  double indifference_rate = 0.0;    // eta-proximity visits per period
  std::vector<double> mean_final_belief;
  // Mean and stderr of the one-step belief increment, per type coordinate
  // (the empirical martingale check).
  std::vector<double> mean_increment;
  std::vector<double> increment_stderr;
};

// Aggregate run_episode over config.reps replications. Episodes run in
// parallel; per-replication substreams and indexed merging keep every output
// independent of thread count. The observer, when given, sees every trace
// (called from worker threads; it must be thread-safe or threads set to 1).
BatchSummary run_batch(const GameSpec& spec, const SimConfig& config,
                       const std::function<void(const Trace&, int)>& observer = {});

// Trace export: one row per period.
void export_trace_csv(std::ostream& out, const GameSpec& spec, const Trace& trace);

// Batch summary as a JSON document.
std::string batch_summary_json(const BatchSummary& summary, int indent = 2);

}  // namespace repgame
