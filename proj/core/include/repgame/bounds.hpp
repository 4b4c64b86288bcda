#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repgame/sim.hpp"

namespace repgame {

// Largest epsilon in (0,1) with |u2(a1,k) - u2(a1,m)| >= eps/(1-eps) max|u2|
// for every a1 and distinct k, m: eps = g / (g + max|u2|) with g the smallest
// pairwise gap. Throws NoPositiveEpsilon when some row has tied entries.
double payoff_gap_epsilon(const StageGame& game);

// f(M) = (1 - eps)/eps * M, the likelihood-ratio threshold certifying that
// Player 2 best-responds to the mimicked type.
double likelihood_threshold(int num_types, double epsilon);

enum class TauMethod { CriterionHit, BRLock };

struct TauSample {
  std::optional<int> tau;  // empty = censored at `horizon`
  int horizon = 0;
  TauMethod method = TauMethod::BRLock;

  bool censored() const { return !tau.has_value(); }
};

// CriterionHit: first t with mu_t(m) >= f(M) * mu_t(w) for every other type w
// (the likelihood-ratio certificate; beliefs are the ones Player 2 of period
// t acts on). BRLock: first t from which Player 2's realized response equals the
// tie-broken best response to m's action through the end of the trace.
TauSample tau_from_trace(const GameSpec& spec, const Trace& trace, int type_index,
                         TauMethod method, double epsilon);

struct TailFit {
  double R = 0.0;
  double rho = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  int sample_count = 0;
};

// Least-squares fit of log empirical survival against k, over the range where
// survival >= 5/n. Throws InsufficientSamples (< 100 uncensored) and
// NonDecayingTail (slope >= 0). All samples at zero degenerate to rho = 0.
TailFit estimate_tail(const std::vector<TauSample>& samples);

struct LowerBound {
  int type_index = 0;
  double normalized = 0.0;    // (1-delta) * unnormalized
  double unnormalized = 0.0;  // the sum as displayed in the bound, from k = 1
  double ci_halfwidth = 0.0;  // on the normalized value
  double floor = 0.0;         // min best-response payoff of the mimicked type
  double censor_rate = 0.0;
  int reps = 0;
};

// Monte Carlo estimate of the reputation lower bound for mimicking type m:
// E[sum_{k=1..tau} delta^k u1_k] + E[delta^(tau+1)]/(1-delta) * floor(m),
// with BRLock tau and the CriterionHit certificate as censoring fallback.
// Throws HorizonTooShort when more than 1% of replications stay censored.
LowerBound lower_bound_L(const GameSpec& spec, int type_index,
                         const std::vector<double>& conjecture, int reps, std::uint64_t seed,
                         int horizon = 400);

// max over commitment types; throws NoCommitmentTypes on an empty type set.
LowerBound best_lower_bound(const GameSpec& spec, const std::vector<double>& conjecture,
                            int reps, std::uint64_t seed, int horizon = 400);

// The mixed-Stackelberg stage payoff: the patient-limit upper bound on the
// normal type's normalized equilibrium values.
double upper_bound(const GameSpec& spec);

struct AbelianReport {
  std::vector<double> deltas;
  std::vector<double> normalized_values;  // within-horizon normalized
  double liminf_avg = 0.0;                // min over N of partial averages
  double limsup_avg = 0.0;                // max over N of partial averages
  double final_avg = 0.0;                 // full-stream running average
  double shift = 0.0;                     // uniform shift applied for nonnegativity
  bool chain_ok = false;
};

// Discrete Abelian chain on a finite payoff stream: every within-horizon
// normalized discounted value is a convex combination of the partial running
// averages, so min over N <= value <= max over N. Values are reported on the
// original (unshifted) scale.
AbelianReport abelian_sweep(const std::vector<double>& stream, const std::vector<double>& deltas);

struct NamedStrategy {
  std::string name;
  P1Strategy strategy;
};

struct MimicReport {
  struct Entry {
    std::string name;
    double average = 0.0;       // N-period running average payoff, mean over reps
    double ci_halfwidth = 0.0;
  };
  Entry mimic;
  std::vector<Entry> candidates;
  bool mimic_maximal = false;  // mimic >= every candidate minus its CI width
};

// Falsification protocol for the undiscounted optimality of mimicking the
// Stackelberg commitment type: requires the full-rank monitoring gate
// (FullRankRequired otherwise), then compares N-period running averages.
MimicReport verify_mimic_optimality(const GameSpec& spec, const std::vector<double>& conjecture,
                                    const std::vector<NamedStrategy>& candidates, int num_periods,
                                    int reps, std::uint64_t seed);

// Tau samples per commitment type collected from a mimicry batch (both
// methods), the input to estimate_tail and the tail CSV export.
struct TauCollection {
  std::vector<std::vector<TauSample>> brlock;        // [commitment type][rep]
  std::vector<std::vector<TauSample>> criterion_hit; // empty when no epsilon exists
};
TauCollection collect_tau_samples(const GameSpec& spec, const SimConfig& config);

// Empirical survival curve P(tau >= k) of the uncensored samples.
std::vector<double> survival_curve(const std::vector<TauSample>& samples);

}  // namespace repgame
