#pragma once

#include <string>
#include <vector>

#include "repgame/types.hpp"

namespace repgame {

// Simultaneous payoff tables of the stage game. Rows index Player 1 actions,
// columns index Player 2 actions, everywhere in this library.
struct StageGame {
  std::vector<std::string> a1_labels;
  std::vector<std::string> a2_labels;
  Matrix u1;
  Matrix u2;

  int num_a1() const { return static_cast<int>(a1_labels.size()); }
  int num_a2() const { return static_cast<int>(a2_labels.size()); }
};

// A commitment type mechanically plays `mixed` (over A1) every period.
struct CommitmentType {
  std::string name;
  std::vector<double> mixed;
};

// Type space: the listed commitment types plus the strategic (normal) type.
// The normal type always exists and occupies the last index, so a belief
// vector is (commitments..., normal).
struct TypeSpace {
  std::vector<CommitmentType> commitment_types;

  int num_commitment() const { return static_cast<int>(commitment_types.size()); }
  int total_types() const { return num_commitment() + 1; }  // M
  int normal_index() const { return num_commitment(); }

  // Index of a commitment type by name; throws UnknownType.
  int index_of(const std::string& name) const;
};

// Signal kernels. rho2 is |A1| x |Z2| (public signal given P1's action);
// rho1 is (|A1|*|A2|) x |Z1| with row index a1 * |A2| + a2.
struct Monitoring {
  Matrix rho2;
  Matrix rho1;
  std::vector<std::string> z1_labels;
  std::vector<std::string> z2_labels;

  int num_z1() const { return static_cast<int>(z1_labels.size()); }
  int num_z2() const { return static_cast<int>(z2_labels.size()); }
};

struct GameSpec {
  StageGame stage;
  TypeSpace types;
  Monitoring monitoring;
  std::vector<double> mu0;  // prior over types, full support
  double delta = 0.0;       // discount factor in (0,1)
};

// One invariant violation. `code` is stable and machine-readable.
struct Violation {
  std::string code;
  std::string detail;
};

// Total check of every GameSpec invariant; never throws on finite input.
// An empty result means the spec is valid.
std::vector<Violation> validate(const GameSpec& spec);

// The product-choice game: A1={H,L}, A2={h,l}, one "always-H" commitment
// type, perfect public monitoring (identity kernel) so that one observed H
// reproduces the belief-doubling arithmetic exactly.
GameSpec builtin_product_choice(double mu_commit, double delta);

// The consultant game: noisy public signal with accuracy p, private bonus
// signal with probabilities q > r > 1/2, one "always-H" commitment type.
GameSpec builtin_consultant(double p, double q, double r, double mu_commit, double delta);

struct RankReport {
  int rank = 0;
  bool full_rank = false;
};

// Rank of the |Z2| x |A1| matrix with entries rho2(z|a), via singular values
// at relative tolerance 1e-10. full_rank means actions are statistically
// identified from public signals.
RankReport rank_monitoring(const GameSpec& spec);

// JSON (de)serialization of the single CLI ingestion schema:
// {a1, a2, z1, z2, u1, u2, commitment_types:[{name, mixed}], rho1, rho2,
//  mu0, delta}, matrices row-major.
GameSpec spec_from_json_text(const std::string& text);
std::string spec_to_json_text(const GameSpec& spec, int indent = 2);

}  // namespace repgame
