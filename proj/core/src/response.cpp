#include "repgame/response.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "repgame/errors.hpp"

namespace repgame {

namespace {

double expected_payoff(const Matrix& u, std::span<const double> kappa, int a2) {
  double value = 0.0;
  for (int a1 = 0; a1 < u.rows(); ++a1) {
    value += kappa[static_cast<std::size_t>(a1)] * u.at(a1, a2);
  }
  return value;
}

// Gaussian elimination with partial pivoting; false when singular.
bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
          std::abs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)])) {
        pivot = r;
      }
    }
    if (std::abs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]) < 1e-12) {
      return false;
    }
    std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(pivot)]);
    std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
    double diag = a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
    for (int r = col + 1; r < n; ++r) {
      double factor = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / diag;
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) {
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
            factor * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
      }
      b[static_cast<std::size_t>(r)] -= factor * b[static_cast<std::size_t>(col)];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < n; ++c) {
      acc -= a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] *
             b[static_cast<std::size_t>(c)];
    }
    b[static_cast<std::size_t>(r)] = acc / a[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
  }
  return true;
}

}  // namespace

std::vector<int> best_response_set(const StageGame& game, std::span<const double> kappa,
                                   double tol) {
  double best = -std::numeric_limits<double>::infinity();
  for (int a2 = 0; a2 < game.num_a2(); ++a2) {
    best = std::max(best, expected_payoff(game.u2, kappa, a2));
  }
  std::vector<int> set;
  for (int a2 = 0; a2 < game.num_a2(); ++a2) {
    if (expected_payoff(game.u2, kappa, a2) >= best - tol) set.push_back(a2);
  }
  return set;
}

int tie_break(const StageGame& game, std::span<const double> kappa,
              const std::vector<int>& candidates) {
  int chosen = candidates.front();
  double best = expected_payoff(game.u1, kappa, chosen);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    double v = expected_payoff(game.u1, kappa, candidates[i]);
    if (v > best + kBrTol) {
      best = v;
      chosen = candidates[i];
    }
  }
  return chosen;
}

int myopic_response(const StageGame& game, std::span<const double> kappa, double tol) {
  return tie_break(game, kappa, best_response_set(game, kappa, tol));
}

bool in_indifference_region(const StageGame& game, std::span<const double> kappa, double eta) {
  for (int k = 0; k < game.num_a2(); ++k) {
    for (int m = k + 1; m < game.num_a2(); ++m) {
      double gap = expected_payoff(game.u2, kappa, k) - expected_payoff(game.u2, kappa, m);
      if (std::abs(gap) <= eta) return true;
    }
  }
  return false;
}

PureStackelberg pure_stackelberg(const StageGame& game) {
  PureStackelberg best{0, -std::numeric_limits<double>::infinity()};
  std::vector<double> kappa(static_cast<std::size_t>(game.num_a1()), 0.0);
  for (int a1 = 0; a1 < game.num_a1(); ++a1) {
    std::fill(kappa.begin(), kappa.end(), 0.0);
    kappa[static_cast<std::size_t>(a1)] = 1.0;
    int reply = myopic_response(game, kappa);
    double payoff = game.u1.at(a1, reply);
    if (payoff > best.payoff) best = {a1, payoff};
  }
  return best;
}

MixedStackelberg mixed_stackelberg(const StageGame& game) {
  int d = game.num_a1();
  int num_a2 = game.num_a2();
  double feas_tol = 1e-9 * std::max(1.0, game.u2.max_abs());

  MixedStackelberg best;
  best.payoff = -std::numeric_limits<double>::infinity();

  // Constraint rows in alpha-space: first the simplex faces alpha_a = 0, then
  // the weak-dominance rows g_b(alpha) = sum_a alpha(a)(u2(a,a2)-u2(a,b)) >= 0.
  for (int a2 = 0; a2 < num_a2; ++a2) {
    std::vector<std::vector<double>> constraints;
    for (int a = 0; a < d; ++a) {
      std::vector<double> row(static_cast<std::size_t>(d), 0.0);
      row[static_cast<std::size_t>(a)] = 1.0;
      constraints.push_back(std::move(row));
    }
    for (int b = 0; b < num_a2; ++b) {
      if (b == a2) continue;
      std::vector<double> row(static_cast<std::size_t>(d), 0.0);
      for (int a = 0; a < d; ++a) {
        row[static_cast<std::size_t>(a)] = game.u2.at(a, a2) - game.u2.at(a, b);
      }
      constraints.push_back(std::move(row));
    }

    // Vertices of {alpha in simplex : all g_b >= 0}: d-1 active constraints
    // plus the affine equality sum(alpha) = 1.
    int num_constraints = static_cast<int>(constraints.size());
    std::vector<int> pick(static_cast<std::size_t>(std::max(0, d - 1)));
    auto evaluate_vertex = [&](const std::vector<int>& active) {
      std::vector<std::vector<double>> a;
      std::vector<double> rhs;
      a.push_back(std::vector<double>(static_cast<std::size_t>(d), 1.0));
      rhs.push_back(1.0);
      for (int idx : active) {
        a.push_back(constraints[static_cast<std::size_t>(idx)]);
        rhs.push_back(0.0);
      }
      if (!solve_linear(a, rhs)) return;
      for (double v : rhs) {
        if (!(v >= -feas_tol) || !(v <= 1.0 + feas_tol)) return;
      }
      for (int b = d; b < num_constraints; ++b) {
        double g = 0.0;
        for (int k = 0; k < d; ++k) {
          g += constraints[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)] *
               rhs[static_cast<std::size_t>(k)];
        }
        if (g < -feas_tol) return;
      }
      double payoff = 0.0;
      for (int k = 0; k < d; ++k) {
        payoff += std::max(0.0, rhs[static_cast<std::size_t>(k)]) * game.u1.at(k, a2);
      }
      if (payoff > best.payoff + 1e-12) {
        best.payoff = payoff;
        best.a2 = a2;
        best.alpha1.assign(rhs.begin(), rhs.end());
        for (double& v : best.alpha1) v = std::max(0.0, v);
        double sum = 0.0;
        for (double v : best.alpha1) sum += v;
        for (double& v : best.alpha1) v /= sum;
      }
    };

    // Iterate over all (d-1)-subsets of the constraints.
    std::vector<int> indices(static_cast<std::size_t>(num_constraints));
    for (int i = 0; i < num_constraints; ++i) indices[static_cast<std::size_t>(i)] = i;
    if (d == 1) {
      evaluate_vertex({});
    } else {
      std::vector<int> subset;
      std::function<void(int)> recurse = [&](int start) {
        if (static_cast<int>(subset.size()) == d - 1) {
          evaluate_vertex(subset);
          return;
        }
        for (int i = start; i < num_constraints; ++i) {
          subset.push_back(i);
          recurse(i + 1);
          subset.pop_back();
        }
      };
      recurse(0);
    }
  }
  return best;
}

double stackelberg_floor(const GameSpec& spec, int type_index) {
  if (type_index < 0 || type_index >= spec.types.num_commitment()) {
    raise(Errc::UnknownType, "commitment type index " + std::to_string(type_index));
  }
  const auto& mixed = spec.types.commitment_types[static_cast<std::size_t>(type_index)].mixed;
  auto replies = best_response_set(spec.stage, mixed);
  double floor = std::numeric_limits<double>::infinity();
  for (int a2 : replies) {
    double value = 0.0;
    for (int a1 = 0; a1 < spec.stage.num_a1(); ++a1) {
      value += mixed[static_cast<std::size_t>(a1)] * spec.stage.u1.at(a1, a2);
    }
    floor = std::min(floor, value);
  }
  return floor;
}

double stackelberg_floor(const GameSpec& spec, const std::string& type_name) {
  return stackelberg_floor(spec, spec.types.index_of(type_name));
}

}  // namespace repgame
