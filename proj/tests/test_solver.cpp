#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "repgame/errors.hpp"
#include "repgame/rng.hpp"
#include "repgame/solver.hpp"

using namespace repgame;

namespace {

MarkovPolicy constant_policy(const BeliefGrid& grid, std::vector<double> mixed) {
  MarkovPolicy policy;
  policy.actions.assign(grid.size(), std::move(mixed));
  return policy;
}

}  // namespace

TEST_CASE("default conjecture is the stage-Nash action of the normal type") {
  auto pc = stage_nash_normal_action(builtin_product_choice(0.2, 0.9).stage);
  CHECK(pc == std::vector<double>{0.0, 1.0});
  auto cons = stage_nash_normal_action(builtin_consultant(0.8, 0.9, 0.6, 0.1, 0.9).stage);
  CHECK(cons == std::vector<double>{0.0, 1.0});
}

TEST_CASE("bellman_operator single backups") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);
  BeliefGrid grid(2, 10);
  ValueFunction zero;
  zero.values.assign(grid.size(), 0.0);

  SUBCASE("one-shot value at the normal vertex is the stage Nash payoff") {
    ValueFunction v1 = bellman_operator(zero, spec, grid);
    CHECK(v1.values[grid.vertex_index(1)] == doctest::Approx(1.0));
  }

  SUBCASE("one-shot value at the commitment vertex replies to kappa = H") {
    // Player 2 plays h there; the best one-shot reward is u1(L,h) = 3.
    ValueFunction v1 = bellman_operator(zero, spec, grid);
    CHECK(v1.values[grid.vertex_index(0)] == doctest::Approx(3.0));
  }

  SUBCASE("constant shift moves through the discount factor") {
    ValueFunction v1 = bellman_operator(zero, spec, grid);
    ValueFunction shifted = zero;
    for (double& v : shifted.values) v = 4.0;
    ValueFunction v2 = bellman_operator(shifted, spec, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(v2.values[i] == doctest::Approx(v1.values[i] + spec.delta * 4.0).epsilon(1e-9));
    }
  }

  SUBCASE("monotonicity") {
    Rng rng(41);
    ValueFunction low;
    low.values.resize(grid.size());
    for (double& v : low.values) v = -1.0 + 2.0 * rng.next_unit();
    ValueFunction high = low;
    for (double& v : high.values) v += rng.next_unit();
    ValueFunction t_low = bellman_operator(low, spec, grid);
    ValueFunction t_high = bellman_operator(high, spec, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(t_low.values[i] <= t_high.values[i] + 1e-12);
    }
  }
}

TEST_CASE("value_iteration on product choice") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);
  BeliefGrid grid(2, 100);
  SolveResult result = value_iteration(spec, grid, 1e-6);

  SUBCASE("complete-information vertex: stage Nash value and policy L") {
    std::size_t nv = grid.vertex_index(1);
    CHECK((1.0 - spec.delta) * result.value.values[nv] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(result.policy.actions[nv] == std::vector<double>{0.0, 1.0});
  }

  SUBCASE("values stay under the discounted payoff bound") {
    double cap = spec.stage.u1.max_abs() / (1.0 - spec.delta) + 1e-6;
    for (double v : result.value.values) CHECK(std::abs(v) <= cap);
  }

  SUBCASE("per-iteration contraction") {
    for (std::size_t k = 0; k + 1 < result.residual_history.size(); ++k) {
      CHECK(result.residual_history[k + 1] <=
            spec.delta * result.residual_history[k] + 1e-12);
    }
  }

  SUBCASE("residual meets the stopping rule") {
    CHECK(result.value.residual <= 1e-6 * (1.0 - spec.delta) / (2.0 * spec.delta));
  }
}

TEST_CASE("value_iteration mixed prior lands between pooling and Stackelberg") {
  GameSpec spec = builtin_product_choice(0.5, 0.9);
  BeliefGrid grid(2, 200);
  SolveResult result = value_iteration(spec, grid, 1e-6);
  double v = (1.0 - spec.delta) * grid.interpolate(result.value.values, Belief{{0.5, 0.5}});
  CHECK(v >= 2.0 - 1e-6);
  CHECK(v <= 2.5 + 1e-6);
}

TEST_CASE("constant payoffs solve to the constant") {
  GameSpec spec = builtin_product_choice(0.3, 0.9);
  spec.stage.u1 = Matrix(2, 2, {1.5, 1.5, 1.5, 1.5});
  BeliefGrid grid(2, 20);
  SolveResult result = value_iteration(spec, grid, 1e-8);
  for (double v : result.value.values) {
    CHECK((1.0 - spec.delta) * v == doctest::Approx(1.5).epsilon(1e-7));
  }
}

TEST_CASE("iteration cap raises IterationLimitExceeded") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);
  BeliefGrid grid(2, 4);
  SolveOptions options;
  options.max_iterations = 3;
  CHECK_THROWS_AS(value_iteration(spec, grid, 1e-12, options), Error);
}

TEST_CASE("backward induction") {
  GameSpec spec = builtin_product_choice(0.4, 0.9);
  BeliefGrid grid(2, 50);

  SUBCASE("T = 1 is the myopic stage value") {
    HorizonSolution sol = backward_induction(spec, grid, 1);
    // At mu(commit) = 0.4 the response is l; the best one-shot reward is 1.
    std::size_t idx = grid.index_of({20, 30});
    CHECK(sol.values[0].values[idx] == doctest::Approx(1.0));
  }

  SUBCASE("horizon 2 dominates horizon 1 under nonnegative payoffs") {
    HorizonSolution t1 = backward_induction(spec, grid, 1);
    HorizonSolution t2 = backward_induction(spec, grid, 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(t2.values[0].values[i] >= t1.values[0].values[i] - 1e-12);
    }
  }

  SUBCASE("long horizons approach the stationary fixed point") {
    int horizon = 120;
    HorizonSolution finite = backward_induction(spec, grid, horizon);
    SolveResult infinite = value_iteration(spec, grid, 1e-8);
    double bound = 2.0 * spec.stage.u1.max_abs() * std::pow(spec.delta, horizon) /
                   (1.0 - spec.delta);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(std::abs(finite.values[0].values[i] - infinite.value.values[i]) <= bound + 1e-6);
    }
  }
}

TEST_CASE("evaluate_policy") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);
  BeliefGrid grid(2, 10);

  SUBCASE("mimicking H against a conjectured L pays 2 delta exactly") {
    MarkovPolicy mimic = constant_policy(grid, {1.0, 0.0});
    PolicyValue value = evaluate_policy(spec, grid, mimic, Belief{{0.2, 0.8}}, 8, 1,
                                        std::vector<double>{0.0, 1.0});
    CHECK(value.mean == doctest::Approx(2.0 * spec.delta).epsilon(1e-9));
    CHECK(value.ci_halfwidth == doctest::Approx(0.0));
  }

  SUBCASE("always L from the normal vertex repeats the stage Nash") {
    MarkovPolicy nash = constant_policy(grid, {0.0, 1.0});
    PolicyValue value = evaluate_policy(spec, grid, nash, Belief{{0.0, 1.0}}, 4, 1,
                                        std::vector<double>{0.0, 1.0});
    CHECK(value.mean == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("constant payoffs evaluate to the constant") {
    GameSpec flat = spec;
    flat.stage.u1 = Matrix(2, 2, {2.25, 2.25, 2.25, 2.25});
    MarkovPolicy any = constant_policy(grid, {0.5, 0.5});
    PolicyValue value = evaluate_policy(flat, grid, any, Belief{{0.2, 0.8}}, 4, 7);
    CHECK(value.mean == doctest::Approx(2.25).epsilon(1e-9));
  }
}

TEST_CASE("optimal value dominates every mimic deviation at high patience") {
  for (GameSpec spec : {builtin_product_choice(0.1, 0.99),
                        builtin_consultant(0.8, 0.9, 0.6, 0.1, 0.99)}) {
    BeliefGrid grid(2, 100);
    SolveResult solved = value_iteration(spec, grid, 1e-6);
    double v0 = (1.0 - spec.delta) * grid.interpolate(solved.value.values, Belief{spec.mu0});
    MarkovPolicy mimic = constant_policy(grid, spec.types.commitment_types[0].mixed);
    PolicyValue mimic_value = evaluate_policy(spec, grid, mimic, Belief{spec.mu0}, 64, 3);
    CHECK(v0 >= mimic_value.mean - mimic_value.ci_halfwidth - 0.02);
    CHECK(v0 <= mixed_stackelberg(spec.stage).payoff + 0.02);
  }
}

TEST_CASE("three-type solve: values stay sandwiched and policies valid") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);
  spec.types.commitment_types.push_back({"always-L", {0.0, 1.0}});
  spec.mu0 = {0.15, 0.1, 0.75};
  REQUIRE(validate(spec).empty());
  BeliefGrid grid(3, 30);
  SolveResult result = value_iteration(spec, grid, 1e-6);
  double cap = spec.stage.u1.max_abs() / (1.0 - spec.delta) + 1e-6;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(result.value.values[i]) <= cap);
    double sum = 0.0;
    for (double p : result.policy.actions[i]) sum += p;
    CHECK(sum == doctest::Approx(1.0));
  }
  // The all-normal vertex still solves to the stage Nash value.
  std::size_t nv = grid.vertex_index(spec.types.normal_index());
  CHECK((1.0 - spec.delta) * result.value.values[nv] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mixture menu cannot beat pure candidates in this backup") {
  GameSpec spec = builtin_consultant(0.8, 0.9, 0.6, 0.1, 0.9);
  BeliefGrid grid(2, 40);
  SolveResult pure = value_iteration(spec, grid, 1e-8);
  SolveOptions with_mixtures;
  with_mixtures.mixture_resolution = 4;
  SolveResult mixed = value_iteration(spec, grid, 1e-8, with_mixtures);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(mixed.value.values[i] == doctest::Approx(pure.value.values[i]).epsilon(1e-7));
  }
}

TEST_CASE("grid consistency: r vs 2r differences shrink like 1/r") {
  GameSpec spec = builtin_consultant(0.8, 0.9, 0.6, 0.1, 0.9);
  auto sup_diff_on_coarse = [&](int r) {
    BeliefGrid coarse(2, r);
    BeliefGrid fine(2, 2 * r);
    SolveResult vc = value_iteration(spec, coarse, 1e-7);
    SolveResult vf = value_iteration(spec, fine, 1e-7);
    double worst = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      double diff =
          std::abs(vc.value.values[i] - fine.interpolate(vf.value.values, coarse.point(i)));
      worst = std::max(worst, diff);
    }
    return worst;
  };
  double c1 = sup_diff_on_coarse(25) * 25;
  double c2 = sup_diff_on_coarse(50) * 50;
  CHECK(c2 <= 2.5 * c1 + 1e-6);
}

TEST_CASE("perturbation_modulus of identical pairs is zero") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);
  BeliefGrid grid(2, 20);
  SolveResult solved = value_iteration(spec, grid, 1e-6);
  std::vector<std::pair<Belief, Belief>> pairs{{Belief{{0.3, 0.7}}, Belief{{0.3, 0.7}}}};
  CHECK(perturbation_modulus(grid, solved.value, pairs) == 0.0);
}

TEST_CASE("csv exports carry one row per grid point") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);
  BeliefGrid grid(2, 5);
  SolveResult solved = value_iteration(spec, grid, 1e-6);
  std::ostringstream values;
  export_values_csv(values, grid, solved.value);
  std::ostringstream policy;
  export_policy_csv(policy, spec, grid, solved.policy);
  auto count_lines = [](const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  };
  CHECK(count_lines(values.str()) == grid.size() + 1);
  CHECK(count_lines(policy.str()) == grid.size() + 1);
  CHECK(policy.str().substr(0, 14) == "mu0,mu1,p_H,p_");
}
