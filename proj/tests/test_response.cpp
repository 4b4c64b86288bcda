#include <doctest.h>

#include <algorithm>
#include <limits>
#include <vector>

#include "repgame/errors.hpp"
#include "repgame/response.hpp"

using namespace repgame;

namespace {

StageGame product_choice_stage() { return builtin_product_choice(0.2, 0.9).stage; }
StageGame consultant_stage() { return builtin_consultant(0.8, 0.9, 0.6, 0.1, 0.9).stage; }

StageGame constant_u1_game(double c) {
  StageGame g = product_choice_stage();
  g.u1 = Matrix(2, 2, {c, c, c, c});
  return g;
}

// Grid-search oracle for the mixed Stackelberg value of a 2-action game:
// scan alpha at step 1e-4 with the favorable tie-broken reply.
double mixed_stackelberg_grid_oracle(const StageGame& game) {
  double best = -1e300;
  for (int i = 0; i <= 10000; ++i) {
    double alpha = i / 10000.0;
    std::vector<double> kappa{alpha, 1.0 - alpha};
    int reply = myopic_response(game, kappa);
    double payoff = alpha * game.u1.at(0, reply) + (1.0 - alpha) * game.u1.at(1, reply);
    best = std::max(best, payoff);
  }
  return best;
}

}  // namespace

TEST_CASE("best_response_set on product choice") {
  StageGame g = product_choice_stage();
  CHECK(best_response_set(g, std::vector<double>{0.6, 0.4}) == std::vector<int>{0});
  CHECK(best_response_set(g, std::vector<double>{0.5, 0.5}) == std::vector<int>{0, 1});
  CHECK(best_response_set(g, std::vector<double>{0.0, 1.0}) == std::vector<int>{1});
}

TEST_CASE("best_response_set is invariant to affine changes of u2") {
  StageGame g = consultant_stage();
  StageGame shifted = g;
  for (double& v : shifted.u2.data()) v = 3.0 * v + 7.0;
  for (double a : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    std::vector<double> kappa{a, 1.0 - a};
    CHECK(best_response_set(g, kappa) == best_response_set(shifted, kappa));
  }
}

TEST_CASE("tie_break") {
  StageGame g = product_choice_stage();

  SUBCASE("indifference point resolves for Player 1") {
    std::vector<double> kappa{0.5, 0.5};
    // Expected u1: 2.5 under h, 0.5 under l.
    CHECK(tie_break(g, kappa, {0, 1}) == 0);
  }

  SUBCASE("singleton passes through") {
    CHECK(tie_break(g, std::vector<double>{0.0, 1.0}, {1}) == 1);
  }

  SUBCASE("constant u1 falls back to lowest index") {
    StageGame flat = constant_u1_game(4.0);
    CHECK(tie_break(flat, std::vector<double>{0.5, 0.5}, {0, 1}) == 0);
  }
}

TEST_CASE("tie-broken response is total and deterministic") {
  StageGame g = product_choice_stage();
  for (int i = 0; i <= 100; ++i) {
    double a = i / 100.0;
    std::vector<double> kappa{a, 1.0 - a};
    int first = myopic_response(g, kappa);
    int second = myopic_response(g, kappa);
    CHECK(first == second);
  }
}

TEST_CASE("in_indifference_region") {
  StageGame g = product_choice_stage();
  CHECK(in_indifference_region(g, std::vector<double>{0.5, 0.5}, 1e-9));
  CHECK_FALSE(in_indifference_region(g, std::vector<double>{0.6, 0.4}, 1e-9));
  CHECK(in_indifference_region(g, std::vector<double>{0.6, 0.4},
                               std::numeric_limits<double>::infinity()));
}

TEST_CASE("pure_stackelberg") {
  CHECK(pure_stackelberg(product_choice_stage()).a1 == 0);
  CHECK(pure_stackelberg(product_choice_stage()).payoff == doctest::Approx(2.0));
  CHECK(pure_stackelberg(consultant_stage()).a1 == 0);
  CHECK(pure_stackelberg(consultant_stage()).payoff == doctest::Approx(1.0));
  CHECK(pure_stackelberg(constant_u1_game(3.5)).payoff == doctest::Approx(3.5));
}

TEST_CASE("mixed_stackelberg") {
  SUBCASE("product choice mixes at the indifference point") {
    auto result = mixed_stackelberg(product_choice_stage());
    CHECK(result.payoff == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(result.alpha1[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(result.a2 == 0);
  }

  SUBCASE("consultant") {
    auto result = mixed_stackelberg(consultant_stage());
    CHECK(result.payoff == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(result.alpha1[0] == doctest::Approx(0.5).epsilon(1e-9));
  }

  SUBCASE("constant u1") {
    CHECK(mixed_stackelberg(constant_u1_game(-2.0)).payoff == doctest::Approx(-2.0));
  }

  SUBCASE("agrees with the 1e-4 grid oracle within 1e-3") {
    for (const StageGame& g : {product_choice_stage(), consultant_stage()}) {
      CHECK(mixed_stackelberg(g).payoff ==
            doctest::Approx(mixed_stackelberg_grid_oracle(g)).epsilon(1e-3));
    }
  }

  SUBCASE("mixed dominates pure") {
    for (const StageGame& g : {product_choice_stage(), consultant_stage(),
                               constant_u1_game(1.0)}) {
      CHECK(mixed_stackelberg(g).payoff >= pure_stackelberg(g).payoff - 1e-12);
    }
  }
}

TEST_CASE("stackelberg_floor") {
  GameSpec spec = builtin_product_choice(0.2, 0.9);

  SUBCASE("always-H earns 2 against its unique reply") {
    CHECK(stackelberg_floor(spec, "always-H") == doctest::Approx(2.0));
  }

  SUBCASE("a hypothetical always-L type earns the stage Nash payoff") {
    GameSpec two = spec;
    two.types.commitment_types.push_back({"always-L", {0.0, 1.0}});
    two.mu0 = {0.1, 0.1, 0.8};
    CHECK(stackelberg_floor(two, "always-L") == doctest::Approx(1.0));
  }

  SUBCASE("indifference-point type takes the min over both replies") {
    GameSpec mixed = spec;
    mixed.types.commitment_types.push_back({"coin", {0.5, 0.5}});
    mixed.mu0 = {0.1, 0.1, 0.8};
    // BR set is {h, l}; u1 against h is 2.5, against l is 0.5.
    CHECK(stackelberg_floor(mixed, "coin") == doctest::Approx(0.5));
  }

  SUBCASE("unknown type throws") {
    CHECK_THROWS_AS(stackelberg_floor(spec, "nope"), Error);
  }
}
