#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "repgame/game.hpp"

using namespace repgame;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  fs::create_directories(dir);
  fs::path out_file = dir / "stdout.txt";
  std::string command = std::string(REPGAME_CLI_PATH) + " " + args + " > " +
                        out_file.string() + " 2>" + (dir / "stderr.txt").string();
  int raw = std::system(command.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(raw);
  std::ifstream in(out_file);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  result.stdout_text = buffer.str();
  return result;
}

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "repgame_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("cli validate exit codes") {
  fs::path dir = temp_dir("validate");

  SUBCASE("valid spec file exits 0") {
    fs::path spec_path = dir / "ok.json";
    std::ofstream(spec_path) << spec_to_json_text(builtin_product_choice(0.2, 0.9));
    auto result = run_cli("validate --spec " + spec_path.string() + " --out " + dir.string(), dir);
    CHECK(result.exit_code == 0);
    CHECK(fs::exists(dir / "manifest.json"));
  }

  SUBCASE("violated invariant exits 1 and names the code") {
    GameSpec bad = builtin_product_choice(0.2, 0.9);
    bad.mu0 = {0.0, 1.0};
    fs::path spec_path = dir / "bad.json";
    std::ofstream(spec_path) << spec_to_json_text(bad);
    auto result = run_cli("validate --spec " + spec_path.string() + " --out " + dir.string(), dir);
    CHECK(result.exit_code == 1);
    CHECK(result.stdout_text.find("PriorNotFullSupport") != std::string::npos);
  }

  SUBCASE("malformed json exits 2") {
    fs::path spec_path = dir / "broken.json";
    std::ofstream(spec_path) << "{oops";
    auto result = run_cli("validate --spec " + spec_path.string() + " --out " + dir.string(), dir);
    CHECK(result.exit_code == 2);
  }
}

TEST_CASE("cli solve writes values, policy, and manifest") {
  fs::path dir = temp_dir("solve");
  auto result = run_cli("solve --builtin product-choice --grid 100 --tol 1e-6 --out " +
                            dir.string(),
                        dir);
  REQUIRE(result.exit_code == 0);
  CHECK(fs::exists(dir / "values.csv"));
  CHECK(fs::exists(dir / "policy.csv"));
  CHECK(fs::exists(dir / "manifest.json"));

  // The complete-information vertex row (mu = (0,1)) carries the stage Nash value.
  std::istringstream values(slurp(dir / "values.csv"));
  std::string line;
  std::getline(values, line);  // header
  bool found = false;
  while (std::getline(values, line)) {
    if (line.rfind("0,1,", 0) == 0) {
      double v = std::stod(line.substr(4));
      CHECK((1.0 - 0.9) * v == doctest::Approx(1.0).epsilon(1e-5));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("cli solve rejects a nonpositive tolerance") {
  fs::path dir = temp_dir("solve_badtol");
  auto result = run_cli("solve --builtin product-choice --tol 0 --out " + dir.string(), dir);
  CHECK(result.exit_code == 2);
}

TEST_CASE("cli solve on an invalid spec is a domain violation") {
  fs::path dir = temp_dir("solve_invalid");
  GameSpec bad = builtin_product_choice(0.2, 0.9);
  bad.mu0 = {0.0, 1.0};
  fs::path spec_path = dir / "bad.json";
  std::ofstream(spec_path) << spec_to_json_text(bad);
  auto result = run_cli("solve --spec " + spec_path.string() + " --out " + dir.string(), dir);
  CHECK(result.exit_code == 1);
}

TEST_CASE("cli bounds on the built-in fixtures") {
  fs::path dir = temp_dir("bounds_pc");
  auto result = run_cli(
      "bounds --builtin product-choice --reps 64 --horizon 200 --seed 0 --out " + dir.string(),
      dir);
  REQUIRE(result.exit_code == 0);
  json out = json::parse(slurp(dir / "bounds.json"));
  CHECK(out["epsilon"].get<double>() == doctest::Approx(0.25));
  CHECK(out["f_M"].get<double>() == doctest::Approx(6.0));
  CHECK(out["upper_bound"].get<double>() == doctest::Approx(2.5));
  CHECK(out["per_type"]["always-H"]["L_normalized"].get<double>() == doctest::Approx(1.8));
  CHECK(fs::exists(dir / "tail.csv"));
  CHECK(out["abelian_table"]["chain_ok"].get<bool>());

  fs::path dir2 = temp_dir("bounds_consultant");
  auto result2 = run_cli(
      "bounds --builtin consultant --reps 400 --horizon 300 --seed 0 --out " + dir2.string(),
      dir2);
  REQUIRE(result2.exit_code == 0);
  json out2 = json::parse(slurp(dir2 / "bounds.json"));
  CHECK(out2["epsilon"].get<double>() == doctest::Approx(0.5));
  CHECK(out2["f_M"].get<double>() == doctest::Approx(2.0));
  double rho = out2["per_type"]["always-H"]["tail"]["rho"].get<double>();
  CHECK(rho > 0.0);
  CHECK(rho < 1.0);
}

TEST_CASE("cli bounds keeps going when epsilon does not exist") {
  GameSpec tied = builtin_product_choice(0.2, 0.9);
  tied.stage.u2 = Matrix(2, 2, {1, 1, 0, 2});
  fs::path dir = temp_dir("bounds_tied");
  fs::path spec_path = dir / "tied.json";
  std::ofstream(spec_path) << spec_to_json_text(tied);
  auto result = run_cli(
      "bounds --spec " + spec_path.string() + " --reps 16 --horizon 50 --out " + dir.string(),
      dir);
  REQUIRE(result.exit_code == 0);
  json out = json::parse(slurp(dir / "bounds.json"));
  CHECK(out["epsilon"].is_null());
  CHECK(out["epsilon_error"].get<std::string>() == "NoPositiveEpsilon");
  CHECK(out.contains("upper_bound"));
  CHECK(out["per_type"].contains("always-H"));
}

TEST_CASE("cli check reports rank and indifference diagnostics") {
  fs::path dir = temp_dir("check");
  auto result = run_cli("check --builtin product-choice --reps 32 --horizon 50 --out " +
                            dir.string(),
                        dir);
  REQUIRE(result.exit_code == 0);
  json out = json::parse(result.stdout_text);
  CHECK(out["full_rank"].get<bool>());
  CHECK(out["epsilon_gap"].get<double>() == doctest::Approx(0.25));
  CHECK(out["indifference"]["visit_rate"].get<double>() == doctest::Approx(0.0));

  GameSpec flat = builtin_consultant(0.8, 0.9, 0.6, 0.1, 0.9);
  flat.monitoring.rho2 = Matrix(2, 2, {0.5, 0.5, 0.5, 0.5});
  fs::path spec_path = dir / "flat.json";
  std::ofstream(spec_path) << spec_to_json_text(flat);
  auto result2 = run_cli("check --spec " + spec_path.string() + " --reps 8 --horizon 20 --out " +
                             dir.string(),
                         dir);
  REQUIRE(result2.exit_code == 0);
  json out2 = json::parse(result2.stdout_text);
  CHECK_FALSE(out2["full_rank"].get<bool>());
}

TEST_CASE("cli sweep traces the L column and the sandwich") {
  fs::path dir = temp_dir("sweep");
  auto result = run_cli(
      "sweep --builtin product-choice --deltas 0.9 0.99 0.999 --grid 50 --reps 16 "
      "--horizon 100 --out " + dir.string(),
      dir);
  REQUIRE(result.exit_code == 0);
  std::istringstream csv(slurp(dir / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "delta,V_normalized,L,upper");
  std::vector<double> expected_l{1.8, 1.98, 1.998};
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string field;
    std::getline(fields, field, ',');
    double delta = std::stod(field);
    std::getline(fields, field, ',');
    double v = std::stod(field);
    std::getline(fields, field, ',');
    double l = std::stod(field);
    std::getline(fields, field, ',');
    double upper = std::stod(field);
    CHECK(delta == doctest::Approx(expected_l[row] / 2.0));
    CHECK(l == doctest::Approx(expected_l[row]).epsilon(1e-9));
    CHECK(v >= l - 1e-6);
    CHECK(v <= upper + 1e-6);
    CHECK(upper == doctest::Approx(2.5));
    ++row;
  }
  CHECK(row == 3);
}

TEST_CASE("cli solve exits 3 when value iteration cannot converge") {
  fs::path dir = temp_dir("solve_noconv");
  // At delta this close to 1 the contraction needs ~3e7 sweeps, far past the
  // 100000-iteration cap.
  auto result = run_cli(
      "solve --builtin product-choice --delta 0.999999 --grid 4 --out " + dir.string(), dir);
  CHECK(result.exit_code == 3);
}

TEST_CASE("cli sweep requires deltas") {
  fs::path dir = temp_dir("sweep_empty");
  auto result = run_cli("sweep --builtin product-choice --out " + dir.string(), dir);
  CHECK(result.exit_code == 2);
}

TEST_CASE("the shipped example spec validates and solves") {
  fs::path dir = temp_dir("example_spec");
  fs::path spec_path = fs::path(REPGAME_SOURCE_DIR) / "docs" / "two-commitment-types.json";
  REQUIRE(fs::exists(spec_path));
  auto result = run_cli("validate --spec " + spec_path.string() + " --out " + dir.string(), dir);
  CHECK(result.exit_code == 0);
  auto solve = run_cli(
      "solve --spec " + spec_path.string() + " --grid 20 --out " + dir.string(), dir);
  CHECK(solve.exit_code == 0);
  CHECK(fs::exists(dir / "values.csv"));
}

TEST_CASE("re-running the manifested command reproduces outputs bit for bit") {
  fs::path dir1 = temp_dir("repro1");
  fs::path dir2 = temp_dir("repro2");
  std::string args =
      "bounds --builtin consultant --reps 64 --horizon 120 --seed 7";
  auto r1 = run_cli(args + " --out " + dir1.string(), dir1);
  auto r2 = run_cli(args + " --out " + dir2.string(), dir2);
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(dir1 / "bounds.json") == slurp(dir2 / "bounds.json"));
  CHECK(slurp(dir1 / "tail.csv") == slurp(dir2 / "tail.csv"));
}
