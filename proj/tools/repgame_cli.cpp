// repgame: solve, simulate, and bound reputation games from the command line.
//
// Subcommands: validate, solve, bounds, check, sweep. Every run writes a
// manifest.json with the full parameter set, so any output can be reproduced
// bit-for-bit by re-running the recorded command line.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "repgame/bounds.hpp"
#include "repgame/errors.hpp"
#include "repgame/game.hpp"
#include "repgame/sim.hpp"
#include "repgame/solver.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace repgame;

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;

struct SpecOptions {
  std::string spec_path;
  std::string builtin;
  double mu_commit = -1.0;  // negative = builtin default
  double p = 0.8;
  double q = 0.9;
  double r = 0.6;
  std::optional<double> delta_override;
};

struct CommonOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  double eta = 1e-9;
  int threads = 0;
};

void add_spec_flags(CLI::App* cmd, SpecOptions& opt) {
  auto* spec = cmd->add_option("--spec", opt.spec_path, "Path to a GameSpec JSON file");
  auto* builtin =
      cmd->add_option("--builtin", opt.builtin, "Built-in game: product-choice | consultant");
  spec->excludes(builtin);
  cmd->add_option("--mu-commit", opt.mu_commit, "Commitment prior for built-in games");
  cmd->add_option("--p", opt.p, "Consultant public-signal accuracy");
  cmd->add_option("--q", opt.q, "Consultant private-signal probability q");
  cmd->add_option("--r", opt.r, "Consultant private-signal probability r");
  cmd->add_option("--delta", opt.delta_override, "Discount factor override");
}

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--out", opt.out_dir, "Output directory (created if missing)");
  cmd->add_option("--seed", opt.seed, "Root seed; all randomness derives from it");
  cmd->add_option("--eta", opt.eta, "Indifference-region tolerance");
  cmd->add_option("--threads", opt.threads, "Worker threads (0 = hardware)");
}

GameSpec load_spec(const SpecOptions& opt) {
  GameSpec spec;
  if (!opt.spec_path.empty()) {
    std::ifstream in(opt.spec_path);
    if (!in) raise(Errc::BadArgument, "cannot open spec file " + opt.spec_path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    spec = spec_from_json_text(buffer.str());
    if (opt.delta_override) spec.delta = *opt.delta_override;
    return spec;
  }
  double delta = opt.delta_override.value_or(0.9);
  if (opt.builtin == "product-choice") {
    double mu = opt.mu_commit >= 0.0 ? opt.mu_commit : 0.2;
    return builtin_product_choice(mu, delta);
  }
  if (opt.builtin == "consultant") {
    double mu = opt.mu_commit >= 0.0 ? opt.mu_commit : 0.1;
    return builtin_consultant(opt.p, opt.q, opt.r, mu, delta);
  }
  raise(Errc::BadArgument, "need --spec FILE or --builtin {product-choice|consultant}");
}

json spec_manifest(const SpecOptions& opt) {
  json j;
  if (!opt.spec_path.empty()) {
    j["source"] = "file";
    j["path"] = opt.spec_path;
  } else {
    j["source"] = "builtin";
    j["name"] = opt.builtin;
    j["mu_commit"] = opt.mu_commit;
    if (opt.builtin == "consultant") {
      j["p"] = opt.p;
      j["q"] = opt.q;
      j["r"] = opt.r;
    }
  }
  if (opt.delta_override) j["delta"] = *opt.delta_override;
  return j;
}

void write_manifest(const CommonOptions& common, const std::string& command, const json& spec,
                    const json& parameters, const std::vector<std::string>& outputs) {
  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["command"] = command;
  manifest["spec"] = spec;
  manifest["parameters"] = parameters;
  manifest["seed"] = common.seed;
  manifest["eta"] = common.eta;
  manifest["out_dir"] = common.out_dir;
  manifest["outputs"] = outputs;
  fs::create_directories(common.out_dir);
  std::ofstream out(fs::path(common.out_dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  out << content;
}

// Ensure a spec is usable before running numerics on it.
void require_valid(const GameSpec& spec) {
  auto violations = validate(spec);
  if (!violations.empty()) {
    std::string detail;
    for (const auto& v : violations) detail += v.code + " ";
    throw Error(Errc::InvalidSpec, detail);
  }
}

int map_error(const Error& e) {
  switch (e.code()) {
    case Errc::BadArgument:
    case Errc::ParameterOutOfRange:
    case Errc::QROrderViolated:
      return kExitUsage;
    case Errc::IterationLimitExceeded:
      return kExitNoConvergence;
    default:
      return kExitDomain;
  }
}

// ---------------------------------------------------------------------------

int cmd_validate(const SpecOptions& spec_opt, const CommonOptions& common) {
  GameSpec spec = load_spec(spec_opt);
  auto violations = validate(spec);
  json report = json::array();
  for (const auto& v : violations) {
    report.push_back({{"code", v.code}, {"detail", v.detail}});
    std::cout << v.code << ": " << v.detail << "\n";
  }
  write_manifest(common, "validate", spec_manifest(spec_opt), json::object(), {});
  if (violations.empty()) {
    std::cout << "spec is valid\n";
    return kExitOk;
  }
  return kExitDomain;
}

int cmd_solve(const SpecOptions& spec_opt, const CommonOptions& common, int grid_res, double tol,
              int mixture_res) {
  if (!(tol > 0.0)) raise(Errc::BadArgument, "--tol must be positive");
  if (grid_res < 1) raise(Errc::BadArgument, "--grid must be >= 1");
  GameSpec spec = load_spec(spec_opt);
  require_valid(spec);

  BeliefGrid grid(spec.types.total_types(), grid_res);
  SolveOptions options;
  options.eta = common.eta;
  options.threads = common.threads;
  options.mixture_resolution = mixture_res;
  SolveResult result = value_iteration(spec, grid, tol, options);

  for (std::size_t i = 0; i < result.residual_history.size(); ++i) {
    if (i % 50 == 0 || i + 1 == result.residual_history.size()) {
      std::cout << "iter " << i + 1 << " residual " << result.residual_history[i] << "\n";
    }
  }
  double v0 = (1.0 - spec.delta) * grid.interpolate(result.value.values, Belief{spec.mu0});
  std::cout << "normalized value at mu0: " << v0 << "\n";
  std::cout << "indifference-region grid points (eta " << common.eta
            << "): " << result.indifference_points << "\n";

  fs::create_directories(common.out_dir);
  {
    std::ofstream out(fs::path(common.out_dir) / "values.csv");
    export_values_csv(out, grid, result.value);
  }
  {
    std::ofstream out(fs::path(common.out_dir) / "policy.csv");
    export_policy_csv(out, spec, grid, result.policy);
  }
  json params{{"grid", grid_res}, {"tol", tol}, {"mixtures", mixture_res},
              {"threads", common.threads}};
  write_manifest(common, "solve", spec_manifest(spec_opt), params,
                 {"values.csv", "policy.csv"});
  return kExitOk;
}

int cmd_bounds(const SpecOptions& spec_opt, const CommonOptions& common, int reps, int horizon,
               std::vector<double> deltas) {
  GameSpec spec = load_spec(spec_opt);
  require_valid(spec);
  if (spec.types.num_commitment() == 0) {
    raise(Errc::NoCommitmentTypes, "bounds need at least one commitment type");
  }
  if (deltas.empty()) deltas = {0.9, 0.99, 0.999};

  json out;
  std::optional<double> epsilon;
  try {
    epsilon = payoff_gap_epsilon(spec.stage);
    out["epsilon"] = *epsilon;
    out["f_M"] = likelihood_threshold(spec.types.total_types(), *epsilon);
  } catch (const Error& e) {
    if (e.code() != Errc::NoPositiveEpsilon) throw;
    out["epsilon"] = nullptr;
    out["f_M"] = nullptr;
    out["epsilon_error"] = "NoPositiveEpsilon";
  }
  out["upper_bound"] = upper_bound(spec);

  std::vector<double> conjecture = stage_nash_normal_action(spec.stage);
  out["conjecture"] = conjecture;

  std::ostringstream tail_csv;
  tail_csv << "type,k,survival\n";
  out["per_type"] = json::object();
  int best_type = -1;
  double best_l = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < spec.types.num_commitment(); ++m) {
    const std::string& name = spec.types.commitment_types[static_cast<std::size_t>(m)].name;
    json entry;
    LowerBound bound = lower_bound_L(spec, m, conjecture, reps, common.seed, horizon);
    entry["L_normalized"] = bound.normalized;
    entry["L_unnormalized"] = bound.unnormalized;
    entry["CI"] = bound.ci_halfwidth;
    entry["floor"] = bound.floor;
    entry["censor_rate"] = bound.censor_rate;
    if (bound.normalized > best_l) {
      best_l = bound.normalized;
      best_type = m;
    }

    SimConfig config;
    config.seed = common.seed;
    config.horizon = horizon;
    config.reps = reps;
    config.p1_strategy = PlayMimic{m};
    config.conjecture = conjecture;
    config.record_private = false;
    config.force_type = spec.types.normal_index();
    config.eta = common.eta;
    config.threads = common.threads;
    TauCollection taus = collect_tau_samples(spec, config);
    const auto& brlock = taus.brlock[static_cast<std::size_t>(m)];
    auto survival = survival_curve(brlock);
    for (std::size_t k = 0; k < survival.size(); ++k) {
      tail_csv << name << "," << k << "," << survival[k] << "\n";
    }
    try {
      TailFit fit = estimate_tail(brlock);
      entry["tail"] = {{"R", fit.R},
                       {"rho", fit.rho},
                       {"r2", fit.r_squared},
                       {"slope_stderr", fit.slope_stderr},
                       {"samples", fit.sample_count}};
    } catch (const Error& e) {
      entry["tail"] = nullptr;
      entry["tail_error"] = errc_name(e.code());
    }
    out["per_type"][name] = std::move(entry);
  }

  // Abelian chain on the mean payoff stream of mimicking the best type.
  {
    SimConfig config;
    config.seed = common.seed;
    config.horizon = horizon;
    config.reps = std::min(reps, 200);
    config.p1_strategy = PlayMimic{best_type};
    config.conjecture = conjecture;
    config.record_private = false;
    config.force_type = spec.types.normal_index();
    config.threads = common.threads;
    std::vector<double> stream(static_cast<std::size_t>(horizon), 0.0);
    run_batch(spec, config, [&](const Trace& trace, int) {
      for (std::size_t t = 0; t < trace.periods.size(); ++t) stream[t] += trace.periods[t].u1;
    });
    for (double& v : stream) v /= config.reps;
    AbelianReport abelian = abelian_sweep(stream, deltas);
    out["abelian_table"] = {{"stream", "mimic-" +
                                           spec.types.commitment_types
                                               [static_cast<std::size_t>(best_type)]
                                                   .name},
                            {"deltas", abelian.deltas},
                            {"normalized_values", abelian.normalized_values},
                            {"liminf_avg", abelian.liminf_avg},
                            {"limsup_avg", abelian.limsup_avg},
                            {"final_avg", abelian.final_avg},
                            {"chain_ok", abelian.chain_ok}};
  }
  out["best_type"] = spec.types.commitment_types[static_cast<std::size_t>(best_type)].name;

  fs::create_directories(common.out_dir);
  write_file(fs::path(common.out_dir) / "bounds.json", out.dump(2) + "\n");
  write_file(fs::path(common.out_dir) / "tail.csv", tail_csv.str());
  std::cout << out.dump(2) << "\n";

  json params{{"reps", reps}, {"horizon", horizon}, {"deltas", deltas},
              {"threads", common.threads}};
  write_manifest(common, "bounds", spec_manifest(spec_opt), params, {"bounds.json", "tail.csv"});
  return kExitOk;
}

int cmd_check(const SpecOptions& spec_opt, const CommonOptions& common, int reps, int horizon) {
  GameSpec spec = load_spec(spec_opt);
  require_valid(spec);

  json out;
  RankReport rank = rank_monitoring(spec);
  out["rank"] = rank.rank;
  out["full_rank"] = rank.full_rank;
  try {
    out["epsilon_gap"] = payoff_gap_epsilon(spec.stage);
  } catch (const Error& e) {
    if (e.code() != Errc::NoPositiveEpsilon) throw;
    out["epsilon_gap"] = nullptr;
    out["epsilon_error"] = "NoPositiveEpsilon";
  }

  SimConfig config;
  config.seed = common.seed;
  config.horizon = horizon;
  config.reps = reps;
  config.conjecture = stage_nash_normal_action(spec.stage);
  if (spec.types.num_commitment() > 0) {
    config.p1_strategy = PlayMimic{0};
  } else {
    config.p1_strategy = PlayFixedMixed{config.conjecture};
  }
  config.record_private = false;
  config.eta = common.eta;
  config.threads = common.threads;
  BatchSummary batch = run_batch(spec, config);
  out["indifference"] = {{"eta", common.eta},
                         {"visit_rate", batch.indifference_rate},
                         {"off_path_rate", batch.off_path_rate},
                         {"reps", reps},
                         {"horizon", horizon}};

  std::cout << out.dump(2) << "\n";
  json params{{"reps", reps}, {"horizon", horizon}};
  write_manifest(common, "check", spec_manifest(spec_opt), params, {});
  return kExitOk;
}

int cmd_sweep(const SpecOptions& spec_opt, const CommonOptions& common,
              const std::vector<double>& deltas, int grid_res, double tol, int reps,
              int horizon) {
  if (deltas.empty()) raise(Errc::BadArgument, "--deltas must be nonempty");
  if (!(tol > 0.0)) raise(Errc::BadArgument, "--tol must be positive");
  GameSpec base = load_spec(spec_opt);
  require_valid(base);

  double upper = upper_bound(base);
  std::vector<double> conjecture = stage_nash_normal_action(base.stage);

  std::ostringstream csv;
  csv << "delta,V_normalized,L,upper\n";
  for (double delta : deltas) {
    GameSpec spec = base;
    spec.delta = delta;
    require_valid(spec);

    BeliefGrid grid(spec.types.total_types(), grid_res);
    SolveOptions options;
    options.eta = common.eta;
    options.threads = common.threads;
    SolveResult solved = value_iteration(spec, grid, tol, options);
    double v0 = (1.0 - delta) * grid.interpolate(solved.value.values, Belief{spec.mu0});

    LowerBound bound = best_lower_bound(spec, conjecture, reps, common.seed, horizon);
    csv << delta << "," << v0 << "," << bound.normalized << "," << upper << "\n";
  }

  fs::create_directories(common.out_dir);
  write_file(fs::path(common.out_dir) / "sweep.csv", csv.str());
  std::cout << csv.str();

  json params{{"deltas", deltas}, {"grid", grid_res},      {"tol", tol},
              {"reps", reps},     {"horizon", horizon},    {"threads", common.threads}};
  write_manifest(common, "sweep", spec_manifest(spec_opt), params, {"sweep.csv"});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reputation-game engine: belief-state dynamic programming, simulation, and payoff bounds"};
  app.require_subcommand(1);

  SpecOptions spec_opt;
  CommonOptions common;

  auto* validate_cmd = app.add_subcommand("validate", "Check a game spec against its invariants");
  add_spec_flags(validate_cmd, spec_opt);
  add_common_flags(validate_cmd, common);

  int grid_res = 100;
  double tol = 1e-6;
  int mixture_res = 0;
  auto* solve_cmd = app.add_subcommand("solve", "Value iteration on the belief grid");
  add_spec_flags(solve_cmd, spec_opt);
  add_common_flags(solve_cmd, common);
  solve_cmd->add_option("--grid", grid_res, "Grid resolution (points per simplex edge)");
  solve_cmd->add_option("--tol", tol, "Fixed-point tolerance in sup norm");
  solve_cmd->add_option("--mixtures", mixture_res, "Randomization menu denominator (0 = pure)");

  int reps = 2000;
  int horizon = 400;
  std::vector<double> deltas;
  auto* bounds_cmd = app.add_subcommand("bounds", "Reputation payoff bounds and tail fits");
  add_spec_flags(bounds_cmd, spec_opt);
  add_common_flags(bounds_cmd, common);
  bounds_cmd->add_option("--reps", reps, "Replications per estimate");
  bounds_cmd->add_option("--horizon", horizon, "Simulation horizon");
  bounds_cmd->add_option("--deltas", deltas, "Discount factors for the Abelian table");

  auto* check_cmd = app.add_subcommand("check", "Identifiability and indifference diagnostics (read-only)");
  add_spec_flags(check_cmd, spec_opt);
  add_common_flags(check_cmd, common);
  check_cmd->add_option("--reps", reps, "Probe batch replications");
  check_cmd->add_option("--horizon", horizon, "Probe batch horizon");

  auto* sweep_cmd = app.add_subcommand("sweep", "Solve + bounds across discount factors");
  add_spec_flags(sweep_cmd, spec_opt);
  add_common_flags(sweep_cmd, common);
  sweep_cmd->add_option("--deltas", deltas, "Discount factors to sweep")->required();
  sweep_cmd->add_option("--grid", grid_res, "Grid resolution");
  sweep_cmd->add_option("--tol", tol, "Fixed-point tolerance");
  sweep_cmd->add_option("--reps", reps, "Replications for the lower bound");
  sweep_cmd->add_option("--horizon", horizon, "Simulation horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(spec_opt, common);
    if (solve_cmd->parsed()) return cmd_solve(spec_opt, common, grid_res, tol, mixture_res);
    if (bounds_cmd->parsed()) return cmd_bounds(spec_opt, common, reps, horizon, deltas);
    if (check_cmd->parsed()) return cmd_check(spec_opt, common, reps, horizon);
    if (sweep_cmd->parsed()) {
      return cmd_sweep(spec_opt, common, deltas, grid_res, tol, reps, horizon);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return map_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
