// Command line front end: every subcommand is a thin wrapper over the
// library. Games, configs, and certificates travel as UTF-8 JSON; trajectory
// logs leave as RFC-4180 CSV with a '#'-prefixed metadata block. The worker
// count for batch runs comes from the ZSMG_WORKERS environment variable.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zsmg/zsmg.hpp"

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

nlohmann::json parse_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

zsmg::MarkovGame resolve_game(const zsmg::ExperimentConfig& cfg) {
  if (!cfg.game_file.empty()) return zsmg::game_from_json(parse_json(cfg.game_file));
  if (cfg.generator) return zsmg::generate_game(*cfg.generator);
  throw std::runtime_error("config names neither a game_file nor a generator");
}

void apply_seed_override(zsmg::ExperimentConfig& cfg, const CLI::Option* opt,
                         std::uint64_t seed) {
  if (opt->count()) cfg.seeds = {seed};
}

// `base` for a single seed, `base_seedN.csv`-style names otherwise.
std::string seed_path(const std::string& base, std::uint64_t seed, bool lone) {
  if (lone) return base;
  const auto dot = base.rfind('.');
  const std::string stem = dot == std::string::npos ? base : base.substr(0, dot);
  const std::string ext = dot == std::string::npos ? ".csv" : base.substr(dot);
  return stem + "_seed" + std::to_string(seed) + ext;
}

int cmd_generate(const zsmg::GeneratorSpec& spec, const std::string& out) {
  auto game = zsmg::generate_game(spec);
  write_text(out, zsmg::game_to_json(game).dump(2) + "\n");
  std::cerr << "generated " << game.num_states << "-state game, reward bound "
            << game.reward_bound << ", discount " << game.gamma << "\n";
  return 0;
}

int cmd_check(const std::string& game_path) {
  auto game = zsmg::game_from_json(parse_json(game_path));
  auto report = zsmg::validate(game);
  for (const auto& line : report.violations) std::cout << "violation: " << line << "\n";
  for (const auto& line : report.info) std::cout << "info: " << line << "\n";
  if (!report.valid()) return 1;

  auto universal = zsmg::check_reach_universal(game);
  auto exists = zsmg::check_reach_exists(game);
  std::cout << "universal reach: " << (universal.holds ? "holds" : "fails");
  if (universal.holds) std::cout << ", horizon " << universal.horizon;
  std::cout << "\n";
  for (auto [s, t] : universal.failing_pairs)
    std::cout << "  blocked: some action sequence keeps state " << s << " away from " << t
              << "\n";
  std::cout << "existential reach: " << (exists.holds ? "holds" : "fails");
  if (exists.holds) std::cout << ", horizon " << exists.horizon;
  std::cout << "\n";
  for (auto [s, t] : exists.failing_pairs)
    std::cout << "  blocked: no action sequence leads from state " << s << " to " << t << "\n";
  std::cout << "payoff bound D = " << game.discount_bound() << "\n";
  return 0;
}

int cmd_solve(const std::string& game_path, const std::string& out, double tol) {
  auto game = zsmg::game_from_json(parse_json(game_path));
  auto cert = zsmg::shapley_solve(game, tol);
  write_text(out, zsmg::certificate_to_json(cert).dump(2) + "\n");
  std::cerr << "solved: residual " << cert.bellman_residual << "\n";
  return 0;
}

int cmd_run(zsmg::ExperimentConfig cfg, const std::string& out, bool with_oracle) {
  auto game = resolve_game(cfg);
  std::optional<zsmg::SolutionCertificate> cert;
  if (with_oracle) cert = zsmg::shapley_solve(game);
  for (std::uint64_t seed : cfg.seeds) {
    auto result = zsmg::run_self_play(game, cfg, seed, cert ? &*cert : nullptr);
    write_text(seed_path(out, seed, cfg.seeds.size() == 1), zsmg::csv_string(result.log));
    std::cerr << "seed " << seed << ": " << result.log.rows.size() << " rows\n";
  }
  return 0;
}

int cmd_rationality(zsmg::ExperimentConfig cfg, const std::string& out) {
  auto game = resolve_game(cfg);
  if (!cfg.rationality)
    throw std::runtime_error("config carries no rationality section (learner + opponent)");
  for (std::uint64_t seed : cfg.seeds) {
    auto result = zsmg::run_rationality(game, cfg, seed);
    write_text(seed_path(out, seed, cfg.seeds.size() == 1), zsmg::csv_string(result.log));
    std::cerr << "seed " << seed << ": final values";
    for (int s = 0; s < game.num_states; ++s)
      std::cerr << " " << result.agent.value(s) << "/" << result.br_values[s];
    std::cerr << " (learned/target)\n";
  }
  return 0;
}

int cmd_batch(zsmg::ExperimentConfig cfg, const std::string& prefix) {
  auto game = resolve_game(cfg);
  auto summary = zsmg::run_batch(game, cfg);

  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    write_text(prefix + "_seed" + std::to_string(seeds[i]) + ".csv",
               zsmg::csv_string(summary.per_seed[i]));
  write_text(prefix + "_aggregate.csv", zsmg::csv_string(summary.aggregate));
  std::cerr << seeds.size() << " seeds, mean final max error " << summary.mean_final_error
            << ", asymptotic error band " << summary.error_band << "\n";
  return 0;
}

int cmd_lyapunov(int count, std::uint64_t seed, double horizon, double dt, double floor,
                 double lambda, double perturb) {
  zsmg::Rng rng(seed);
  int descending = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const int n1 = 2 + i % 3;
    const int n2 = 2 + (i / 3) % 3;
    zsmg::FlowState fs;
    fs.tau = i % 2 == 0 ? 0.05 : 0.5;
    fs.lambda = lambda;
    fs.Q1 = zsmg::Mat(n1, n2);
    for (double& v : fs.Q1.a) v = rng.uniform(-1.0, 1.0);
    fs.Q2 = zsmg::Mat(n2, n1);
    const double wobble = i < count / 2 ? 0.0 : perturb;  // first half exactly zero-sum
    for (int b = 0; b < n2; ++b)
      for (int a = 0; a < n1; ++a)
        fs.Q2(b, a) = -fs.Q1(a, b) + wobble * rng.uniform(-1.0, 1.0);
    fs.q1.resize(n1);
    fs.q2.resize(n2);
    for (double& v : fs.q1) v = rng.uniform(-1.0, 1.0);
    for (double& v : fs.q2) v = rng.uniform(-1.0, 1.0);
    auto simplex = [&](int n) {
      std::vector<double> p(n);
      double total = 0.0;
      for (double& v : p) total += (v = 0.05 + rng.uniform());
      for (double& v : p) v /= total;
      return p;
    };
    fs.pi1 = simplex(n1);
    fs.pi2 = simplex(n2);

    auto rep = zsmg::flow_descent(fs, horizon, dt, floor);
    if (rep.max_delta <= 1e-9 &&
        (rep.steps_above_floor == 0 || rep.max_delta_above_floor < 0.0))
      ++descending;
    worst = std::max(worst, rep.max_delta);
  }
  std::cout << (descending == count ? "pass" : "fail") << ": energy descends in " << descending
            << "/" << count << " instances, worst step change " << worst << "\n";
  return descending == count ? 0 : 1;
}

int cmd_export(const std::string& in, const std::string& out,
               const std::vector<std::string>& columns) {
  write_text(out, zsmg::gnuplot_columns(read_text(in), columns));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-player zero-sum Markov game learning toolkit"};
  app.require_subcommand(1);

  // generate
  zsmg::GeneratorSpec spec;
  std::string spec_path, gen_out;
  std::string reward_style = "plain", kernel_style = "full_support";
  auto* generate = app.add_subcommand("generate", "write a random game as JSON");
  generate->add_option("--spec", spec_path, "generator spec JSON (overrides the flags)");
  generate->add_option("--states", spec.num_states, "number of states");
  generate->add_option("--actions", spec.num_actions, "actions per player per state");
  generate->add_option("--gamma", spec.gamma, "discount factor in [0,1)");
  generate->add_option("--reward-bound", spec.reward_bound, "largest |reward|, hit exactly");
  generate->add_option("--reward-style", reward_style, "plain | scaled_exp");
  generate->add_option("--kernel-style", kernel_style, "full_support | existential_only");
  generate->add_option("--seed", spec.seed, "generator seed");
  generate->add_option("--out", gen_out, "output path (default stdout)");

  // check
  std::string check_game;
  auto* check = app.add_subcommand("check", "validate a game and report reachability");
  check->add_option("game", check_game, "game JSON file")->required();

  // solve
  std::string solve_game, solve_out;
  double solve_tol = 1e-10;
  auto* solve = app.add_subcommand("solve", "solve a game and write the certificate JSON");
  solve->add_option("game", solve_game, "game JSON file")->required();
  solve->add_option("--out", solve_out, "output path (default stdout)");
  solve->add_option("--tol", solve_tol, "residual tolerance");

  // run / rationality / batch share the config + seed override shape
  std::string run_cfg_path, run_out = "run.csv";
  std::uint64_t run_seed = 0;
  bool run_no_oracle = false;
  auto* run = app.add_subcommand("run", "self-play from a config JSON, CSV log per seed");
  run->add_option("config", run_cfg_path, "experiment config JSON")->required();
  run->add_option("--out", run_out, "CSV path (suffixed _seedN with several seeds)");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "override the config seed list");
  run->add_flag("--no-oracle", run_no_oracle, "skip solving; drops the error columns");

  std::string rat_cfg_path, rat_out = "rationality.csv";
  std::uint64_t rat_seed = 0;
  auto* rationality =
      app.add_subcommand("rationality", "learner against the fixed opponent from the config");
  rationality->add_option("config", rat_cfg_path, "experiment config JSON")->required();
  rationality->add_option("--out", rat_out, "CSV path (suffixed _seedN with several seeds)");
  auto* rat_seed_opt =
      rationality->add_option("--seed", rat_seed, "override the config seed list");

  std::string batch_cfg_path, batch_prefix = "batch";
  std::uint64_t batch_seed = 0;
  auto* batch = app.add_subcommand("batch", "all config seeds in parallel plus an aggregate");
  batch->add_option("config", batch_cfg_path, "experiment config JSON")->required();
  batch->add_option("--out-prefix", batch_prefix, "prefix for per-seed and aggregate CSVs");
  auto* batch_seed_opt =
      batch->add_option("--seed", batch_seed, "override the config seed list");

  // lyapunov
  int lyap_count = 100;
  std::uint64_t lyap_seed = 808;
  double lyap_horizon = 20.0, lyap_dt = 1e-3, lyap_floor = 1e-6;
  double lyap_lambda = 1.1, lyap_perturb = 0.3;
  auto* lyapunov =
      app.add_subcommand("lyapunov", "random-instance descent checks for the learning flow");
  lyapunov->add_option("--count", lyap_count, "number of instances");
  lyapunov->add_option("--seed", lyap_seed, "instance seed");
  lyapunov->add_option("--horizon", lyap_horizon, "integration horizon");
  lyapunov->add_option("--dt", lyap_dt, "integration step");
  lyapunov->add_option("--floor", lyap_floor, "strict-descent floor");
  lyapunov->add_option("--lambda", lyap_lambda, "energy weighting, must exceed 1");
  lyapunov->add_option("--perturb", lyap_perturb, "payoff perturbation for the second half");

  // export
  std::string export_in, export_out;
  std::vector<std::string> export_columns;
  auto* exp = app.add_subcommand("export", "rewrite a CSV log as gnuplot-ready columns");
  exp->add_option("log", export_in, "CSV log file")->required();
  exp->add_option("--out", export_out, "output path (default stdout)");
  exp->add_option("--columns", export_columns, "column names to keep, in order")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      if (!spec_path.empty()) {
        spec = zsmg::generator_from_json(parse_json(spec_path));
      } else {
        spec.reward_style = zsmg::reward_style_from_name(reward_style);
        spec.kernel_style = zsmg::kernel_style_from_name(kernel_style);
      }
      return cmd_generate(spec, gen_out);
    }
    if (*check) return cmd_check(check_game);
    if (*solve) return cmd_solve(solve_game, solve_out, solve_tol);
    if (*run) {
      auto cfg = zsmg::config_from_json(parse_json(run_cfg_path));
      apply_seed_override(cfg, run_seed_opt, run_seed);
      return cmd_run(std::move(cfg), run_out, !run_no_oracle);
    }
    if (*rationality) {
      auto cfg = zsmg::config_from_json(parse_json(rat_cfg_path));
      apply_seed_override(cfg, rat_seed_opt, rat_seed);
      return cmd_rationality(std::move(cfg), rat_out);
    }
    if (*batch) {
      auto cfg = zsmg::config_from_json(parse_json(batch_cfg_path));
      apply_seed_override(cfg, batch_seed_opt, batch_seed);
      return cmd_batch(std::move(cfg), batch_prefix);
    }
    if (*lyapunov)
      return cmd_lyapunov(lyap_count, lyap_seed, lyap_horizon, lyap_dt, lyap_floor,
                          lyap_lambda, lyap_perturb);
    if (*exp) return cmd_export(export_in, export_out, export_columns);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
