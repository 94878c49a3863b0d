#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zsmg/diagnostics.hpp"
#include "zsmg/game.hpp"
#include "zsmg/learner.hpp"
#include "zsmg/oracle.hpp"
#include "zsmg/rng.hpp"
#include "zsmg/schedules.hpp"

namespace zsmg {

// ---------------------------------------------------------------------------
// Random game generation

enum class RewardStyle {
  kPlain,      // i.i.d. uniform rewards, rescaled to hit the bound exactly
  kScaledExp,  // same, but state s is weighted by exp(s^2) before rescaling
};

enum class KernelStyle {
  kFullSupport,      // every transition probability at least 1e-3
  kExistentialOnly,  // sparse rows with a guaranteed cycle and a blocking self-loop
};

struct GeneratorSpec {
  int num_states = 2;
  int num_actions = 2;
  double gamma = 0.5;
  double reward_bound = 1.0;
  RewardStyle reward_style = RewardStyle::kPlain;
  KernelStyle kernel_style = KernelStyle::kFullSupport;
  std::uint64_t seed = 1;
};

namespace detail {

inline void scale_rewards(std::vector<Mat>& rewards, const std::vector<double>& log_weight,
                          double bound) {
  // normalize in log space: the largest weighted magnitude maps to the bound
  // exactly, everything else decays by exp of a nonpositive exponent
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < rewards.size(); ++s)
    for (double v : rewards[s].a)
      top = std::max(top, std::log(std::fabs(v)) + log_weight[s]);
  for (std::size_t s = 0; s < rewards.size(); ++s)
    for (double& v : rewards[s].a) {
      double mag = std::exp(std::log(std::fabs(v)) + log_weight[s] - top);
      v = (v < 0.0 ? -mag : mag) * bound;
    }
}

inline void fill_full_support_row(Mat& k, int row, int n, Rng& rng) {
  const double floor = 1e-3;
  std::vector<double> u(n);
  double total = 0.0;
  for (double& x : u) total += (x = 0.05 + rng.uniform());
  double rest = 1.0 - floor * n;
  double sum = 0.0;
  for (int t = 0; t < n - 1; ++t) {
    k(row, t) = floor + rest * u[t] / total;
    sum += k(row, t);
  }
  k(row, n - 1) = 1.0 - sum;
}

inline void fill_sparse_row(Mat& k, int row, int n, Rng& rng) {
  int support = 1 + rng.uniform_int(std::min(2, n));
  std::vector<double> mass(n, 0.0);
  double total = 0.0;
  for (int i = 0; i < support; ++i) {
    int t = rng.uniform_int(n);
    double m = 0.05 + rng.uniform();
    mass[t] += m;
    total += m;
  }
  for (int t = 0; t < n; ++t) k(row, t) = mass[t] / total;
}

}  // namespace detail

inline MarkovGame generate_game(const GeneratorSpec& spec) {
  if (spec.num_states < 1) throw std::invalid_argument("generate_game: need at least one state");
  if (spec.num_actions < 1)
    throw std::invalid_argument("generate_game: need at least one action");
  if (!(spec.gamma >= 0.0 && spec.gamma < 1.0))
    throw std::invalid_argument("generate_game: discount must lie in [0, 1)");
  if (!(spec.reward_bound > 0.0))
    throw std::invalid_argument("generate_game: reward bound must be positive");
  if (spec.kernel_style == KernelStyle::kExistentialOnly &&
      (spec.num_states < 2 || spec.num_actions < 2))
    throw std::invalid_argument(
        "generate_game: sparse reachability kernels need at least two states and actions");
  if (spec.kernel_style == KernelStyle::kFullSupport && spec.num_states * 1e-3 >= 0.5)
    throw std::invalid_argument("generate_game: too many states for the full-support floor");

  const int n = spec.num_states;
  const int m = spec.num_actions;
  Rng rng(spec.seed);

  MarkovGame g;
  g.num_states = n;
  g.actions1.assign(n, m);
  g.actions2.assign(n, m);
  g.gamma = spec.gamma;
  g.reward_bound = spec.reward_bound;

  std::vector<double> log_weight(n, 0.0);
  if (spec.reward_style == RewardStyle::kScaledExp)
    for (int s = 0; s < n; ++s) log_weight[s] = static_cast<double>(s) * s;
  for (int s = 0; s < n; ++s) {
    Mat r(m, m);
    for (double& v : r.a) v = rng.uniform(-1.0, 1.0);
    g.reward1.push_back(std::move(r));
  }
  detail::scale_rewards(g.reward1, log_weight, spec.reward_bound);

  for (int s = 0; s < n; ++s) {
    Mat k(m * m, n, 0.0);
    for (int row = 0; row < m * m; ++row) {
      if (spec.kernel_style == KernelStyle::kFullSupport) {
        detail::fill_full_support_row(k, row, n, rng);
      } else if (row == 0) {
        // joint action (0,0) advances along a cycle, so every ordered pair is
        // connected under some action sequence
        k(row, (s + 1) % n) = 1.0;
      } else if (s == 0 && row == m * m - 1) {
        // a pure self-loop at state 0: the constant action sequence that picks
        // it never leaves, so universal reachability must fail
        k(row, 0) = 1.0;
      } else {
        detail::fill_sparse_row(k, row, n, rng);
      }
    }
    g.kernel.push_back(std::move(k));
  }

  auto report = validate(g);
  if (!report.valid())
    throw std::runtime_error("generate_game: produced an invalid game: " + report.notes());
  return g;
}

// ---------------------------------------------------------------------------
// Experiment configuration

enum class RunMode { kSelfPlay, kRationality };

struct RationalitySetup {
  int learner = 1;
  std::vector<std::vector<double>> opponent;  // per-state strategy of the fixed seat
};

struct ExperimentConfig {
  std::optional<GeneratorSpec> generator;
  std::string game_file;
  ScheduleConfig schedule;
  long long num_stages = 1000000;
  long long log_every = 1000;
  std::vector<std::uint64_t> seeds = {1};
  RunMode mode = RunMode::kSelfPlay;
  std::optional<RationalitySetup> rationality;
  bool log_exploitability = false;
  double lambda_report = 1.01;
};

inline std::string reward_style_name(RewardStyle s) {
  return s == RewardStyle::kPlain ? "plain" : "scaled_exp";
}

inline RewardStyle reward_style_from_name(const std::string& name) {
  if (name == "plain") return RewardStyle::kPlain;
  if (name == "scaled_exp") return RewardStyle::kScaledExp;
  throw std::runtime_error("unknown reward style: " + name);
}

inline std::string kernel_style_name(KernelStyle s) {
  return s == KernelStyle::kFullSupport ? "full_support" : "existential_only";
}

inline KernelStyle kernel_style_from_name(const std::string& name) {
  if (name == "full_support") return KernelStyle::kFullSupport;
  if (name == "existential_only") return KernelStyle::kExistentialOnly;
  throw std::runtime_error("unknown kernel style: " + name);
}

inline nlohmann::json generator_to_json(const GeneratorSpec& spec) {
  return {{"num_states", spec.num_states},
          {"num_actions", spec.num_actions},
          {"gamma", spec.gamma},
          {"reward_bound", spec.reward_bound},
          {"reward_style", reward_style_name(spec.reward_style)},
          {"kernel_style", kernel_style_name(spec.kernel_style)},
          {"seed", spec.seed}};
}

inline GeneratorSpec generator_from_json(const nlohmann::json& j) {
  GeneratorSpec spec;
  try {
    spec.num_states = j.at("num_states").get<int>();
    spec.num_actions = j.at("num_actions").get<int>();
    spec.gamma = j.at("gamma").get<double>();
    spec.reward_bound = j.at("reward_bound").get<double>();
    spec.reward_style = reward_style_from_name(j.at("reward_style").get<std::string>());
    spec.kernel_style = kernel_style_from_name(j.at("kernel_style").get<std::string>());
    spec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("generator spec: ") + e.what());
  }
  return spec;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (cfg.generator) j["generator"] = generator_to_json(*cfg.generator);
  if (!cfg.game_file.empty()) j["game_file"] = cfg.game_file;
  j["schedule"] = schedule_to_json(cfg.schedule);
  j["num_stages"] = cfg.num_stages;
  j["log_every"] = cfg.log_every;
  j["seeds"] = cfg.seeds;
  j["mode"] = cfg.mode == RunMode::kSelfPlay ? "self_play" : "rationality";
  if (cfg.rationality)
    j["rationality"] = {{"learner", cfg.rationality->learner},
                        {"opponent", cfg.rationality->opponent}};
  j["log_exploitability"] = cfg.log_exploitability;
  j["lambda_report"] = cfg.lambda_report;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("generator")) cfg.generator = generator_from_json(j.at("generator"));
    if (j.contains("game_file")) cfg.game_file = j.at("game_file").get<std::string>();
    if (j.contains("schedule")) cfg.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("num_stages")) cfg.num_stages = j.at("num_stages").get<long long>();
    if (j.contains("log_every")) cfg.log_every = j.at("log_every").get<long long>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("mode")) {
      std::string mode = j.at("mode").get<std::string>();
      if (mode == "self_play")
        cfg.mode = RunMode::kSelfPlay;
      else if (mode == "rationality")
        cfg.mode = RunMode::kRationality;
      else
        throw std::runtime_error("unknown run mode: " + mode);
    }
    if (j.contains("rationality")) {
      RationalitySetup setup;
      setup.learner = j.at("rationality").at("learner").get<int>();
      setup.opponent =
          j.at("rationality").at("opponent").get<std::vector<std::vector<double>>>();
      cfg.rationality = std::move(setup);
    }
    if (j.contains("log_exploitability"))
      cfg.log_exploitability = j.at("log_exploitability").get<bool>();
    if (j.contains("lambda_report")) cfg.lambda_report = j.at("lambda_report").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("experiment config: ") + e.what());
  }
  if (cfg.num_stages < 1) throw std::invalid_argument("config: num_stages must be positive");
  if (cfg.log_every < 1) throw std::invalid_argument("config: log_every must be positive");
  return cfg;
}

// FNV-1a over the canonical JSON serialization; 16 lowercase hex digits.
inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory logs and serialization

struct TrajectoryLog {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<int> int_columns;  // indices rendered without a decimal point
  std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<long long>(std::llround(v)));
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\" ") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline std::string csv_string(const TrajectoryLog& log) {
  std::string out;
  for (const auto& [key, value] : log.metadata) out += "# " + key + "=" + value + "\n";
  for (std::size_t i = 0; i < log.columns.size(); ++i) {
    if (i) out += ',';
    out += log.columns[i];
  }
  out += '\n';
  for (const auto& row : log.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      bool integral = std::find(log.int_columns.begin(), log.int_columns.end(),
                                static_cast<int>(i)) != log.int_columns.end();
      out += integral ? detail::format_int(row[i]) : detail::format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

// Rewrites a CSV document as whitespace-separated columns: `#` metadata lines
// pass through, the header becomes a `#` comment, and an optional column
// selection picks and orders fields by name.
inline std::string gnuplot_columns(const std::string& csv,
                                   const std::vector<std::string>& wanted) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : csv) {
    if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));

  std::string out;
  std::size_t i = 0;
  for (; i < lines.size() && !lines[i].empty() && lines[i][0] == '#'; ++i)
    out += lines[i] + "\n";
  if (i >= lines.size()) throw std::invalid_argument("gnuplot_columns: missing header row");
  auto header = detail::parse_csv_line(lines[i]);
  std::vector<std::size_t> pick;
  if (wanted.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) pick.push_back(c);
  } else {
    for (const auto& name : wanted) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end())
        throw std::invalid_argument("gnuplot_columns: no column named " + name);
      pick.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  }
  out += "#";
  for (std::size_t c : pick) out += " " + detail::csv_field(header[c]);
  out += "\n";
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = detail::parse_csv_line(lines[i]);
    std::string line;
    for (std::size_t c : pick) {
      if (!line.empty()) line += ' ';
      line += detail::csv_field(c < fields.size() ? fields[c] : std::string());
    }
    out += line + "\n";
  }
  return out;
}

inline int worker_count() {
  if (const char* env = std::getenv("ZSMG_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc >= 1 ? static_cast<int>(hc) : 1;
}

// ---------------------------------------------------------------------------
// Simulation drivers

using StageObserver = std::function<void(long long stage, int state, int a1, int a2,
                                         double reward, const AgentState& p1,
                                         const AgentState& p2)>;

struct SelfPlayResult {
  AgentState agent1;
  AgentState agent2;
  TrajectoryLog log;
};

namespace detail {

inline ScheduleConfig effective_schedule(const MarkovGame& game, const ScheduleConfig& base) {
  ScheduleConfig sched = base;
  if (!(sched.d_bound > 0.0)) sched.d_bound = game.discount_bound();
  auto report = validate_schedule(sched);
  if (!report.valid())
    throw std::invalid_argument("invalid schedule: " + report.notes());
  return sched;
}

inline void push_common_metadata(TrajectoryLog& log, const ExperimentConfig& cfg,
                                 std::uint64_t seed, const ScheduleConfig& sched) {
  log.metadata.emplace_back("seed", std::to_string(seed));
  log.metadata.emplace_back("config_hash", config_hash(cfg));
  log.metadata.emplace_back("d_bound", format_double(sched.d_bound));
}

}  // namespace detail

inline SelfPlayResult run_self_play(const MarkovGame& game, const ExperimentConfig& cfg,
                                    std::uint64_t seed,
                                    const SolutionCertificate* oracle = nullptr,
                                    const StageObserver& observer = {}) {
  auto valid = validate(game);
  if (!valid.valid()) throw std::invalid_argument("run_self_play: " + valid.notes());
  ScheduleConfig sched = detail::effective_schedule(game, cfg.schedule);

  AgentState agent1(game.actions1, game.gamma, sched.d_bound);
  AgentState agent2(game.actions2, game.gamma, sched.d_bound);

  TrajectoryLog log;
  detail::push_common_metadata(log, cfg, seed, sched);
  if (oracle)
    for (int s = 0; s < game.num_states; ++s)
      log.metadata.emplace_back("oracle_v1_s" + std::to_string(s),
                                detail::format_double(oracle->values1[s]));
  log.columns = {"stage", "state"};
  log.int_columns = {0, 1};
  for (int s = 0; s < game.num_states; ++s) {
    const std::string tag = "_s" + std::to_string(s);
    log.columns.push_back("v1" + tag);
    log.columns.push_back("v2" + tag);
    log.columns.push_back("sum" + tag);
    if (oracle) {
      log.columns.push_back("eps1" + tag);
      log.columns.push_back("eps2" + tag);
    }
    if (cfg.log_exploitability) {
      log.columns.push_back("expl1" + tag);
      log.columns.push_back("expl2" + tag);
    }
  }

  Rng rng(seed);
  int state = rng.uniform_int(game.num_states);
  for (long long stage = 1; stage <= cfg.num_stages; ++stage) {
    auto pi1 = agent1.begin_stage(state, sched);
    auto pi2 = agent2.begin_stage(state, sched);
    int a1 = rng.categorical(pi1);
    int a2 = rng.categorical(pi2);
    double reward = game.reward1[state](a1, a2);
    agent1.finish_stage(state, a1, reward, pi1, sched);
    agent2.finish_stage(state, a2, -reward, pi2, sched);
    int next = sample_transition(game, state, {a1, a2}, rng);
    if (observer) observer(stage, state, a1, a2, reward, agent1, agent2);

    if (stage % cfg.log_every == 0 || stage == cfg.num_stages) {
      std::vector<double> row = {static_cast<double>(stage), static_cast<double>(state)};
      std::optional<ExploitabilityReport> expl;
      if (cfg.log_exploitability) {
        StationaryStrategy s1, s2;
        for (int s = 0; s < game.num_states; ++s) {
          s1.probs.push_back(agent1.empirical_strategy(s));
          s2.probs.push_back(agent2.empirical_strategy(s));
        }
        expl = exploitability(game, s1, s2);
      }
      for (int s = 0; s < game.num_states; ++s) {
        row.push_back(agent1.value(s));
        row.push_back(agent2.value(s));
        row.push_back(agent1.value(s) + agent2.value(s));
        if (oracle) {
          row.push_back(std::fabs(agent1.value(s) - oracle->values1[s]));
          row.push_back(std::fabs(agent2.value(s) - oracle->values2[s]));
        }
        if (cfg.log_exploitability) {
          row.push_back(expl->gap1[s]);
          row.push_back(expl->gap2[s]);
        }
      }
      log.rows.push_back(std::move(row));
    }
    state = next;
  }
  return {std::move(agent1), std::move(agent2), std::move(log)};
}

struct RationalityResult {
  AgentState agent;
  std::vector<double> br_values;
  std::vector<int> br_actions;
  TrajectoryLog log;
};

inline RationalityResult run_rationality(const MarkovGame& game, const ExperimentConfig& cfg,
                                         std::uint64_t seed) {
  auto valid = validate(game);
  if (!valid.valid()) throw std::invalid_argument("run_rationality: " + valid.notes());
  if (!cfg.rationality)
    throw std::invalid_argument("run_rationality: config carries no rationality setup");
  const RationalitySetup& setup = *cfg.rationality;
  if (setup.learner != 1 && setup.learner != 2)
    throw std::invalid_argument("run_rationality: learner seat must be 1 or 2");
  const int opp_seat = setup.learner == 1 ? 2 : 1;
  const std::vector<int>& opp_actions = opp_seat == 1 ? game.actions1 : game.actions2;
  if (static_cast<int>(setup.opponent.size()) != game.num_states)
    throw std::invalid_argument("run_rationality: opponent strategy must cover every state");
  for (int s = 0; s < game.num_states; ++s) {
    const auto& p = setup.opponent[s];
    if (static_cast<int>(p.size()) != opp_actions[s])
      throw std::invalid_argument("run_rationality: opponent strategy length mismatch at state " +
                                  std::to_string(s));
    double sum = 0.0;
    for (double x : p) {
      if (!(x > 0.0))
        throw std::invalid_argument(
            "run_rationality: the fixed opponent must randomize over every action");
      sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("run_rationality: opponent strategy does not sum to one");
  }
  ScheduleConfig sched = detail::effective_schedule(game, cfg.schedule);

  StationaryStrategy opp{setup.opponent};
  BestResponse br = best_response_value(game, opp, setup.learner);

  const std::vector<int>& learn_actions = setup.learner == 1 ? game.actions1 : game.actions2;
  AgentState agent(learn_actions, game.gamma, sched.d_bound);

  TrajectoryLog log;
  detail::push_common_metadata(log, cfg, seed, sched);
  for (int s = 0; s < game.num_states; ++s)
    log.metadata.emplace_back("br_target_s" + std::to_string(s),
                              detail::format_double(br.values[s]));
  log.columns = {"stage", "state"};
  log.int_columns = {0, 1};
  for (int s = 0; s < game.num_states; ++s) {
    log.columns.push_back("v_s" + std::to_string(s));
    log.columns.push_back("err_s" + std::to_string(s));
  }

  Rng rng(seed);
  int state = rng.uniform_int(game.num_states);
  for (long long stage = 1; stage <= cfg.num_stages; ++stage) {
    auto pi = agent.begin_stage(state, sched);
    int a_learn = rng.categorical(pi);
    int a_opp = rng.categorical(setup.opponent[state]);
    int a1 = setup.learner == 1 ? a_learn : a_opp;
    int a2 = setup.learner == 1 ? a_opp : a_learn;
    double reward = game.reward1[state](a1, a2);
    agent.finish_stage(state, a_learn, setup.learner == 1 ? reward : -reward, pi, sched);
    int next = sample_transition(game, state, {a1, a2}, rng);
    if (stage % cfg.log_every == 0 || stage == cfg.num_stages) {
      std::vector<double> row = {static_cast<double>(stage), static_cast<double>(state)};
      for (int s = 0; s < game.num_states; ++s) {
        row.push_back(agent.value(s));
        row.push_back(std::fabs(agent.value(s) - br.values[s]));
      }
      log.rows.push_back(std::move(row));
    }
    state = next;
  }
  return {std::move(agent), std::move(br.values), std::move(br.actions), std::move(log)};
}

// ---------------------------------------------------------------------------
// Multi-seed batches

struct BatchSummary {
  std::vector<TrajectoryLog> per_seed;  // ordered by ascending seed
  TrajectoryLog aggregate;
  std::vector<double> final_errors;  // per seed: max over states/players of |vhat - v*|
  std::vector<long long> min_final_visits;  // per seed: least-visited state's counter
  double mean_final_error = 0.0;
  double error_band = 0.0;  // epsilon * xi * g_plus, the asymptotic tolerance level
};

inline BatchSummary run_batch(const MarkovGame& game, const ExperimentConfig& cfg,
                              const SolutionCertificate* oracle = nullptr) {
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  if (seeds.empty()) throw std::invalid_argument("run_batch: no seeds configured");
  // canonicalize the seed list so permuted configurations hash identically
  ExperimentConfig canon = cfg;
  canon.seeds = seeds;

  SolutionCertificate solved;
  if (!oracle) {
    solved = shapley_solve(game);
    oracle = &solved;
  }

  std::vector<std::optional<SelfPlayResult>> slots(seeds.size());
  const int workers =
      std::min<int>(worker_count(), static_cast<int>(seeds.size()));
  std::atomic<std::size_t> cursor{0};
  auto drain = [&]() {
    for (std::size_t i; (i = cursor.fetch_add(1)) < seeds.size();)
      slots[i] = run_self_play(game, canon, seeds[i], oracle);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();

  BatchSummary summary;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    SelfPlayResult& res = *slots[i];
    double err = 0.0;
    for (int s = 0; s < game.num_states; ++s) {
      err = std::max(err, std::fabs(res.agent1.value(s) - oracle->values1[s]));
      err = std::max(err, std::fabs(res.agent2.value(s) - oracle->values2[s]));
    }
    summary.final_errors.push_back(err);
    long long least = res.agent1.visit_count(0);
    for (int s = 1; s < game.num_states; ++s)
      least = std::min(least, res.agent1.visit_count(s));
    summary.min_final_visits.push_back(least);
    summary.per_seed.push_back(std::move(res.log));
  }
  double total = 0.0;
  for (double e : summary.final_errors) total += e;
  summary.mean_final_error = total / static_cast<double>(summary.final_errors.size());
  auto bc = bound_constants(game, canon.lambda_report, canon.schedule.epsilon);
  summary.error_band = bc.epsilon * bc.xi * bc.g_plus;

  const TrajectoryLog& first = summary.per_seed.front();
  TrajectoryLog& agg = summary.aggregate;
  agg.metadata.emplace_back("config_hash", config_hash(canon));
  agg.metadata.emplace_back("num_seeds", std::to_string(seeds.size()));
  agg.metadata.emplace_back("error_band", detail::format_double(summary.error_band));
  agg.columns = {"stage"};
  agg.int_columns = {0};
  for (std::size_t c = 1; c < first.columns.size(); ++c) {
    agg.columns.push_back("mean_" + first.columns[c]);
    agg.columns.push_back("std_" + first.columns[c]);
  }
  for (std::size_t r = 0; r < first.rows.size(); ++r) {
    std::vector<double> row = {first.rows[r][0]};
    for (std::size_t c = 1; c < first.columns.size(); ++c) {
      double mean = 0.0;
      for (const auto& log : summary.per_seed) mean += log.rows[r][c];
      mean /= static_cast<double>(summary.per_seed.size());
      double var = 0.0;
      for (const auto& log : summary.per_seed) {
        double d = log.rows[r][c] - mean;
        var += d * d;
      }
      var /= static_cast<double>(summary.per_seed.size());
      row.push_back(mean);
      row.push_back(std::sqrt(var));
    }
    agg.rows.push_back(std::move(row));
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Published experiment presets

struct CasePreset {
  GeneratorSpec gen;
  ScheduleConfig schedule;
};

inline CasePreset case_preset(int index) {
  CasePreset preset;
  switch (index) {
    case 1:
      preset.gen = {5, 3, 0.6, 1.0, RewardStyle::kScaledExp, KernelStyle::kExistentialOnly, 1};
      preset.schedule.rho_alpha = 0.9;
      preset.schedule.rho_beta = 1.0;
      preset.schedule.tau_bar = 4.5e4;
      preset.schedule.epsilon = 2e-4;
      preset.schedule.mode = TemperatureMode::kToEpsilon;
      preset.schedule.d_bound = 2.5;
      break;
    case 2:
      preset.gen = {5, 3, 0.6, 1.0, RewardStyle::kScaledExp, KernelStyle::kFullSupport, 2};
      preset.schedule.rho_alpha = 0.9;
      preset.schedule.rho_beta = 1.0;
      preset.schedule.rho = 0.7;
      preset.schedule.tau_bar = 0.07;
      preset.schedule.epsilon = 0.0;
      preset.schedule.mode = TemperatureMode::kToZero;
      preset.schedule.d_bound = 2.5;
      break;
    case 3:
      preset.gen = {20, 10, 0.5, 2.0, RewardStyle::kPlain, KernelStyle::kExistentialOnly, 3};
      preset.schedule.rho_alpha = 0.9;
      preset.schedule.rho_beta = 1.0;
      preset.schedule.rho = 0.85;
      preset.schedule.tau_bar = 0.1;
      preset.schedule.epsilon = 2e-2;
      preset.schedule.mode = TemperatureMode::kMaxEpsilon;
      preset.schedule.d_bound = 4.0;
      break;
    case 4:
      preset.gen = {20, 10, 0.5, 2.0, RewardStyle::kPlain, KernelStyle::kFullSupport, 4};
      preset.schedule.rho_alpha = 0.9;
      preset.schedule.rho_beta = 1.0;
      preset.schedule.rho = 0.85;
      preset.schedule.tau_bar = 0.1;
      preset.schedule.epsilon = 2e-2;
      preset.schedule.mode = TemperatureMode::kToZero;
      preset.schedule.d_bound = 4.0;
      break;
    default:
      throw std::invalid_argument("case_preset: index must be 1, 2, 3, or 4");
  }
  return preset;
}

}  // namespace zsmg
