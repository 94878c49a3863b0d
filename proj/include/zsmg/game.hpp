#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zsmg/mat.hpp"
#include "zsmg/rng.hpp"
#include "zsmg/validation.hpp"

namespace zsmg {

struct JointAction {
  int a1 = 0;
  int a2 = 0;
};

// Mixed stationary strategy for one player: probs[s] is a distribution over
// that player's actions at state s.
struct StationaryStrategy {
  std::vector<std::vector<double>> probs;
};

// Finite two-player zero-sum stochastic game. Only the first player's reward
// is stored; the second player receives its negation. reward1[s] has shape
// |A1(s)| x |A2(s)|. kernel[s] has one row per joint action, indexed
// a1 * |A2(s)| + a2, each row a distribution over successor states.
struct MarkovGame {
  int num_states = 0;
  std::vector<int> actions1;
  std::vector<int> actions2;
  double gamma = 0.0;
  double reward_bound = 0.0;
  std::vector<Mat> reward1;
  std::vector<Mat> kernel;

  // Largest possible magnitude of any discounted return.
  double discount_bound() const { return reward_bound / (1.0 - gamma); }
};

// Outcome of a reachability check. `horizon` is the largest number of stages
// any ordered state pair needs for its first possible (or guaranteed
// positive-probability) arrival; arrivals count from stage 1, so the
// diagonal measures return times.
struct ReachabilityResult {
  bool holds = false;
  int horizon = 0;
  std::vector<std::pair<int, int>> failing_pairs;
};

inline ValidationReport validate(const MarkovGame& g) {
  ValidationReport report;
  if (g.num_states <= 0) {
    report.fail("num_states must be positive");
    return report;
  }
  if (!(g.gamma >= 0.0 && g.gamma < 1.0))
    report.fail("gamma must lie in [0, 1), got " + std::to_string(g.gamma));
  if (!(g.reward_bound > 0.0)) report.fail("reward_bound must be positive");
  if (static_cast<int>(g.actions1.size()) != g.num_states ||
      static_cast<int>(g.actions2.size()) != g.num_states) {
    report.fail("action count arrays must have one entry per state");
    return report;
  }
  if (static_cast<int>(g.reward1.size()) != g.num_states ||
      static_cast<int>(g.kernel.size()) != g.num_states) {
    report.fail("reward and kernel arrays must have one entry per state");
    return report;
  }
  const double reward_slack = 1e-9 * std::max(1.0, g.reward_bound);
  for (int s = 0; s < g.num_states; ++s) {
    const int n1 = g.actions1[s];
    const int n2 = g.actions2[s];
    if (n1 <= 0 || n2 <= 0) {
      report.fail("state s=" + std::to_string(s) + " has an empty action set");
      continue;
    }
    if (g.reward1[s].rows() != n1 || g.reward1[s].cols() != n2) {
      report.fail("reward matrix shape mismatch at s=" + std::to_string(s));
      continue;
    }
    if (g.kernel[s].rows() != n1 * n2 || g.kernel[s].cols() != g.num_states) {
      report.fail("kernel shape mismatch at s=" + std::to_string(s));
      continue;
    }
    for (int a1 = 0; a1 < n1; ++a1)
      for (int a2 = 0; a2 < n2; ++a2) {
        const double r = g.reward1[s](a1, a2);
        if (!(std::fabs(r) <= g.reward_bound + reward_slack)) {
          std::ostringstream msg;
          msg << "reward exceeds bound at s=" << s << " a1=" << a1 << " a2=" << a2
              << " (|" << r << "| > " << g.reward_bound << ")";
          report.fail(msg.str());
        }
        const int row = a1 * n2 + a2;
        double sum = 0.0;
        for (int t = 0; t < g.num_states; ++t) {
          const double p = g.kernel[s](row, t);
          if (p < -1e-12) {
            std::ostringstream msg;
            msg << "negative kernel entry at s=" << s << " a1=" << a1 << " a2=" << a2
                << " t=" << t;
            report.fail(msg.str());
          }
          sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-12) {
          std::ostringstream msg;
          msg << "kernel row does not sum to one at s=" << s << " a1=" << a1
              << " a2=" << a2 << " (sum=" << sum << ")";
          report.fail(msg.str());
        }
      }
  }
  return report;
}

namespace detail {

// Shared fixpoint iteration behind both reachability checks. For each target
// state a boolean table, seeded with the target itself, absorbs every source
// whose transitions can (existential) or must (universal) put positive
// probability on the current table. The horizon is the round at which the
// table stops growing, maximized over targets; monotonicity caps it at the
// number of states.
// Boolean DP over stage counts. within[s] becomes true at round k when the
// target can be hit with positive probability in at most k transitions from
// s, quantified over joint actions existentially or universally. The horizon
// is the first round at which every source is covered, maximized over
// targets; note that a state reaching itself requires at least one
// transition, so self-pairs are not trivially covered.
inline ReachabilityResult reach_check(const MarkovGame& g, bool universal) {
  const int n = g.num_states;
  ReachabilityResult result;
  result.holds = true;
  for (int target = 0; target < n; ++target) {
    std::vector<char> within(n, 0);
    int complete_round = 0;
    for (int k = 1; k <= n; ++k) {
      std::vector<char> next = within;
      bool changed = false;
      for (int s = 0; s < n; ++s) {
        if (within[s]) continue;
        const int num_joint = g.actions1[s] * g.actions2[s];
        bool acc = universal;
        for (int row = 0; row < num_joint; ++row) {
          bool branch = false;
          for (int u = 0; u < n && !branch; ++u)
            if (g.kernel[s](row, u) > 0.0 && (u == target || within[u])) branch = true;
          if (universal) {
            acc = acc && branch;
            if (!acc) break;
          } else {
            acc = acc || branch;
            if (acc) break;
          }
        }
        if (acc) {
          next[s] = 1;
          changed = true;
        }
      }
      within = std::move(next);
      bool all = true;
      for (int s = 0; s < n; ++s) all = all && (within[s] != 0);
      if (all) {
        complete_round = k;
        break;
      }
      if (!changed) break;
    }
    if (complete_round > result.horizon) result.horizon = complete_round;
    if (complete_round == 0) {
      result.holds = false;
      for (int s = 0; s < n; ++s)
        if (!within[s]) result.failing_pairs.emplace_back(s, target);
    }
  }
  return result;
}

}  // namespace detail

// Does every ordered pair of states admit some joint action sequence that
// reaches the second state from the first with positive probability?
inline ReachabilityResult check_reach_exists(const MarkovGame& g) {
  return detail::reach_check(g, false);
}

// Does every ordered pair of states get connected with positive probability
// no matter which actions both players pick along the way?
inline ReachabilityResult check_reach_universal(const MarkovGame& g) {
  return detail::reach_check(g, true);
}

inline int sample_transition(const MarkovGame& g, int state, JointAction ja, Rng& rng) {
  if (state < 0 || state >= g.num_states)
    throw std::out_of_range("sample_transition: state " + std::to_string(state));
  const int n1 = g.actions1[state];
  const int n2 = g.actions2[state];
  if (ja.a1 < 0 || ja.a1 >= n1 || ja.a2 < 0 || ja.a2 >= n2)
    throw std::out_of_range("sample_transition: joint action (" + std::to_string(ja.a1) +
                            "," + std::to_string(ja.a2) + ") at state " +
                            std::to_string(state));
  const double* row = g.kernel[state].row(ja.a1 * n2 + ja.a2);
  const double u = rng.uniform();
  double acc = 0.0;
  int last_positive = -1;
  for (int t = 0; t < g.num_states; ++t) {
    if (row[t] > 0.0) {
      last_positive = t;
      acc += row[t];
      if (u < acc) return t;
    }
  }
  if (last_positive < 0)
    throw std::runtime_error("sample_transition: kernel row has no positive mass");
  return last_positive;
}

inline ValidationReport validate_strategy(const MarkovGame& g, const StationaryStrategy& s,
                                          int player) {
  ValidationReport report;
  if (player != 1 && player != 2) {
    report.fail("player must be 1 or 2");
    return report;
  }
  const auto& actions = (player == 1) ? g.actions1 : g.actions2;
  if (static_cast<int>(s.probs.size()) != g.num_states) {
    report.fail("strategy must cover exactly " + std::to_string(g.num_states) + " states");
    return report;
  }
  for (int st = 0; st < g.num_states; ++st) {
    if (static_cast<int>(s.probs[st].size()) != actions[st]) {
      report.fail("wrong number of action probabilities at s=" + std::to_string(st));
      continue;
    }
    double sum = 0.0;
    for (double p : s.probs[st]) {
      if (p < -1e-12) report.fail("negative probability at s=" + std::to_string(st));
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      report.fail("probabilities at s=" + std::to_string(st) + " sum to " +
                  std::to_string(sum));
  }
  return report;
}

inline nlohmann::json game_to_json(const MarkovGame& g) {
  nlohmann::json j;
  j["num_states"] = g.num_states;
  j["actions1"] = g.actions1;
  j["actions2"] = g.actions2;
  j["gamma"] = g.gamma;
  j["reward_bound"] = g.reward_bound;
  auto mat_rows = [](const Mat& m) {
    std::vector<std::vector<double>> rows;
    rows.reserve(m.rows());
    for (int i = 0; i < m.rows(); ++i)
      rows.emplace_back(m.row(i), m.row(i) + m.cols());
    return rows;
  };
  nlohmann::json rewards = nlohmann::json::array();
  nlohmann::json kernels = nlohmann::json::array();
  for (int s = 0; s < g.num_states; ++s) {
    rewards.push_back(mat_rows(g.reward1[s]));
    kernels.push_back(mat_rows(g.kernel[s]));
  }
  j["reward1"] = std::move(rewards);
  j["kernel"] = std::move(kernels);
  return j;
}

inline MarkovGame game_from_json(const nlohmann::json& j) {
  MarkovGame g;
  try {
    g.num_states = j.at("num_states").get<int>();
    g.actions1 = j.at("actions1").get<std::vector<int>>();
    g.actions2 = j.at("actions2").get<std::vector<int>>();
    g.gamma = j.at("gamma").get<double>();
    g.reward_bound = j.at("reward_bound").get<double>();
    const auto& rewards = j.at("reward1");
    const auto& kernels = j.at("kernel");
    if (static_cast<int>(rewards.size()) != g.num_states ||
        static_cast<int>(kernels.size()) != g.num_states)
      throw std::runtime_error("game_from_json: state count mismatch");
    auto read_mat = [](const nlohmann::json& rows, int expect_rows, int expect_cols,
                       const char* what) {
      if (static_cast<int>(rows.size()) != expect_rows)
        throw std::runtime_error(std::string("game_from_json: row count mismatch in ") + what);
      Mat m(expect_rows, expect_cols);
      for (int i = 0; i < expect_rows; ++i) {
        const auto& row = rows.at(i);
        if (static_cast<int>(row.size()) != expect_cols)
          throw std::runtime_error(std::string("game_from_json: column count mismatch in ") +
                                   what);
        for (int c = 0; c < expect_cols; ++c) m(i, c) = row.at(c).get<double>();
      }
      return m;
    };
    for (int s = 0; s < g.num_states; ++s) {
      g.reward1.push_back(
          read_mat(rewards.at(s), g.actions1[s], g.actions2[s], "reward1"));
      Mat k = read_mat(kernels.at(s), g.actions1[s] * g.actions2[s], g.num_states, "kernel");
      // Serialization can shave a few ulps off row sums; renormalize silently
      // below a strict threshold, reject anything that looks like real damage.
      for (int row = 0; row < k.rows(); ++row) {
        double sum = 0.0;
        for (int t = 0; t < g.num_states; ++t) sum += k(row, t);
        if (std::fabs(sum - 1.0) > 1e-9)
          throw std::runtime_error("game_from_json: kernel row sums to " +
                                   std::to_string(sum) + " at s=" + std::to_string(s));
        if (sum > 0.0)
          for (int t = 0; t < g.num_states; ++t) k(row, t) /= sum;
      }
      g.kernel.push_back(std::move(k));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("game_from_json: malformed document: ") + e.what());
  }
  return g;
}

inline void save_game(const MarkovGame& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_game: cannot open " + path);
  out << game_to_json(g).dump(2) << '\n';
  if (!out) throw std::runtime_error("save_game: write failed for " + path);
}

inline MarkovGame load_game(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_game: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return game_from_json(j);
}

}  // namespace zsmg
