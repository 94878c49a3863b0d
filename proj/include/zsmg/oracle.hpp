#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsmg/game.hpp"
#include "zsmg/mat.hpp"
#include "zsmg/matrix_game.hpp"

namespace zsmg {

// Ground-truth solution of the discounted game from the first player's
// perspective, produced by value iteration down to a certified Bellman
// residual. Strategies form an (approximate) equilibrium profile.
struct SolutionCertificate {
  std::vector<double> values1;
  std::vector<double> values2;
  std::vector<Mat> q_star1;
  StationaryStrategy strategy1;
  StationaryStrategy strategy2;
  double bellman_residual = 0.0;
};

struct BestResponse {
  std::vector<double> values;
  std::vector<int> actions;
};

struct ExploitabilityReport {
  std::vector<double> gap1;
  std::vector<double> gap2;
};

// Auxiliary one-stage payoff matrix at `state` for continuation values
// `values`: reward plus discounted expected continuation.
inline Mat stage_matrix(const MarkovGame& g, int state, const std::vector<double>& values) {
  const int n1 = g.actions1[state];
  const int n2 = g.actions2[state];
  Mat q(n1, n2);
  for (int a1 = 0; a1 < n1; ++a1)
    for (int a2 = 0; a2 < n2; ++a2) {
      const double* row = g.kernel[state].row(a1 * n2 + a2);
      double cont = 0.0;
      for (int t = 0; t < g.num_states; ++t) cont += row[t] * values[t];
      q(a1, a2) = g.reward1[state](a1, a2) + g.gamma * cont;
    }
  return q;
}

// One sweep of the minimax value operator.
inline std::vector<double> apply_value_operator(const MarkovGame& g,
                                                const std::vector<double>& values) {
  std::vector<double> out(g.num_states);
  for (int s = 0; s < g.num_states; ++s)
    out[s] = matrix_value(stage_matrix(g, s, values)).value;
  return out;
}

inline SolutionCertificate shapley_solve(const MarkovGame& g, double tol = 1e-10) {
  std::vector<double> v(g.num_states, 0.0);
  // Stopping at delta <= tol*(1-gamma)/gamma leaves a Bellman residual of at
  // most tol*(1-gamma) on the reported values.
  const double threshold = g.gamma > 0.0 ? tol * (1.0 - g.gamma) / g.gamma : 0.0;
  const int max_iters = 1000000;
  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<double> next = apply_value_operator(g, v);
    double delta = 0.0;
    for (int s = 0; s < g.num_states; ++s) delta = std::max(delta, std::fabs(next[s] - v[s]));
    v = std::move(next);
    if (delta <= threshold) break;
    if (iter + 1 == max_iters)
      throw std::runtime_error("shapley_solve: value iteration did not converge");
  }

  SolutionCertificate cert;
  cert.values1 = v;
  cert.values2.resize(g.num_states);
  for (int s = 0; s < g.num_states; ++s) cert.values2[s] = -v[s];
  cert.bellman_residual = 0.0;
  for (int s = 0; s < g.num_states; ++s) {
    cert.q_star1.push_back(stage_matrix(g, s, cert.values1));
    auto sol = matrix_value(cert.q_star1.back());
    cert.strategy1.probs.push_back(sol.row_strategy);
    cert.strategy2.probs.push_back(sol.col_strategy);
    cert.bellman_residual =
        std::max(cert.bellman_residual, std::fabs(sol.value - cert.values1[s]));
  }
  return cert;
}

namespace detail {

// Expected reward vector and transition matrix induced by a fixed profile,
// from the chosen player's perspective.
inline void induced_chain(const MarkovGame& g, const StationaryStrategy& s1,
                          const StationaryStrategy& s2, int player,
                          std::vector<double>& reward, Mat& kernel) {
  const int n = g.num_states;
  reward.assign(n, 0.0);
  kernel = Mat(n, n, 0.0);
  const double sign = (player == 1) ? 1.0 : -1.0;
  for (int s = 0; s < n; ++s) {
    for (int a1 = 0; a1 < g.actions1[s]; ++a1)
      for (int a2 = 0; a2 < g.actions2[s]; ++a2) {
        const double w = s1.probs[s][a1] * s2.probs[s][a2];
        if (w == 0.0) continue;
        reward[s] += w * sign * g.reward1[s](a1, a2);
        const double* row = g.kernel[s].row(a1 * g.actions2[s] + a2);
        for (int t = 0; t < n; ++t) kernel(s, t) += w * row[t];
      }
  }
}

// Solve (I - gamma*P) v = r. Direct elimination for moderate sizes, fixed
// point iteration beyond that.
inline std::vector<double> solve_discounted_chain(const std::vector<double>& r, const Mat& P,
                                                  double gamma, double tol) {
  const int n = static_cast<int>(r.size());
  if (n <= 200) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - gamma * P(i, j);
      a[i][n] = r[i];
    }
    for (int col = 0; col < n; ++col) {
      int pivot = col;
      for (int i = col + 1; i < n; ++i)
        if (std::fabs(a[i][col]) > std::fabs(a[pivot][col])) pivot = i;
      std::swap(a[col], a[pivot]);
      if (std::fabs(a[col][col]) < 1e-14)
        throw std::runtime_error("policy_eval: singular system");
      for (int i = 0; i < n; ++i) {
        if (i == col) continue;
        const double f = a[i][col] / a[col][col];
        if (f == 0.0) continue;
        for (int j = col; j <= n; ++j) a[i][j] -= f * a[col][j];
      }
    }
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a[i][n] / a[i][i];
    return v;
  }
  std::vector<double> v(n, 0.0);
  const double threshold = gamma > 0.0 ? tol * (1.0 - gamma) / gamma : 0.0;
  for (int iter = 0; iter < 1000000; ++iter) {
    double delta = 0.0;
    std::vector<double> next(n);
    for (int s = 0; s < n; ++s) {
      double cont = 0.0;
      for (int t = 0; t < n; ++t) cont += P(s, t) * v[t];
      next[s] = r[s] + gamma * cont;
      delta = std::max(delta, std::fabs(next[s] - v[s]));
    }
    v = std::move(next);
    if (delta <= threshold) return v;
  }
  throw std::runtime_error("policy_eval: iteration did not converge");
}

}  // namespace detail

// Discounted value of the fixed profile (s1, s2) for one player.
inline std::vector<double> policy_eval(const MarkovGame& g, const StationaryStrategy& s1,
                                       const StationaryStrategy& s2, int player,
                                       double tol = 1e-10) {
  if (player != 1 && player != 2)
    throw std::invalid_argument("policy_eval: player must be 1 or 2");
  std::vector<double> reward;
  Mat kernel;
  detail::induced_chain(g, s1, s2, player, reward, kernel);
  return detail::solve_discounted_chain(reward, kernel, g.gamma, tol);
}

// Optimal response of `player` against a fixed opponent strategy: value
// iteration on the induced Markov decision process. Greedy actions break
// ties toward the lowest index.
inline BestResponse best_response_value(const MarkovGame& g, const StationaryStrategy& opponent,
                                        int player, double tol = 1e-10) {
  if (player != 1 && player != 2)
    throw std::invalid_argument("best_response_value: player must be 1 or 2");
  const int n = g.num_states;
  // Precompute per-(state, own action) expected rewards and kernels.
  std::vector<std::vector<double>> reward(n);
  std::vector<Mat> kernel(n);
  for (int s = 0; s < n; ++s) {
    const int own = (player == 1) ? g.actions1[s] : g.actions2[s];
    const int other = (player == 1) ? g.actions2[s] : g.actions1[s];
    reward[s].assign(own, 0.0);
    kernel[s] = Mat(own, n, 0.0);
    for (int a = 0; a < own; ++a)
      for (int b = 0; b < other; ++b) {
        const double w = opponent.probs[s][b];
        if (w == 0.0) continue;
        const int a1 = (player == 1) ? a : b;
        const int a2 = (player == 1) ? b : a;
        reward[s][a] += w * (player == 1 ? 1.0 : -1.0) * g.reward1[s](a1, a2);
        const double* row = g.kernel[s].row(a1 * g.actions2[s] + a2);
        for (int t = 0; t < n; ++t) kernel[s](a, t) += w * row[t];
      }
  }
  std::vector<double> v(n, 0.0);
  const double threshold = g.gamma > 0.0 ? tol * (1.0 - g.gamma) / g.gamma : 0.0;
  bool converged = false;
  for (int iter = 0; iter < 1000000 && !converged; ++iter) {
    double delta = 0.0;
    std::vector<double> next(n);
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < static_cast<int>(reward[s].size()); ++a) {
        double cont = 0.0;
        for (int t = 0; t < n; ++t) cont += kernel[s](a, t) * v[t];
        best = std::max(best, reward[s][a] + g.gamma * cont);
      }
      next[s] = best;
      delta = std::max(delta, std::fabs(next[s] - v[s]));
    }
    v = std::move(next);
    converged = delta <= threshold;
  }
  if (!converged) throw std::runtime_error("best_response_value: did not converge");

  BestResponse br;
  br.values = v;
  br.actions.assign(n, 0);
  for (int s = 0; s < n; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < static_cast<int>(reward[s].size()); ++a) {
      double cont = 0.0;
      for (int t = 0; t < n; ++t) cont += kernel[s](a, t) * v[t];
      const double q = reward[s][a] + g.gamma * cont;
      if (q > best + 1e-12) {
        best = q;
        br.actions[s] = a;
      } else if (best < q) {
        best = q;
      }
    }
  }
  return br;
}

// Per-state improvement available to each player by deviating from the
// profile (s1, s2). Non-negative up to solver tolerance; zero only at an
// equilibrium.
inline ExploitabilityReport exploitability(const MarkovGame& g, const StationaryStrategy& s1,
                                           const StationaryStrategy& s2, double tol = 1e-10) {
  ExploitabilityReport rep;
  auto v1 = policy_eval(g, s1, s2, 1, tol);
  auto v2 = policy_eval(g, s1, s2, 2, tol);
  auto br1 = best_response_value(g, s2, 1, tol);
  auto br2 = best_response_value(g, s1, 2, tol);
  rep.gap1.resize(g.num_states);
  rep.gap2.resize(g.num_states);
  for (int s = 0; s < g.num_states; ++s) {
    rep.gap1[s] = br1.values[s] - v1[s];
    rep.gap2[s] = br2.values[s] - v2[s];
  }
  return rep;
}

inline nlohmann::json certificate_to_json(const SolutionCertificate& cert) {
  nlohmann::json j;
  j["values1"] = cert.values1;
  j["values2"] = cert.values2;
  nlohmann::json mats = nlohmann::json::array();
  for (const auto& m : cert.q_star1) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i)
      rows.push_back(std::vector<double>(m.row(i), m.row(i) + m.cols()));
    mats.push_back(std::move(rows));
  }
  j["q_star1"] = std::move(mats);
  j["strategy1"] = cert.strategy1.probs;
  j["strategy2"] = cert.strategy2.probs;
  j["bellman_residual"] = cert.bellman_residual;
  return j;
}

inline SolutionCertificate certificate_from_json(const nlohmann::json& j) {
  SolutionCertificate cert;
  try {
    cert.values1 = j.at("values1").get<std::vector<double>>();
    cert.values2 = j.at("values2").get<std::vector<double>>();
    for (const auto& rows : j.at("q_star1")) {
      const int r = static_cast<int>(rows.size());
      const int c = r > 0 ? static_cast<int>(rows.at(0).size()) : 0;
      Mat m(r, c);
      for (int i = 0; i < r; ++i)
        for (int k = 0; k < c; ++k) m(i, k) = rows.at(i).at(k).get<double>();
      cert.q_star1.push_back(std::move(m));
    }
    cert.strategy1.probs = j.at("strategy1").get<std::vector<std::vector<double>>>();
    cert.strategy2.probs = j.at("strategy2").get<std::vector<std::vector<double>>>();
    cert.bellman_residual = j.at("bellman_residual").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("certificate_from_json: malformed document: ") +
                             e.what());
  }
  return cert;
}

}  // namespace zsmg
