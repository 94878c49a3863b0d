#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "zsmg/game.hpp"
#include "zsmg/learner.hpp"
#include "zsmg/mat.hpp"
#include "zsmg/matrix_game.hpp"

namespace zsmg {

// tau * log(sum_i exp(q[i] / tau)), evaluated with max-subtraction so that
// entries far from the origin do not overflow. The result always lies in
// [max q, max q + tau * log n].
inline double log_sum_exp(const std::vector<double>& q, double tau) {
  if (q.empty()) throw std::invalid_argument("log_sum_exp: empty vector");
  if (!(tau > 0.0)) throw std::invalid_argument("log_sum_exp: temperature must be positive");
  double top = q[0];
  for (double v : q) top = std::max(top, v);
  double sum = 0.0;
  for (double v : q) sum += std::exp((v - top) / tau);
  return top + tau * std::log(sum);
}

// Constants that govern the error propagation of the coupled value/strategy
// recursion. lambda trades a larger comparison margin against a smaller
// admissible range; it must lie strictly between 1 and 1/gamma.
struct BoundConstants {
  double xi = 0.0;      // max over states of log(|A1_s| * |A2_s|)
  double g_value = 0.0;
  double h_value = 0.0;
  double g_plus = 0.0;  // limit of g as lambda tends to 1
  double lambda = 0.0;
  double epsilon = 0.0;
};

inline BoundConstants bound_constants(const MarkovGame& game, double lambda,
                                      double epsilon_limit) {
  if (!(lambda > 1.0) || !(lambda * game.gamma < 1.0))
    throw std::invalid_argument("bound_constants: lambda must lie in (1, 1/gamma)");
  BoundConstants bc;
  long long joint = 1;
  for (int s = 0; s < game.num_states; ++s) {
    long long prod =
        static_cast<long long>(game.actions1[s]) * static_cast<long long>(game.actions2[s]);
    joint = std::max(joint, prod);
  }
  bc.xi = std::log(static_cast<double>(joint));
  const double gamma = game.gamma;
  bc.g_value = (2.0 + lambda - lambda * gamma) / ((1.0 - lambda * gamma) * (1.0 - gamma));
  bc.h_value =
      (4.0 * gamma * bc.g_value + 2.0 * (1.0 + lambda) / (1.0 - lambda * gamma)) / (1.0 - gamma);
  bc.g_plus = (3.0 - gamma) / ((1.0 - gamma) * (1.0 - gamma));
  bc.lambda = lambda;
  bc.epsilon = epsilon_limit;
  return bc;
}

// One-shot payoff matrix seen by `player` in `state` when future play is
// priced by `values` (in that player's own sign convention). For player 1
// entry (a, b) is r(s, a, b) + gamma * E[values]; player 2 sees the negated
// transpose built from its own value estimates.
inline Mat local_payoff_matrix(const MarkovGame& game, int state, int player,
                               const std::vector<double>& values) {
  if (state < 0 || state >= game.num_states)
    throw std::out_of_range("local_payoff_matrix: state index out of range");
  if (player != 1 && player != 2)
    throw std::invalid_argument("local_payoff_matrix: player must be 1 or 2");
  if (static_cast<int>(values.size()) != game.num_states)
    throw std::invalid_argument("local_payoff_matrix: values size must match state count");
  const int n1 = game.actions1[state];
  const int n2 = game.actions2[state];
  const Mat& r = game.reward1[state];
  const Mat& k = game.kernel[state];
  Mat m(player == 1 ? n1 : n2, player == 1 ? n2 : n1);
  for (int a = 0; a < n1; ++a) {
    for (int b = 0; b < n2; ++b) {
      double cont = 0.0;
      const double* row = k.row(a * n2 + b);
      for (int s2 = 0; s2 < game.num_states; ++s2) cont += row[s2] * values[s2];
      if (player == 1)
        m(a, b) = r(a, b) + game.gamma * cont;
      else
        m(b, a) = -r(a, b) + game.gamma * cont;
    }
  }
  return m;
}

// Gap between the learner's own appraisal of its mixed play, <pibar, q>, and
// the exact value of the local matrix game implied by its value estimates.
// At a solved fixed point this vanishes.
inline double tracking_error(const MarkovGame& game, const std::vector<double>& q,
                             const std::vector<double>& pibar, const std::vector<double>& values,
                             int state, int player) {
  Mat m = local_payoff_matrix(game, state, player, values);
  if (static_cast<int>(q.size()) != m.rows() || pibar.size() != q.size())
    throw std::invalid_argument("tracking_error: q and pibar must match the action count");
  double dot = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) dot += pibar[i] * q[i];
  return dot - matrix_value(m).value;
}

// Per-state sum of the two players' value estimates. Zero when the estimates
// are consistent with the zero-sum structure.
inline std::vector<double> zero_sum_drift(const std::vector<double>& v1,
                                          const std::vector<double>& v2) {
  if (v1.size() != v2.size())
    throw std::invalid_argument("zero_sum_drift: value vectors must have equal length");
  std::vector<double> d(v1.size());
  for (std::size_t s = 0; s < v1.size(); ++s) d[s] = v1[s] + v2[s];
  return d;
}

// State of the continuous-time model of the learning dynamics at one stage
// game: per-player score vectors q, mixed strategies pi, and the fixed payoff
// matrices Q1 (n1 x n2) and Q2 (n2 x n1). tau is the softmax temperature and
// lambda the comparison margin of the candidate function.
struct FlowState {
  std::vector<double> q1;
  std::vector<double> q2;
  std::vector<double> pi1;
  std::vector<double> pi2;
  Mat Q1;
  Mat Q2;
  double tau = 1.0;
  double lambda = 1.5;
};

struct LyapunovParts {
  double bracket = 0.0;   // log-sum-exp total minus lambda * zeta, before clamping
  double zeta = 0.0;      // payoff offset norm plus the entropy allowance
  double distance = 0.0;  // squared residuals of q against the strategy-induced payoffs
};

namespace detail {

inline void check_flow_shapes(const FlowState& fs) {
  if (!(fs.tau > 0.0)) throw std::invalid_argument("flow state: temperature must be positive");
  const int n1 = static_cast<int>(fs.q1.size());
  const int n2 = static_cast<int>(fs.q2.size());
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("flow state: empty score vector");
  if (fs.Q1.rows() != n1 || fs.Q1.cols() != n2 || fs.Q2.rows() != n2 || fs.Q2.cols() != n1)
    throw std::invalid_argument("flow state: payoff matrix shape mismatch");
  if (static_cast<int>(fs.pi1.size()) != n1 || static_cast<int>(fs.pi2.size()) != n2)
    throw std::invalid_argument("flow state: strategy length mismatch");
}

inline std::vector<double> mat_vec(const Mat& m, const std::vector<double>& x) {
  std::vector<double> y(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < m.cols(); ++j) sum += m(i, j) * x[j];
    y[i] = sum;
  }
  return y;
}

}  // namespace detail

inline LyapunovParts lyapunov_parts(const FlowState& fs) {
  detail::check_flow_shapes(fs);
  if (!(fs.lambda > 1.0))
    throw std::invalid_argument("lyapunov_parts: lambda must exceed 1");
  const int n1 = static_cast<int>(fs.q1.size());
  const int n2 = static_cast<int>(fs.q2.size());
  LyapunovParts parts;
  double offset = 0.0;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) offset = std::max(offset, std::fabs(fs.Q1(i, j) + fs.Q2(j, i)));
  parts.zeta = offset + fs.tau * std::log(static_cast<double>(n1 * n2));
  parts.bracket =
      log_sum_exp(fs.q1, fs.tau) + log_sum_exp(fs.q2, fs.tau) - fs.lambda * parts.zeta;
  auto p1 = detail::mat_vec(fs.Q1, fs.pi2);
  auto p2 = detail::mat_vec(fs.Q2, fs.pi1);
  double dist = 0.0;
  for (int i = 0; i < n1; ++i) {
    double r = fs.q1[i] - p1[i];
    dist += r * r;
  }
  for (int j = 0; j < n2; ++j) {
    double r = fs.q2[j] - p2[j];
    dist += r * r;
  }
  parts.distance = dist;
  return parts;
}

// Candidate descent function: clamped bracket plus the belief residuals.
inline double lyapunov_value(const FlowState& fs) {
  LyapunovParts parts = lyapunov_parts(fs);
  return std::max(0.0, parts.bracket) + parts.distance;
}

// Right-hand side of the dynamics: scores relax toward the payoff of the
// opponent's smoothed response, strategies relax toward the smoothed response
// to the own scores. The returned object carries the derivatives in its
// q/pi fields; matrices and parameters are copied through unchanged.
inline FlowState flow_derivative(const FlowState& fs) {
  detail::check_flow_shapes(fs);
  FlowState d = fs;
  auto b1 = smoothed_best_response(fs.q1, fs.tau);
  auto b2 = smoothed_best_response(fs.q2, fs.tau);
  auto t1 = detail::mat_vec(fs.Q1, b2);
  auto t2 = detail::mat_vec(fs.Q2, b1);
  for (std::size_t i = 0; i < fs.q1.size(); ++i) {
    d.q1[i] = t1[i] - fs.q1[i];
    d.pi1[i] = b1[i] - fs.pi1[i];
  }
  for (std::size_t j = 0; j < fs.q2.size(); ++j) {
    d.q2[j] = t2[j] - fs.q2[j];
    d.pi2[j] = b2[j] - fs.pi2[j];
  }
  return d;
}

namespace detail {

inline FlowState flow_step_combine(const FlowState& base, const FlowState& k1,
                                   const FlowState& k2, const FlowState& k3, const FlowState& k4,
                                   double dt) {
  FlowState out = base;
  auto blend = [dt](std::vector<double>& y, const std::vector<double>& a,
                    const std::vector<double>& b, const std::vector<double>& c,
                    const std::vector<double>& d) {
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] += dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
  };
  blend(out.q1, k1.q1, k2.q1, k3.q1, k4.q1);
  blend(out.q2, k1.q2, k2.q2, k3.q2, k4.q2);
  blend(out.pi1, k1.pi1, k2.pi1, k3.pi1, k4.pi1);
  blend(out.pi2, k1.pi2, k2.pi2, k3.pi2, k4.pi2);
  return out;
}

inline FlowState flow_nudge(const FlowState& base, const FlowState& k, double h) {
  FlowState out = base;
  for (std::size_t i = 0; i < out.q1.size(); ++i) out.q1[i] += h * k.q1[i];
  for (std::size_t i = 0; i < out.q2.size(); ++i) out.q2[i] += h * k.q2[i];
  for (std::size_t i = 0; i < out.pi1.size(); ++i) out.pi1[i] += h * k.pi1[i];
  for (std::size_t i = 0; i < out.pi2.size(); ++i) out.pi2[i] += h * k.pi2[i];
  return out;
}

inline void renormalize_simplex(std::vector<double>& p) {
  double sum = 0.0;
  for (double& v : p) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (sum > 0.0)
    for (double& v : p) v /= sum;
}

}  // namespace detail

// Classical fourth-order Runge-Kutta integration of the dynamics over
// `horizon` time units with step `dt`. Returns round(horizon / dt) + 1
// snapshots including the initial state. Strategies are projected back onto
// the simplex after every step to absorb roundoff.
inline std::vector<FlowState> integrate_flow(const FlowState& fs, double horizon, double dt) {
  detail::check_flow_shapes(fs);
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_flow: step size must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument("integrate_flow: horizon must be nonnegative");
  const long long steps = std::llround(horizon / dt);
  std::vector<FlowState> traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  traj.push_back(fs);
  FlowState cur = fs;
  for (long long step = 0; step < steps; ++step) {
    FlowState k1 = flow_derivative(cur);
    FlowState k2 = flow_derivative(detail::flow_nudge(cur, k1, dt / 2.0));
    FlowState k3 = flow_derivative(detail::flow_nudge(cur, k2, dt / 2.0));
    FlowState k4 = flow_derivative(detail::flow_nudge(cur, k3, dt));
    cur = detail::flow_step_combine(cur, k1, k2, k3, k4, dt);
    detail::renormalize_simplex(cur.pi1);
    detail::renormalize_simplex(cur.pi2);
    traj.push_back(cur);
  }
  return traj;
}

// Candidate function sampled along one integrated trajectory. max_delta is
// the largest single-step change; the *_above_floor fields restrict to steps
// whose starting value exceeds `floor`, where strict descent is expected.
struct FlowDescentReport {
  std::vector<double> values;
  double max_delta = 0.0;
  double max_delta_above_floor = 0.0;
  long long steps_above_floor = 0;
};

inline FlowDescentReport flow_descent(const FlowState& fs, double horizon, double dt,
                                      double floor) {
  auto traj = integrate_flow(fs, horizon, dt);
  FlowDescentReport report;
  report.values.reserve(traj.size());
  for (const FlowState& state : traj) report.values.push_back(lyapunov_value(state));
  bool first = true, first_above = true;
  for (std::size_t k = 0; k + 1 < report.values.size(); ++k) {
    double delta = report.values[k + 1] - report.values[k];
    if (first || delta > report.max_delta) report.max_delta = delta;
    first = false;
    if (report.values[k] > floor) {
      ++report.steps_above_floor;
      if (first_above || delta > report.max_delta_above_floor)
        report.max_delta_above_floor = delta;
      first_above = false;
    }
  }
  return report;
}

}  // namespace zsmg
