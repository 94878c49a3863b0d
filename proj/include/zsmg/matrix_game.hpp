#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "zsmg/mat.hpp"

namespace zsmg {

// Minimax solution of a finite zero-sum matrix game. The row player
// maximizes, the column player minimizes. `value` is the midpoint of the
// guarantee bracket established by the two returned strategies and
// `duality_gap` is the bracket's width, so the true game value always lies
// within duality_gap/2 of `value`.
struct MatrixSolution {
  double value = 0.0;
  std::vector<double> row_strategy;
  std::vector<double> col_strategy;
  double duality_gap = 0.0;
};

namespace detail {

// Primal simplex for: maximize sum(u) subject to M u <= 1, u >= 0, where all
// entries of M are >= 1. The origin is feasible and the feasible set is
// bounded, so a single phase with Bland's rule always terminates at the
// optimum. Returns the optimal u.
inline std::vector<double> simplex_game_lp(const Mat& M) {
  const int m = M.rows();
  const int n = M.cols();
  const int cols = n + m + 1;  // structural vars, slacks, rhs
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols, 0.0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) t[i][j] = M(i, j);
    t[i][n + i] = 1.0;
    t[i][cols - 1] = 1.0;
  }
  for (int j = 0; j < n; ++j) t[m][j] = -1.0;  // minimize -sum(u)

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const double eps = 1e-11;
  const int max_iters = 200 * (m + n) + 1000;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Bland: entering variable is the lowest-index column with a negative
    // reduced cost, which rules out cycling.
    int enter = -1;
    for (int j = 0; j < n + m; ++j)
      if (t[m][j] < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) {
      std::vector<double> u(n, 0.0);
      for (int i = 0; i < m; ++i)
        if (basis[i] < n) u[basis[i]] = t[i][cols - 1];
      return u;
    }
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (t[i][enter] > eps) {
        const double ratio = t[i][cols - 1] / t[i][enter];
        if (ratio < best_ratio - 1e-15 ||
            (ratio < best_ratio + 1e-15 && (leave < 0 || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw std::runtime_error("matrix_value: LP unbounded");
    const double pivot = t[leave][enter];
    for (int j = 0; j < cols; ++j) t[leave][j] /= pivot;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t[i][enter];
      if (f == 0.0) continue;
      for (int j = 0; j < cols; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
  throw std::runtime_error("matrix_value: simplex iteration limit reached");
}

// Column player's optimal mixture for payoff matrix P, obtained from the
// scaled LP after shifting all entries to be at least 1.
inline std::vector<double> cap_strategy(const Mat& P) {
  double lo = P.a[0];
  for (double v : P.a) lo = std::min(lo, v);
  Mat M(P.rows(), P.cols());
  for (std::size_t k = 0; k < P.a.size(); ++k) M.a[k] = P.a[k] + (1.0 - lo);
  std::vector<double> u = simplex_game_lp(M);
  double total = 0.0;
  for (double v : u) total += v;
  if (!(total > 0.0)) throw std::runtime_error("matrix_value: degenerate LP mass");
  std::vector<double> y(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) y[j] = std::max(0.0, u[j] / total);
  double s = 0.0;
  for (double v : y) s += v;
  for (double& v : y) v /= s;
  return y;
}

}  // namespace detail

inline MatrixSolution matrix_value(const Mat& payoff, double tol = 1e-10) {
  const int m = payoff.rows();
  const int n = payoff.cols();
  if (m <= 0 || n <= 0 || payoff.a.empty())
    throw std::invalid_argument("matrix_value: empty payoff matrix");

  MatrixSolution sol;
  if (m == 1 && n == 1) {
    sol.value = payoff(0, 0);
    sol.row_strategy = {1.0};
    sol.col_strategy = {1.0};
    return sol;
  }
  if (m == 1) {
    // single row: the column player picks the smallest entry
    int best = 0;
    for (int j = 1; j < n; ++j)
      if (payoff(0, j) < payoff(0, best)) best = j;
    sol.value = payoff(0, best);
    sol.row_strategy = {1.0};
    sol.col_strategy.assign(n, 0.0);
    sol.col_strategy[best] = 1.0;
    return sol;
  }
  if (n == 1) {
    // single column: the row player picks the largest entry
    int best = 0;
    for (int i = 1; i < m; ++i)
      if (payoff(i, 0) > payoff(best, 0)) best = i;
    sol.value = payoff(best, 0);
    sol.col_strategy = {1.0};
    sol.row_strategy.assign(m, 0.0);
    sol.row_strategy[best] = 1.0;
    return sol;
  }

  // Column player's cap strategy from the game itself; row player's guarantee
  // strategy is the cap strategy of the negated transpose.
  sol.col_strategy = detail::cap_strategy(payoff);
  Mat neg_t(n, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) neg_t(j, i) = -payoff(i, j);
  sol.row_strategy = detail::cap_strategy(neg_t);

  // Certify both strategies directly against the original matrix.
  double guarantee = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    double col_payoff = 0.0;
    for (int i = 0; i < m; ++i) col_payoff += sol.row_strategy[i] * payoff(i, j);
    guarantee = std::min(guarantee, col_payoff);
  }
  double cap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    double row_payoff = 0.0;
    for (int j = 0; j < n; ++j) row_payoff += sol.col_strategy[j] * payoff(i, j);
    cap = std::max(cap, row_payoff);
  }
  sol.value = 0.5 * (guarantee + cap);
  sol.duality_gap = std::max(0.0, cap - guarantee);
  double scale = 0.0;
  for (double v : payoff.a) scale = std::max(scale, std::fabs(v));
  if (sol.duality_gap > tol * std::max(1.0, scale))
    throw std::runtime_error("matrix_value: duality gap " +
                             std::to_string(sol.duality_gap) + " exceeds tolerance");
  return sol;
}

}  // namespace zsmg
