#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsmg/schedules.hpp"

namespace zsmg {

// softmax(q / tau) with max-subtraction for overflow safety. Every entry is
// kept strictly positive even when the exponential underflows, since callers
// divide by these probabilities.
inline std::vector<double> smoothed_best_response(const std::vector<double>& q, double tau) {
  if (q.empty()) throw std::invalid_argument("smoothed_best_response: empty q vector");
  if (!(tau > 0.0))
    throw std::invalid_argument("smoothed_best_response: temperature must be positive");
  double top = q[0];
  for (double v : q) top = std::max(top, v);
  std::vector<double> p(q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double e = std::exp((q[i] - top) / tau);
    if (e < DBL_MIN) e = DBL_MIN;
    p[i] = e;
    sum += e;
  }
  for (double& v : p) v /= sum;
  return p;
}

// Deferred q update carried from the previous stage: the payoff of that
// stage's action can only be scored once the successor state's value
// estimate is observable, at the start of the next stage.
struct PendingUpdate {
  int state = 0;
  int action = 0;
  double action_prob = 0.0;
  long long alpha_count = 0;
  double reward = 0.0;
};

// One player's complete learning state. The agent sees only the current
// state, its own action, and its own reward; it never touches the game's
// kernel, payoff tensor, or the opponent. A stage is driven by begin_stage
// (returns the play distribution) followed by finish_stage (records the
// drawn action and reward).
class AgentState {
 public:
  AgentState(std::vector<int> actions_per_state, double gamma, double d_bound)
      : actions_(std::move(actions_per_state)), gamma_(gamma), d_bound_(d_bound) {
    if (actions_.empty()) throw std::invalid_argument("AgentState: no states");
    if (!(gamma_ >= 0.0 && gamma_ < 1.0))
      throw std::invalid_argument("AgentState: gamma must lie in [0, 1)");
    if (!(d_bound_ > 0.0)) throw std::invalid_argument("AgentState: d_bound must be positive");
    for (int n : actions_) {
      if (n < 1) throw std::invalid_argument("AgentState: empty action set");
      q_.emplace_back(n, 0.0);
      pi_avg_.emplace_back(n, 1.0 / n);
    }
    v_.assign(actions_.size(), 0.0);
    visits_.assign(actions_.size(), 0);
  }

  // Applies the deferred q update from the previous stage (scored against
  // this state's current value estimate), increments this state's counter,
  // and returns the smoothed best response for the harness to draw from.
  std::vector<double> begin_stage(int state, const ScheduleConfig& cfg) {
    check_state(state);
    if (in_stage_) throw std::logic_error("begin_stage: previous stage not finished");
    if (pending_) {
      const double ratio = cfg.alpha(pending_->alpha_count) / pending_->action_prob;
      const double w = ratio < 1.0 ? ratio : 1.0;
      last_weight_ = w;
      double& entry = q_[pending_->state][pending_->action];
      const double target = pending_->reward + gamma_ * v_[state];
      entry = (w == 1.0) ? target : entry + w * (target - entry);
      entry = std::clamp(entry, -d_bound_, d_bound_);
      pending_.reset();
    }
    ++visits_[state];
    in_stage_ = true;
    stage_state_ = state;
    return smoothed_best_response(q_[state], cfg.tau(visits_[state]));
  }

  // Records the outcome of the stage begun at `state`: slow value update
  // toward the play-weighted q, step-weighted strategy average, and the
  // pending record for the next deferred q update.
  void finish_stage(int state, int action, double reward, const std::vector<double>& pi_bar,
                    const ScheduleConfig& cfg) {
    if (!in_stage_ || state != stage_state_)
      throw std::logic_error("finish_stage: no matching begin_stage");
    if (action < 0 || action >= actions_[state])
      throw std::out_of_range("finish_stage: action " + std::to_string(action) +
                              " out of range at state " + std::to_string(state));
    const double r_bound = d_bound_ * (1.0 - gamma_);
    if (!(std::fabs(reward) <= r_bound + 1e-9 * std::max(1.0, r_bound)))
      throw std::invalid_argument("finish_stage: |reward| " + std::to_string(reward) +
                                  " exceeds the bound " + std::to_string(r_bound));
    if (static_cast<int>(pi_bar.size()) != actions_[state])
      throw std::invalid_argument("finish_stage: pi_bar size mismatch");

    const long long c = visits_[state];
    double dot = 0.0;
    for (int i = 0; i < actions_[state]; ++i) dot += pi_bar[i] * q_[state][i];
    const double beta = cfg.beta(c);
    v_[state] = (beta == 1.0) ? dot : v_[state] + beta * (dot - v_[state]);
    v_[state] = std::clamp(v_[state], -d_bound_, d_bound_);

    const double alpha = cfg.alpha(c);
    for (int i = 0; i < actions_[state]; ++i) {
      pi_avg_[state][i] = (alpha == 1.0)
                              ? pi_bar[i]
                              : pi_avg_[state][i] + alpha * (pi_bar[i] - pi_avg_[state][i]);
    }

    pending_ = PendingUpdate{state, action, pi_bar[action], c, reward};
    in_stage_ = false;
    stage_state_ = -1;
  }

  long long visit_count(int state) const {
    check_state(state);
    return visits_[state];
  }
  const std::vector<double>& q_values(int state) const {
    check_state(state);
    return q_[state];
  }
  double value(int state) const {
    check_state(state);
    return v_[state];
  }
  const std::vector<double>& empirical_strategy(int state) const {
    check_state(state);
    return pi_avg_[state];
  }
  const std::optional<PendingUpdate>& pending() const { return pending_; }
  double last_step_weight() const { return last_weight_; }
  int num_states() const { return static_cast<int>(actions_.size()); }
  int num_actions(int state) const {
    check_state(state);
    return actions_[state];
  }
  double gamma() const { return gamma_; }
  double d_bound() const { return d_bound_; }

  // Is the min{1, .} clamp on the normalized q step provably inactive at this
  // state's current counter (and, by monotone schedules, ever after on the
  // cooling curve)?
  bool reduced_update_active(const ScheduleConfig& cfg, int state) const {
    check_state(state);
    const long long c = visits_[state];
    if (c < 1) return false;
    const double product = cfg.alpha(c) * std::exp(2.0 * d_bound_ / cfg.tau(c));
    return product <= 1.0 / actions_[state];
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["actions"] = actions_;
    j["gamma"] = gamma_;
    j["d_bound"] = d_bound_;
    j["q"] = q_;
    j["v"] = v_;
    j["pi_avg"] = pi_avg_;
    j["visits"] = visits_;
    j["last_step_weight"] = last_weight_;
    if (pending_) {
      j["pending"] = {{"state", pending_->state},
                      {"action", pending_->action},
                      {"action_prob", pending_->action_prob},
                      {"alpha_count", pending_->alpha_count},
                      {"reward", pending_->reward}};
    } else {
      j["pending"] = nullptr;
    }
    return j;
  }

  static AgentState from_json(const nlohmann::json& j) {
    try {
      AgentState agent(j.at("actions").get<std::vector<int>>(), j.at("gamma").get<double>(),
                       j.at("d_bound").get<double>());
      agent.q_ = j.at("q").get<std::vector<std::vector<double>>>();
      agent.v_ = j.at("v").get<std::vector<double>>();
      agent.pi_avg_ = j.at("pi_avg").get<std::vector<std::vector<double>>>();
      agent.visits_ = j.at("visits").get<std::vector<long long>>();
      agent.last_weight_ = j.at("last_step_weight").get<double>();
      const auto& p = j.at("pending");
      if (!p.is_null()) {
        PendingUpdate pu;
        pu.state = p.at("state").get<int>();
        pu.action = p.at("action").get<int>();
        pu.action_prob = p.at("action_prob").get<double>();
        pu.alpha_count = p.at("alpha_count").get<long long>();
        pu.reward = p.at("reward").get<double>();
        agent.pending_ = pu;
      }
      return agent;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("AgentState::from_json: malformed document: ") +
                               e.what());
    }
  }

 private:
  void check_state(int state) const {
    if (state < 0 || state >= static_cast<int>(actions_.size()))
      throw std::out_of_range("AgentState: state " + std::to_string(state) + " out of range");
  }

  std::vector<int> actions_;
  double gamma_ = 0.0;
  double d_bound_ = 0.0;
  std::vector<std::vector<double>> q_;
  std::vector<double> v_;
  std::vector<std::vector<double>> pi_avg_;
  std::vector<long long> visits_;
  std::optional<PendingUpdate> pending_;
  double last_weight_ = 0.0;
  bool in_stage_ = false;
  int stage_state_ = -1;
};

}  // namespace zsmg
