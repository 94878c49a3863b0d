#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "zsmg/validation.hpp"

namespace zsmg {

// How the exploration temperature behaves as a state's visit counter grows:
// decay to a positive floor epsilon, cool all the way to zero at the rate
// tied to the q step size, or follow the cooling curve until it hits the
// floor and stay there.
enum class TemperatureMode { kToEpsilon, kToZero, kMaxEpsilon };

// Per-visit-counter step sizes and temperature. All three sequences are
// non-increasing and indexed from c = 1 (a state's first visit).
struct ScheduleConfig {
  double rho_alpha = 0.9;
  double rho_beta = 1.0;
  double rho = 0.7;  // cooling exponent, used only by the to-zero curve
  double tau_bar = 1.0;
  double epsilon = 0.0;
  TemperatureMode mode = TemperatureMode::kToEpsilon;
  double d_bound = 0.0;  // nonpositive means: derive R/(1-gamma) from the game

  // Fast step for the local q estimates.
  double alpha(long long c) const {
    require_counter(c, "alpha");
    return std::pow(static_cast<double>(c), -rho_alpha);
  }

  // Slow step for the value estimates.
  double beta(long long c) const {
    require_counter(c, "beta");
    return std::pow(static_cast<double>(c), -rho_beta);
  }

  double tau(long long c) const {
    require_counter(c, "tau");
    switch (mode) {
      case TemperatureMode::kToEpsilon: {
        const double inv = 1.0 / static_cast<double>(c);
        return inv * tau_bar + (1.0 - inv) * epsilon;
      }
      case TemperatureMode::kToZero:
        return cooling_curve(c);
      case TemperatureMode::kMaxEpsilon:
        return std::max(epsilon, cooling_curve(c));
    }
    throw std::logic_error("tau: unknown temperature mode");
  }

  double tau_limit() const {
    return mode == TemperatureMode::kToZero ? 0.0 : epsilon;
  }

 private:
  static void require_counter(long long c, const char* what) {
    if (c < 1)
      throw std::invalid_argument(std::string(what) + ": counter must be at least 1");
  }

  // Chosen so that alpha(c)^rho * exp(4 d_bound / tau(c)) is an exact
  // invariant of c.
  double cooling_curve(long long c) const {
    const double k = rho_alpha * rho / (4.0 * d_bound);
    return tau_bar / (1.0 + tau_bar * k * std::log(static_cast<double>(c)));
  }
};

inline ValidationReport validate_schedule(const ScheduleConfig& cfg) {
  ValidationReport report;
  if (!(cfg.rho_alpha > 0.5))
    report.fail("rho_alpha must exceed 0.5, got " + std::to_string(cfg.rho_alpha));
  if (!(cfg.rho_beta > cfg.rho_alpha))
    report.fail("rho_beta must exceed rho_alpha so values move on the slower timescale");
  if (!(cfg.rho_beta <= 1.0))
    report.fail("rho_beta must be at most 1, got " + std::to_string(cfg.rho_beta));
  if (!(cfg.tau_bar > 0.0))
    report.fail("tau_bar must be positive, got " + std::to_string(cfg.tau_bar));
  if (!(cfg.d_bound > 0.0))
    report.fail("d_bound must be positive, got " + std::to_string(cfg.d_bound));

  const bool uses_floor =
      cfg.mode == TemperatureMode::kToEpsilon || cfg.mode == TemperatureMode::kMaxEpsilon;
  const bool uses_cooling =
      cfg.mode == TemperatureMode::kToZero || cfg.mode == TemperatureMode::kMaxEpsilon;
  if (uses_floor) {
    if (!(cfg.epsilon > 0.0))
      report.fail("epsilon must be positive when the temperature has a floor");
    else if (!(cfg.epsilon < cfg.tau_bar))
      report.fail("epsilon must stay below tau_bar or the temperature cannot decrease");
  }
  if (uses_cooling) {
    if (!(cfg.rho > 0.0))
      report.fail("rho must be positive for the cooling curve");
    else if (!((2.0 - cfg.rho) * cfg.rho_alpha > 1.0))
      report.fail("cooling requires (2 - rho) * rho_alpha > 1; got " +
                  std::to_string((2.0 - cfg.rho) * cfg.rho_alpha));
  }
  if (report.valid()) {
    // Derived certificates for the accepted configuration.
    report.note("square-summable q steps: 2*rho_alpha = " +
                std::to_string(2.0 * cfg.rho_alpha) + " > 1");
    if (uses_cooling) {
      report.note("step-temperature product bounded by exp(4*d_bound/tau_bar) = exp(" +
                  std::to_string(4.0 * cfg.d_bound / cfg.tau_bar) + "), baseline constant 1");
      report.note("summable reduced steps: (2 - rho)*rho_alpha = " +
                  std::to_string((2.0 - cfg.rho) * cfg.rho_alpha) + " > 1");
    }
    if (uses_floor)
      report.note("temperature floor epsilon = " + std::to_string(cfg.epsilon));
  }
  return report;
}

// Counter past which the normalized q step provably never clamps for a state
// with the given action counts. `c_star` is the concrete counter when it is
// representable (refined down to the exact entry point of the final window
// where that is cheap); for very slow schedules only its magnitude log10_c
// fits in a double, and c_star reports infinity.
struct ClampFreeThreshold {
  bool finite = false;
  double c_star = std::numeric_limits<double>::infinity();
  double log10_c = std::numeric_limits<double>::infinity();
};

inline ClampFreeThreshold clamp_inactive_threshold(const ScheduleConfig& cfg, int n1,
                                                   int n2) {
  if (n1 < 1 || n2 < 1)
    throw std::invalid_argument("clamp_inactive_threshold: action counts must be positive");
  const double ln_n = std::log(static_cast<double>(std::max(n1, n2)));
  const double d = cfg.d_bound;
  const double inf = std::numeric_limits<double>::infinity();

  // Log-space sufficient conditions for alpha_c * exp(2D/tau_c) < 1/max(n1,n2).
  // With a temperature floor, tau_c >= epsilon bounds the exponential; on the
  // cooling curve the product has the closed form exp(2D/tau_bar) *
  // alpha_c^(1 - rho/2). Either condition is sound on the max-with-floor
  // curve, so that mode takes the smaller certificate.
  double ln_floor = inf;
  if (cfg.epsilon > 0.0) ln_floor = (2.0 * d / cfg.epsilon + ln_n) / cfg.rho_alpha;
  double ln_cooling = inf;
  const double cool_exp = cfg.rho_alpha * (1.0 - 0.5 * cfg.rho);
  if (cool_exp > 0.0) ln_cooling = (2.0 * d / cfg.tau_bar + ln_n) / cool_exp;

  double ln_c = inf;
  switch (cfg.mode) {
    case TemperatureMode::kToEpsilon:
      ln_c = ln_floor;
      break;
    case TemperatureMode::kToZero:
      ln_c = ln_cooling;
      break;
    case TemperatureMode::kMaxEpsilon:
      ln_c = std::min(ln_floor, ln_cooling);
      break;
  }

  ClampFreeThreshold out;
  if (!std::isfinite(ln_c)) return out;
  out.finite = true;
  out.log10_c = ln_c / std::log(10.0);
  if (ln_c >= std::log(1e15)) return out;  // beyond direct representation

  const double bound = 1.0 / static_cast<double>(std::max(n1, n2));
  auto inactive = [&](long long c) {
    return cfg.alpha(c) * std::exp(2.0 * d / cfg.tau(c)) < bound;
  };
  long long c = static_cast<long long>(std::ceil(std::exp(ln_c)));
  if (c < 1) c = 1;
  while (!inactive(c)) ++c;  // absorb rounding of the analytic bound
  for (long long steps = 0; c > 1 && steps < 2000000 && inactive(c - 1); ++steps) --c;
  out.c_star = static_cast<double>(c);
  out.log10_c = std::log10(out.c_star);
  return out;
}

inline const char* temperature_mode_name(TemperatureMode mode) {
  switch (mode) {
    case TemperatureMode::kToEpsilon:
      return "to_epsilon";
    case TemperatureMode::kToZero:
      return "to_zero";
    case TemperatureMode::kMaxEpsilon:
      return "max_epsilon";
  }
  return "unknown";
}

inline TemperatureMode temperature_mode_from_name(const std::string& name) {
  if (name == "to_epsilon") return TemperatureMode::kToEpsilon;
  if (name == "to_zero") return TemperatureMode::kToZero;
  if (name == "max_epsilon") return TemperatureMode::kMaxEpsilon;
  throw std::runtime_error("unknown temperature mode: " + name);
}

inline nlohmann::json schedule_to_json(const ScheduleConfig& cfg) {
  nlohmann::json j;
  j["rho_alpha"] = cfg.rho_alpha;
  j["rho_beta"] = cfg.rho_beta;
  j["rho"] = cfg.rho;
  j["tau_bar"] = cfg.tau_bar;
  j["epsilon"] = cfg.epsilon;
  j["mode"] = temperature_mode_name(cfg.mode);
  j["d_bound"] = cfg.d_bound;
  return j;
}

inline ScheduleConfig schedule_from_json(const nlohmann::json& j) {
  ScheduleConfig cfg;
  try {
    cfg.rho_alpha = j.at("rho_alpha").get<double>();
    cfg.rho_beta = j.at("rho_beta").get<double>();
    cfg.rho = j.at("rho").get<double>();
    cfg.tau_bar = j.at("tau_bar").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.mode = temperature_mode_from_name(j.at("mode").get<std::string>());
    cfg.d_bound = j.at("d_bound").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("schedule_from_json: malformed document: ") +
                             e.what());
  }
  return cfg;
}

}  // namespace zsmg
