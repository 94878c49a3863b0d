#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "zsmg/schedules.hpp"

using zsmg::ScheduleConfig;
using zsmg::TemperatureMode;

namespace {

ScheduleConfig cooling_to_zero() {
  ScheduleConfig cfg;
  cfg.rho_alpha = 0.9;
  cfg.rho_beta = 1.0;
  cfg.rho = 0.7;
  cfg.tau_bar = 0.07;
  cfg.epsilon = 0.0;
  cfg.mode = TemperatureMode::kToZero;
  cfg.d_bound = 2.5;
  return cfg;
}

ScheduleConfig cooling_to_epsilon() {
  ScheduleConfig cfg;
  cfg.rho_alpha = 0.9;
  cfg.rho_beta = 1.0;
  cfg.rho = 0.7;
  cfg.tau_bar = 4.5e4;
  cfg.epsilon = 2e-4;
  cfg.mode = TemperatureMode::kToEpsilon;
  cfg.d_bound = 2.5;
  return cfg;
}

}  // namespace

TEST_CASE("step sizes follow the power laws") {
  auto cfg = cooling_to_zero();
  CHECK(cfg.alpha(1) == 1.0);
  CHECK(std::fabs(cfg.alpha(2) - 0.5358867312681466) <= 1e-9);  // 2^-0.9
  CHECK(cfg.beta(1) == 1.0);
  CHECK(std::fabs(cfg.beta(4) - 0.25) <= 1e-15);
  double prev_a = 2.0, prev_b = 2.0;
  for (long long c = 1; c <= 10000; c = c * 3 + 1) {
    double a = cfg.alpha(c), b = cfg.beta(c);
    CHECK(a <= prev_a);
    CHECK(b <= prev_b);
    CHECK(b <= a + 1e-15);  // beta runs on the slower timescale
    CHECK(a > 0.0);
    prev_a = a;
    prev_b = b;
  }
  CHECK_THROWS_AS(cfg.alpha(0), std::invalid_argument);
  CHECK_THROWS_AS(cfg.tau(0), std::invalid_argument);
}

TEST_CASE("temperature starts at tau_bar in every mode") {
  CHECK(cooling_to_zero().tau(1) == 0.07);
  CHECK(cooling_to_epsilon().tau(1) == 4.5e4);
  auto cfg = cooling_to_zero();
  cfg.mode = TemperatureMode::kMaxEpsilon;
  cfg.epsilon = 0.01;
  CHECK(cfg.tau(1) == 0.07);
}

TEST_CASE("temperature is non-increasing and approaches its limit") {
  for (auto cfg : {cooling_to_zero(), cooling_to_epsilon()}) {
    double prev = cfg.tau(1);
    for (long long c = 2; c <= 1000000; c *= 4) {
      double t = cfg.tau(c);
      CHECK(t <= prev + 1e-15);
      CHECK(t > cfg.tau_limit() - 1e-15);
      prev = t;
    }
  }
  auto cfg = cooling_to_epsilon();
  CHECK(cfg.tau_limit() == 2e-4);
  CHECK(std::fabs(cfg.tau(100000000000LL) - 2e-4) / 2e-4 <= 0.1);
  CHECK(cooling_to_zero().tau_limit() == 0.0);
}

TEST_CASE("cooling-to-zero keeps the step-temperature product invariant") {
  // alpha(c)^rho * exp(4 D / tau(c)) must stay pinned at exp(4 D / tau_bar)
  auto cfg = cooling_to_zero();
  const double reference = 4.0 * cfg.d_bound / cfg.tau_bar;
  for (long long c : {1LL, 10LL, 1000LL, 1000000LL}) {
    double lhs = std::pow(cfg.alpha(c), cfg.rho) * std::exp(4.0 * cfg.d_bound / cfg.tau(c));
    double rhs = std::exp(reference);
    CHECK(std::fabs(lhs - rhs) / rhs <= 1e-9);
  }
}

TEST_CASE("temperature decrement shrinks faster than the q step") {
  auto cfg = cooling_to_epsilon();
  double prev = std::numeric_limits<double>::infinity();
  for (long long c = 100; c <= 1000000; c *= 10) {
    double ratio = std::fabs((cfg.tau(c + 1) - cfg.tau(c)) / cfg.alpha(c));
    CHECK(ratio < prev);
    prev = ratio;
  }
  // closed form at moderate counters: c^rho_alpha / (c (c+1)) * (eps - tau_bar)
  for (long long c : {100LL, 1000LL, 10000LL}) {
    double actual = (cfg.tau(c + 1) - cfg.tau(c)) / cfg.alpha(c);
    double expected = std::pow(static_cast<double>(c), cfg.rho_alpha) /
                      (static_cast<double>(c) * (c + 1)) * (cfg.epsilon - cfg.tau_bar);
    CHECK(std::fabs(actual - expected) <= 1e-6 * std::fabs(expected));
  }
}

TEST_CASE("schedule validation accepts the working configurations") {
  CHECK(zsmg::validate_schedule(cooling_to_zero()).valid());
  CHECK(zsmg::validate_schedule(cooling_to_epsilon()).valid());
}

TEST_CASE("schedule validation flags broken exponents") {
  auto cfg = cooling_to_zero();
  cfg.rho_alpha = 0.5;
  CHECK_FALSE(zsmg::validate_schedule(cfg).valid());

  cfg = cooling_to_zero();
  cfg.rho_beta = 0.8;  // not slower than alpha
  CHECK_FALSE(zsmg::validate_schedule(cfg).valid());

  cfg = cooling_to_zero();
  cfg.rho = 1.5;  // needs rho < 2 - 1/rho_alpha ~ 0.888
  CHECK_FALSE(zsmg::validate_schedule(cfg).valid());

  cfg = cooling_to_epsilon();
  cfg.epsilon = 0.0;
  CHECK_FALSE(zsmg::validate_schedule(cfg).valid());

  cfg = cooling_to_epsilon();
  cfg.epsilon = cfg.tau_bar * 2;  // temperature would increase
  CHECK_FALSE(zsmg::validate_schedule(cfg).valid());

  cfg = cooling_to_zero();
  cfg.tau_bar = -1.0;
  CHECK_FALSE(zsmg::validate_schedule(cfg).valid());
}

TEST_CASE("clamp-free threshold certifies the defining inequality") {
  // small parameters so the threshold lands in a directly checkable range
  ScheduleConfig cfg;
  cfg.rho_alpha = 0.9;
  cfg.rho_beta = 1.0;
  cfg.rho = 0.7;
  cfg.tau_bar = 2.0;
  cfg.epsilon = 0.5;
  cfg.mode = TemperatureMode::kToEpsilon;
  cfg.d_bound = 0.5;

  auto thr = zsmg::clamp_inactive_threshold(cfg, 3, 3);
  REQUIRE(thr.finite);
  REQUIRE(std::isfinite(thr.c_star));
  REQUIRE(thr.c_star < 1e6);
  auto product_log = [&](long long c) {
    return -cfg.rho_alpha * std::log(static_cast<double>(c)) +
           2.0 * cfg.d_bound / cfg.tau(c) + std::log(3.0);
  };
  long long c0 = static_cast<long long>(thr.c_star);
  for (long long c = c0; c < c0 + 2000; c += 37) CHECK(product_log(c) < 0.0);
  // directly scanned first entry point can be no later than the certificate
  long long first = -1;
  for (long long c = 1; c <= c0; ++c)
    if (product_log(c) < 0.0) {
      first = c;
      break;
    }
  REQUIRE(first > 0);
  CHECK(first <= c0);
}

TEST_CASE("clamp-free threshold is monotone in the action count") {
  auto cfg = cooling_to_zero();
  cfg.d_bound = 0.25;
  auto t2 = zsmg::clamp_inactive_threshold(cfg, 2, 2);
  auto t8 = zsmg::clamp_inactive_threshold(cfg, 8, 2);
  REQUIRE(t2.finite);
  REQUIRE(t8.finite);
  CHECK(t2.log10_c <= t8.log10_c);
}

TEST_CASE("clamp-free threshold stays finite far beyond the double range") {
  // the slow-cooling configuration pushes the threshold to ~1e12064;
  // the certificate must still report a finite magnitude
  auto thr = zsmg::clamp_inactive_threshold(cooling_to_epsilon(), 3, 3);
  REQUIRE(thr.finite);
  CHECK(std::isfinite(thr.log10_c));
  CHECK(thr.log10_c > 1e4);
  CHECK(std::isinf(thr.c_star));
}
