#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "zsmg/game.hpp"
#include "zsmg/rng.hpp"

using zsmg::JointAction;
using zsmg::MarkovGame;

namespace {

// Single-state matching pennies, discount 0.5.
MarkovGame matching_pennies() {
  MarkovGame g;
  g.num_states = 1;
  g.actions1 = {2};
  g.actions2 = {2};
  g.gamma = 0.5;
  g.reward_bound = 1.0;
  zsmg::Mat r(2, 2);
  r(0, 0) = 1.0;
  r(0, 1) = -1.0;
  r(1, 0) = -1.0;
  r(1, 1) = 1.0;
  g.reward1 = {r};
  g.kernel = {zsmg::Mat(4, 1, 1.0)};
  return g;
}

// Deterministic cycle over `n` states: every joint action advances by one.
MarkovGame cycle_game(int n) {
  MarkovGame g;
  g.num_states = n;
  g.actions1.assign(n, 2);
  g.actions2.assign(n, 2);
  g.gamma = 0.5;
  g.reward_bound = 1.0;
  for (int s = 0; s < n; ++s) {
    g.reward1.emplace_back(2, 2, 0.0);
    zsmg::Mat k(4, n, 0.0);
    for (int row = 0; row < 4; ++row) k(row, (s + 1) % n) = 1.0;
    g.kernel.push_back(k);
  }
  return g;
}

// Chain of `n` states: player 1's action 0 advances (cyclically), action 1
// stays put. Player 2 has a single action everywhere.
MarkovGame chain_game(int n) {
  MarkovGame g;
  g.num_states = n;
  g.actions1.assign(n, 2);
  g.actions2.assign(n, 1);
  g.gamma = 0.5;
  g.reward_bound = 1.0;
  for (int s = 0; s < n; ++s) {
    g.reward1.emplace_back(2, 1, 0.0);
    zsmg::Mat k(2, n, 0.0);
    k(0, (s + 1) % n) = 1.0;  // advance
    k(1, s) = 1.0;            // stay
    g.kernel.push_back(k);
  }
  return g;
}

}  // namespace

TEST_CASE("valid game passes validation") {
  auto report = zsmg::validate(matching_pennies());
  CHECK(report.valid());
}

TEST_CASE("kernel row that does not sum to one is reported with indices") {
  auto g = matching_pennies();
  g.kernel[0](2, 0) = 0.9;  // row for (a1=1, a2=0)
  auto report = zsmg::validate(g);
  REQUIRE_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.find("s=0") != std::string::npos && v.find("a1=1") != std::string::npos &&
        v.find("a2=0") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("reward exceeding the bound is reported") {
  auto g = matching_pennies();
  g.reward1[0](0, 1) = -1.5;
  auto report = zsmg::validate(g);
  REQUIRE_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.find("reward") != std::string::npos && v.find("a2=1") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("bad discount and negative kernel entries are reported") {
  auto g = matching_pennies();
  g.gamma = 1.0;
  CHECK_FALSE(zsmg::validate(g).valid());
  g = matching_pennies();
  g.kernel[0](0, 0) = -0.25;
  CHECK_FALSE(zsmg::validate(g).valid());
}

TEST_CASE("existential reachability on hand-checked games") {
  SECTION("two-state deterministic cycle") {
    auto res = zsmg::check_reach_exists(cycle_game(2));
    CHECK(res.holds);
    CHECK(res.horizon == 2);  // returning to the start takes two stages
  }
  SECTION("three-state chain with a stay action") {
    auto res = zsmg::check_reach_exists(chain_game(3));
    CHECK(res.holds);
    // the far state needs two advances; every state can stay at or return to
    // any target within two stages
    CHECK(res.horizon == 2);
  }
  SECTION("absorbing state blocks reachability") {
    auto g = cycle_game(2);
    // state 1 maps to itself under every joint action
    for (int row = 0; row < 4; ++row) {
      g.kernel[1](row, 0) = 0.0;
      g.kernel[1](row, 1) = 1.0;
    }
    auto res = zsmg::check_reach_exists(g);
    CHECK_FALSE(res.holds);
    bool names_pair = false;
    for (auto [from, to] : res.failing_pairs)
      if (from == 1 && to == 0) names_pair = true;
    CHECK(names_pair);
  }
}

TEST_CASE("universal reachability on hand-checked games") {
  SECTION("full support in one step") {
    MarkovGame g = matching_pennies();
    auto res = zsmg::check_reach_universal(g);
    CHECK(res.holds);
    CHECK(res.horizon == 1);
  }
  SECTION("both actions cross with probability at least 0.1") {
    auto g = cycle_game(2);
    for (int s = 0; s < 2; ++s)
      for (int row = 0; row < 4; ++row) {
        g.kernel[s](row, s) = 0.0;
        g.kernel[s](row, 1 - s) = 1.0;
      }
    auto res = zsmg::check_reach_universal(g);
    CHECK(res.holds);
    CHECK(res.horizon == 2);
  }
  SECTION("stay action defeats universal reachability") {
    auto res = zsmg::check_reach_universal(chain_game(3));
    CHECK_FALSE(res.holds);
  }
}

TEST_CASE("universal reachability implies existential") {
  zsmg::Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    // random sparse two-action games over four states
    MarkovGame g;
    g.num_states = 4;
    g.actions1.assign(4, 2);
    g.actions2.assign(4, 2);
    g.gamma = 0.5;
    g.reward_bound = 1.0;
    for (int s = 0; s < 4; ++s) {
      g.reward1.emplace_back(2, 2, 0.0);
      zsmg::Mat k(4, 4, 0.0);
      for (int row = 0; row < 4; ++row) {
        int target = rng.uniform_int(4);
        k(row, target) = 1.0;
      }
      g.kernel.push_back(k);
    }
    if (zsmg::check_reach_universal(g).holds) CHECK(zsmg::check_reach_exists(g).holds);
  }
}

TEST_CASE("transition sampling is deterministic and follows the kernel") {
  auto g = cycle_game(3);
  zsmg::Rng rng(42);
  CHECK(zsmg::sample_transition(g, 1, JointAction{0, 1}, rng) == 2);

  // frequencies on a fair two-way split
  auto mp = matching_pennies();
  MarkovGame two = mp;
  two.num_states = 2;
  two.actions1 = {2, 2};
  two.actions2 = {2, 2};
  two.reward1 = {mp.reward1[0], mp.reward1[0]};
  two.kernel = {zsmg::Mat(4, 2, 0.5), zsmg::Mat(4, 2, 0.5)};
  zsmg::Rng r1(7), r2(7);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits += zsmg::sample_transition(two, 0, {0, 0}, r1);
  CHECK(std::fabs(static_cast<double>(hits) / n - 0.5) < 0.01);
  // identical seed, identical stream
  zsmg::Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i)
    CHECK(zsmg::sample_transition(two, 0, {1, 1}, a) ==
          zsmg::sample_transition(two, 0, {1, 1}, b));
}

TEST_CASE("out-of-range state or action throws") {
  auto g = matching_pennies();
  zsmg::Rng rng(1);
  CHECK_THROWS_AS(zsmg::sample_transition(g, 2, JointAction{0, 0}, rng), std::out_of_range);
  CHECK_THROWS_AS(zsmg::sample_transition(g, 0, JointAction{5, 0}, rng), std::out_of_range);
}

TEST_CASE("json round trip is byte identical") {
  auto g = cycle_game(3);
  g.reward1[1](0, 0) = 0.12345678901234567;
  auto j1 = zsmg::game_to_json(g);
  auto g2 = zsmg::game_from_json(j1);
  auto j2 = zsmg::game_to_json(g2);
  CHECK(j1.dump() == j2.dump());
}

TEST_CASE("load renormalizes tiny drift and rejects gross drift") {
  auto g = matching_pennies();
  g.kernel[0](0, 0) = 1.0 + 5e-10;
  auto fixed = zsmg::game_from_json(zsmg::game_to_json(g));
  CHECK(std::fabs(fixed.kernel[0](0, 0) - 1.0) <= 1e-12);
  CHECK(zsmg::validate(fixed).valid());

  g.kernel[0](0, 0) = 1.001;
  CHECK_THROWS_AS(zsmg::game_from_json(zsmg::game_to_json(g)), std::runtime_error);
}

TEST_CASE("file save and load") {
  namespace fs = std::filesystem;
  auto path = fs::temp_directory_path() / "zsmg_test_game.json";
  auto g = cycle_game(2);
  zsmg::save_game(g, path.string());
  auto loaded = zsmg::load_game(path.string());
  CHECK(zsmg::game_to_json(loaded).dump() == zsmg::game_to_json(g).dump());
  fs::remove(path);
}

TEST_CASE("strategy validation") {
  auto g = matching_pennies();
  zsmg::StationaryStrategy s;
  s.probs = {{0.75, 0.25}};
  CHECK(zsmg::validate_strategy(g, s, 1).valid());
  s.probs = {{0.75, 0.75}};
  CHECK_FALSE(zsmg::validate_strategy(g, s, 1).valid());
  s.probs = {{1.25, -0.25}};
  CHECK_FALSE(zsmg::validate_strategy(g, s, 1).valid());
  s.probs = {{0.5, 0.5}, {0.5, 0.5}};
  CHECK_FALSE(zsmg::validate_strategy(g, s, 1).valid());
}
