#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace zsmg {

// Deterministic random source. All sampling used by the experiment harness
// goes through this wrapper so that a run is reproducible from its seed
// alone, independent of platform differences in std::distribution objects
// (the standard pins the mt19937_64 stream but not the distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased
  // for every n, not just powers of two.
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t span = (UINT64_MAX / un) * un;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= span);
    return static_cast<int>(x % un);
  }

  // Draw an index according to a probability vector via inverse CDF.
  // Entries with zero probability are never selected; if accumulated
  // rounding error exhausts the mass early, the last positive entry wins.
  int categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty distribution");
    const double u = uniform();
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) {
        last_positive = static_cast<int>(i);
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
      }
    }
    if (last_positive < 0) throw std::invalid_argument("categorical: no positive mass");
    return last_positive;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace zsmg
