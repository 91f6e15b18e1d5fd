// Copyright 2026 The mobrisk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mobrisk {

// Seeded PRNG with platform-independent draws. std::mt19937_64 output is
// fixed by the standard; the distributions below are implemented here
// because the standard library's are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // 53-bit uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  // Uniform in (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Marsaglia polar method; the second variate is cached.
  double normal(double mean, double sd) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sd * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return mean + sd * u * f;
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // Knuth multiplication, applied in chunks so large means stay exact.
  std::int64_t poisson(double mean) {
    std::int64_t total = 0;
    while (mean > 0.0) {
      const double chunk = mean > 20.0 ? 20.0 : mean;
      mean -= chunk;
      const double limit = std::exp(-chunk);
      double prod = uniform_pos();
      while (prod > limit) {
        ++total;
        prod *= uniform_pos();
      }
    }
    return total;
  }

  bool bernoulli(double p) { return uniform_pos() <= p; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mobrisk
