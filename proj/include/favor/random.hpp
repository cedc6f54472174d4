// Copyright 2026 The favor Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "favor/matrix.hpp"

namespace favor {

// Draws must be bit-identical for a given seed on every platform, so only the
// fully specified mt19937_64 engine is used and the variate transforms are
// spelled out here instead of going through the standard distributions (whose
// output is implementation-defined).

inline constexpr std::uint64_t kSeedGamma = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream seed for substream `index` of a master seed. Used for per-trial and
// per-component streams so reordering or parallelizing trials cannot change
// any draw.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + (index + 1) * kSeedGamma);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(bits() >> 11) * 0x1.0p-53;
  }

  // (0, 1]; safe as a log argument.
  double uniform_pos() {
    return (static_cast<double>(bits() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the second variate of each pair is kept for the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double a = 2.0 * std::numbers::pi_v<double> * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double sign() { return (bits() >> 63) ? -1.0 : 1.0; }

  // Uniform in {0, ..., n-1}. Modulo bias is negligible at the dimensions
  // used here and keeps the draw count per call fixed.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(bits() % static_cast<std::uint64_t>(n));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Row-major fill order, one stream.
inline Matrix random_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix out(rows, cols);
  double* p = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) p[i] = rng.normal();
  return out;
}

// Euclidean norm of a fresh iid standard normal d-vector; the row-norm draw
// behind the chi scaling mode.
inline double chi_norm(std::size_t d, Rng& rng) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double g = rng.normal();
    acc += g * g;
  }
  return std::sqrt(acc);
}

}  // namespace favor
