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

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "favor/matrix.hpp"
#include "favor/random.hpp"

namespace favor {

// ============================================================
// Projection descriptors
// ============================================================
// A Projection is an M x d random matrix W, stored either explicitly or as
// structured factors that admit a matrix-free apply. Entries are always
// drawn against the standard Gaussian; any kernel bandwidth is the feature
// map's business (via its input scale), never the sampler's.

enum class ProjectionKind : std::uint32_t {
  kIid = 0,       // iid standard normal rows
  kRorf = 1,      // per-block Gram-Schmidt orthogonalization of a Gaussian draw
  kHorf = 2,      // per-block products of sign-flipped Walsh-Hadamard factors
  kGorf = 3,      // per-block products of random Givens rotations
  kExplicit = 4,  // caller-supplied matrix (test hook, fixtures)
};

inline const char* projection_kind_name(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::kIid: return "iid";
    case ProjectionKind::kRorf: return "rorf";
    case ProjectionKind::kHorf: return "horf";
    case ProjectionKind::kGorf: return "gorf";
    case ProjectionKind::kExplicit: return "explicit";
  }
  return "unknown";
}

inline ProjectionKind parse_projection_kind(const std::string& name) {
  for (std::uint32_t v = 0; v <= 4; ++v) {
    const ProjectionKind kind = static_cast<ProjectionKind>(v);
    if (name == projection_kind_name(kind)) return kind;
  }
  throw std::domain_error("unknown sampler: " + name);
}

// Row-norm convention for orthogonalized rows. Chi re-draws each row's norm
// as the norm of an independent iid Gaussian d-vector, which preserves the
// per-row marginal distribution of the iid sampler. Fixed uses sqrt(d), the
// concentration point of that norm.
enum class NormMode : std::uint32_t {
  kChi = 0,
  kFixedSqrtD = 1,
};

// One plane rotation: mixes coordinates i < j by angle theta.
struct GivensRotation {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double theta = 0.0;
};

struct Projection {
  ProjectionKind kind = ProjectionKind::kIid;
  std::size_t d = 0;
  std::size_t M = 0;
  std::uint64_t seed = 0;

  // Explicit payload (kIid, kRorf, kExplicit).
  Matrix weights;

  // Structured payloads. Blocks are independent; block b covers rows
  // [b * block_rows, ...) of W and the last block may be partial.
  std::size_t padded_dim = 0;     // kHorf: transform dimension, a power of two
  std::size_t num_hd_blocks = 0;  // kHorf: factors per block
  // kHorf: per block, factor-major sign diagonals (num_hd_blocks * padded_dim
  // values in {-1, +1}).
  std::vector<std::vector<double>> hadamard_signs;
  // kGorf: per block, the rotation schedule applied in order.
  std::vector<std::vector<GivensRotation>> givens_blocks;
  // kGorf: one multiplier per row of W.
  std::vector<double> row_scales;

  NormMode norm_mode = NormMode::kChi;  // kRorf resample parameter

  // Rows contributed by one structured block.
  std::size_t block_rows() const {
    return kind == ProjectionKind::kHorf ? padded_dim : d;
  }
};

namespace detail {

inline constexpr double kRankTolerance = 1e-12;

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place unnormalized Walsh-Hadamard transform, n a power of two. The
// underlying matrix is H[r][c] = (-1)^popcount(r & c).
inline void fwht(double* x, std::size_t n) {
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = x[j];
        const double b = x[j + h];
        x[j] = a + b;
        x[j + h] = a - b;
      }
    }
  }
}

inline double hadamard_entry(std::size_t r, std::size_t c) {
  return (std::popcount(r & c) & 1u) ? -1.0 : 1.0;
}

// Modified Gram-Schmidt over the leading `count` rows of `block`, in row
// order. Returns false on a numerically rank-deficient draw.
inline bool orthonormalize_rows(Matrix& block, std::size_t count) {
  const std::size_t d = block.cols();
  for (std::size_t r = 0; r < count; ++r) {
    double* vr = block.row(r);
    for (std::size_t p = 0; p < r; ++p) {
      const double* vp = block.row(p);
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += vr[c] * vp[c];
      for (std::size_t c = 0; c < d; ++c) vr[c] -= dot * vp[c];
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) norm += vr[c] * vr[c];
    norm = std::sqrt(norm);
    if (norm <= kRankTolerance) return false;
    for (std::size_t c = 0; c < d; ++c) vr[c] /= norm;
  }
  return true;
}

inline void check_dims(std::size_t d, std::size_t M, const char* who) {
  require(d >= 1, std::string(who) + ": dimension must be at least 1");
  require(M >= 1, std::string(who) + ": feature count must be at least 1");
}

}  // namespace detail

// ============================================================
// Samplers
// ============================================================

inline Projection sample_iid(std::size_t d, std::size_t M, std::uint64_t seed) {
  detail::check_dims(d, M, "sample_iid");
  Projection p;
  p.kind = ProjectionKind::kIid;
  p.d = d;
  p.M = M;
  p.seed = seed;
  Rng rng(seed);
  p.weights = random_normal_matrix(M, d, rng);
  return p;
}

// Block-orthogonal rows: each block of up to d rows is a Gaussian draw
// orthonormalized by Gram-Schmidt, then rescaled per norm_mode. Draw order
// per block: the Gaussian rows first, then (chi mode) one norm vector per
// kept row. A rank-deficient block is re-drawn at most three times.
inline Projection sample_rorf(std::size_t d, std::size_t M, std::uint64_t seed,
                              NormMode norm_mode = NormMode::kChi) {
  detail::check_dims(d, M, "sample_rorf");
  Projection p;
  p.kind = ProjectionKind::kRorf;
  p.d = d;
  p.M = M;
  p.seed = seed;
  p.norm_mode = norm_mode;
  p.weights.resize(M, d);

  Rng rng(seed);
  const double fixed_scale = std::sqrt(static_cast<double>(d));
  for (std::size_t base = 0; base < M; base += d) {
    const std::size_t rows = std::min(d, M - base);
    Matrix block;
    bool ok = false;
    for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
      block = random_normal_matrix(rows, d, rng);
      ok = detail::orthonormalize_rows(block, rows);
    }
    if (!ok)
      throw std::domain_error("sample_rorf: rank-deficient block after 3 draws");
    for (std::size_t r = 0; r < rows; ++r) {
      const double scale =
          norm_mode == NormMode::kChi ? chi_norm(d, rng) : fixed_scale;
      for (std::size_t c = 0; c < d; ++c)
        p.weights(base + r, c) = scale * block(r, c);
    }
  }
  return p;
}

// Structured orthogonal rows from Walsh-Hadamard factors. One block is
// sqrt(dp) * prod_f [(1/sqrt(dp)) H D_f] at transform dimension dp, which has
// exactly orthogonal rows of norm sqrt(dp). dp equals d when d is a power of
// two; otherwise pad_to_pow2 must be set, inputs are zero-padded to dp and
// the materialized rows are truncated back to d columns. Sign diagonals are
// drawn factor-major within each block.
inline Projection sample_horf(std::size_t d, std::size_t M, std::uint64_t seed,
                              std::size_t num_hd_blocks = 3,
                              bool pad_to_pow2 = false) {
  detail::check_dims(d, M, "sample_horf");
  require(num_hd_blocks >= 1, "sample_horf: need at least one factor");
  std::size_t dp = d;
  if (!detail::is_pow2(d)) {
    if (!pad_to_pow2)
      throw std::domain_error(
          "sample_horf: dimension must be a power of two (or enable padding)");
    dp = detail::next_pow2(d);
  }

  Projection p;
  p.kind = ProjectionKind::kHorf;
  p.d = d;
  p.M = M;
  p.seed = seed;
  p.padded_dim = dp;
  p.num_hd_blocks = num_hd_blocks;

  Rng rng(seed);
  const std::size_t num_blocks = (M + dp - 1) / dp;
  p.hadamard_signs.resize(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    p.hadamard_signs[b].resize(num_hd_blocks * dp);
    for (double& s : p.hadamard_signs[b]) s = rng.sign();
  }
  return p;
}

// Structured near-orthogonal rows from Givens rotation products. One block is
// the rotation schedule applied to the identity, with each row rescaled by a
// chi draw. num_rotations = 0 requests the default ceil(d * log2(d)) per
// block. Draw order: every block's schedule first (block order), then the M
// row norms (row order).
inline Projection sample_gorf(std::size_t d, std::size_t M, std::uint64_t seed,
                              std::size_t num_rotations = 0) {
  detail::check_dims(d, M, "sample_gorf");
  if (num_rotations == 0 && d > 1) {
    num_rotations = static_cast<std::size_t>(
        std::ceil(static_cast<double>(d) * std::log2(static_cast<double>(d))));
  }
  if (d == 1) num_rotations = 0;

  Projection p;
  p.kind = ProjectionKind::kGorf;
  p.d = d;
  p.M = M;
  p.seed = seed;

  Rng rng(seed);
  const std::size_t num_blocks = (M + d - 1) / d;
  p.givens_blocks.resize(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    p.givens_blocks[b].resize(num_rotations);
    for (GivensRotation& g : p.givens_blocks[b]) {
      std::size_t i = rng.below(d);
      std::size_t j = rng.below(d - 1);
      if (j >= i) ++j;
      if (i > j) std::swap(i, j);
      g.i = static_cast<std::uint32_t>(i);
      g.j = static_cast<std::uint32_t>(j);
      g.theta = rng.uniform(0.0, 2.0 * std::numbers::pi_v<double>);
    }
  }
  p.row_scales.resize(M);
  for (std::size_t r = 0; r < M; ++r) p.row_scales[r] = chi_norm(d, rng);
  return p;
}

inline Projection explicit_projection(Matrix weights) {
  require(weights.rows() >= 1 && weights.cols() >= 1,
          "explicit_projection: matrix must be nonempty");
  Projection p;
  p.kind = ProjectionKind::kExplicit;
  p.d = weights.cols();
  p.M = weights.rows();
  p.weights = std::move(weights);
  return p;
}

inline Projection identity_projection(std::size_t d) {
  Matrix eye(d, d);
  for (std::size_t i = 0; i < d; ++i) eye(i, i) = 1.0;
  return explicit_projection(std::move(eye));
}

// Fresh draw of the same configuration. Explicit payloads have no generative
// configuration to re-run.
inline Projection resample(const Projection& p, std::uint64_t new_seed) {
  switch (p.kind) {
    case ProjectionKind::kIid:
      return sample_iid(p.d, p.M, new_seed);
    case ProjectionKind::kRorf:
      return sample_rorf(p.d, p.M, new_seed, p.norm_mode);
    case ProjectionKind::kHorf:
      return sample_horf(p.d, p.M, new_seed, p.num_hd_blocks,
                         p.padded_dim != p.d);
    case ProjectionKind::kGorf: {
      const std::size_t rotations =
          p.givens_blocks.empty() ? 0 : p.givens_blocks.front().size();
      return sample_gorf(p.d, p.M, new_seed, rotations);
    }
    case ProjectionKind::kExplicit:
      throw std::invalid_argument("resample: explicit projections have no seed");
  }
  throw std::invalid_argument("resample: unknown projection kind");
}

// ============================================================
// Materialization and application
// ============================================================

// Dense M x d form. Structured kinds are expanded through explicit factor
// products (dense Hadamard entries, dense rotation updates), deliberately not
// through the fast apply path, so the two routes check each other.
inline Matrix materialize(const Projection& p) {
  switch (p.kind) {
    case ProjectionKind::kIid:
    case ProjectionKind::kRorf:
    case ProjectionKind::kExplicit:
      return p.weights;
    case ProjectionKind::kHorf: {
      const std::size_t dp = p.padded_dim;
      Matrix out(p.M, p.d);
      for (std::size_t b = 0; b < p.hadamard_signs.size(); ++b) {
        const std::vector<double>& signs = p.hadamard_signs[b];
        // Product of the block's factors, left factor first.
        Matrix prod;
        for (std::size_t f = 0; f < p.num_hd_blocks; ++f) {
          Matrix factor(dp, dp);
          const double* diag = signs.data() + f * dp;
          const double inv = 1.0 / std::sqrt(static_cast<double>(dp));
          for (std::size_t r = 0; r < dp; ++r)
            for (std::size_t c = 0; c < dp; ++c)
              factor(r, c) = inv * detail::hadamard_entry(r, c) * diag[c];
          prod = (f == 0) ? std::move(factor) : matmul(prod, factor);
        }
        const double scale = std::sqrt(static_cast<double>(dp));
        const std::size_t base = b * dp;
        const std::size_t rows = std::min(dp, p.M - base);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < p.d; ++c)
            out(base + r, c) = scale * prod(r, c);
      }
      return out;
    }
    case ProjectionKind::kGorf: {
      Matrix out(p.M, p.d);
      for (std::size_t b = 0; b < p.givens_blocks.size(); ++b) {
        Matrix q(p.d, p.d);
        for (std::size_t i = 0; i < p.d; ++i) q(i, i) = 1.0;
        for (const GivensRotation& g : p.givens_blocks[b]) {
          const double c = std::cos(g.theta), s = std::sin(g.theta);
          double* ri = q.row(g.i);
          double* rj = q.row(g.j);
          for (std::size_t col = 0; col < p.d; ++col) {
            const double a = ri[col], bv = rj[col];
            ri[col] = c * a + s * bv;
            rj[col] = -s * a + c * bv;
          }
        }
        const std::size_t base = b * p.d;
        const std::size_t rows = std::min(p.d, p.M - base);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t col = 0; col < p.d; ++col)
            out(base + r, col) = p.row_scales[base + r] * q(r, col);
      }
      return out;
    }
  }
  throw std::invalid_argument("materialize: unknown projection kind");
}

// out = W X^T for X holding one input per row (n x d), so out is M x n.
// Structured kinds run matrix-free: per input, a Hadamard block costs
// O(num_hd_blocks * dp log dp) and a Givens block O(num_rotations).
inline void apply_projection_into(const Projection& p, const Matrix& x,
                                  Matrix& out) {
  require(x.cols() == p.d, "apply_projection: input dimension disagrees");
  const std::size_t n = x.rows();
  if (out.rows() != p.M || out.cols() != n) out.resize(p.M, n);

  switch (p.kind) {
    case ProjectionKind::kIid:
    case ProjectionKind::kRorf:
    case ProjectionKind::kExplicit: {
      const std::size_t m = p.M, d = p.d;
      for (std::size_t r = 0; r < m; ++r) {
        const double* wrow = p.weights.row(r);
        double* orow = out.row(r);
        for (std::size_t c = 0; c < n; ++c) {
          const double* xrow = x.row(c);
          double acc = 0.0;
          for (std::size_t t = 0; t < d; ++t) acc += wrow[t] * xrow[t];
          orow[c] = acc;
        }
      }
      return;
    }
    case ProjectionKind::kHorf: {
      const std::size_t dp = p.padded_dim;
      // sqrt(dp) row scale folded with the per-factor 1/sqrt(dp) normalizers.
      const double scale = std::pow(static_cast<double>(dp),
                                    0.5 * (1.0 - static_cast<double>(p.num_hd_blocks)));
      std::vector<double> buf(dp);
      for (std::size_t c = 0; c < n; ++c) {
        const double* xrow = x.row(c);
        for (std::size_t b = 0; b < p.hadamard_signs.size(); ++b) {
          const std::vector<double>& signs = p.hadamard_signs[b];
          std::copy(xrow, xrow + p.d, buf.begin());
          std::fill(buf.begin() + p.d, buf.end(), 0.0);
          // Rightmost factor acts first.
          for (std::size_t f = p.num_hd_blocks; f-- > 0;) {
            const double* diag = signs.data() + f * dp;
            for (std::size_t t = 0; t < dp; ++t) buf[t] *= diag[t];
            detail::fwht(buf.data(), dp);
          }
          const std::size_t base = b * dp;
          const std::size_t rows = std::min(dp, p.M - base);
          for (std::size_t r = 0; r < rows; ++r)
            out(base + r, c) = scale * buf[r];
        }
      }
      return;
    }
    case ProjectionKind::kGorf: {
      // Rotation angles are applied to every input, so evaluate the
      // trigonometry once up front.
      struct Plane {
        std::uint32_t i, j;
        double c, s;
      };
      std::vector<std::vector<Plane>> schedule(p.givens_blocks.size());
      for (std::size_t b = 0; b < p.givens_blocks.size(); ++b) {
        schedule[b].reserve(p.givens_blocks[b].size());
        for (const GivensRotation& g : p.givens_blocks[b])
          schedule[b].push_back(
              {g.i, g.j, std::cos(g.theta), std::sin(g.theta)});
      }
      std::vector<double> buf(p.d);
      for (std::size_t c = 0; c < n; ++c) {
        const double* xrow = x.row(c);
        for (std::size_t b = 0; b < schedule.size(); ++b) {
          std::copy(xrow, xrow + p.d, buf.begin());
          for (const Plane& g : schedule[b]) {
            const double a = buf[g.i], bv = buf[g.j];
            buf[g.i] = g.c * a + g.s * bv;
            buf[g.j] = -g.s * a + g.c * bv;
          }
          const std::size_t base = b * p.d;
          const std::size_t rows = std::min(p.d, p.M - base);
          for (std::size_t r = 0; r < rows; ++r)
            out(base + r, c) = p.row_scales[base + r] * buf[r];
        }
      }
      return;
    }
  }
  throw std::invalid_argument("apply_projection: unknown projection kind");
}

inline Matrix apply_projection(const Projection& p, const Matrix& x) {
  Matrix out;
  apply_projection_into(p, x, out);
  return out;
}

}  // namespace favor
