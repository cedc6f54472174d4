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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "favor/feature_map.hpp"
#include "favor/matrix.hpp"
#include "favor/random.hpp"

namespace favor {

// ============================================================
// Linear-time attention approximation
// ============================================================
// Both entry points factor the score matrix through feature embeddings
// Q' = diag(g) phi(Q), K' = diag(h) phi(K) and never form an L x L product:
// the bidirectional path multiplies in the bracket order Q' (K'^T [V | 1]),
// the causal path streams a prefix sum of rank-one updates. Working set per
// call: the two L x M embeddings, one M x (width) accumulator or product,
// and the L x (width) result, with width = value columns + 1.

struct FavorConfig {
  FeatureMap feature_map;
  ScalerSpec scaler;
  bool renormalize = true;
  // Added to every attention denominator before dividing; unused when
  // renormalize is off.
  double stabilizer = 1e-6;
  // Calls between feature re-draws under config_for_call; 0 disables.
  std::uint64_t redraw_interval = 0;

  static FavorConfig softmax_defaults(std::size_t d, std::size_t M = 256,
                                      ProjectionKind sampler = ProjectionKind::kRorf,
                                      std::uint64_t seed = 0) {
    FavorConfig cfg;
    cfg.feature_map = make_softmax_map(d, M, sampler, seed);
    cfg.scaler = {ScalerKind::kSoftmaxNorm, ScalerKind::kSoftmaxNorm};
    cfg.renormalize = true;
    cfg.stabilizer = 1e-6;
    return cfg;
  }

  static FavorConfig generalized_defaults(std::size_t d, std::size_t M = 256,
                                          ProjectionKind sampler = ProjectionKind::kRorf,
                                          std::uint64_t seed = 0,
                                          Nonlinearity f = Nonlinearity::kRelu,
                                          double epsilon = 1e-3) {
    FavorConfig cfg;
    cfg.feature_map = make_generalized_map(f, d, M, sampler, seed, epsilon);
    cfg.scaler = {ScalerKind::kUnit, ScalerKind::kUnit};
    cfg.renormalize = true;
    cfg.stabilizer = 0.0;
    return cfg;
  }
};

// Config for the 0-based call with this index under the redraw schedule.
// Pure: the caller keeps the base config and the schedule stays reproducible.
inline FavorConfig config_for_call(const FavorConfig& base,
                                   std::uint64_t call_index) {
  if (base.redraw_interval == 0) return base;
  const std::uint64_t generation = call_index / base.redraw_interval;
  if (generation == 0) return base;
  FavorConfig out = base;
  out.feature_map =
      redraw(base.feature_map, derive_seed(base.feature_map.seed, generation));
  return out;
}

// Running prefix state sum_j K'_j [v_j | 1]^T, an M x width matrix. The
// augmented last coordinate carries the denominator.
class PrefixAccumulator {
 public:
  PrefixAccumulator(std::size_t num_features, std::size_t width)
      : state_(num_features, width) {
    require(width >= 2, "PrefixAccumulator: width must cover values plus one");
  }

  // Add K'_j [values | 1]^T; values has width-1 entries.
  void absorb(const double* kprime, const double* values) {
    const std::size_t w = state_.cols();
    for (std::size_t m = 0; m < state_.rows(); ++m) {
      const double km = kprime[m];
      double* row = state_.row(m);
      for (std::size_t t = 0; t + 1 < w; ++t) row[t] += km * values[t];
      row[w - 1] += km;
    }
    ++count_;
  }

  // out = state^T q, width entries.
  void project(const double* qprime, double* out) const {
    const std::size_t w = state_.cols();
    for (std::size_t t = 0; t < w; ++t) out[t] = 0.0;
    for (std::size_t m = 0; m < state_.rows(); ++m) {
      const double qm = qprime[m];
      const double* row = state_.row(m);
      for (std::size_t t = 0; t < w; ++t) out[t] += qm * row[t];
    }
  }

  // Exact elementwise addition; the blocked scan's only combine step.
  void merge(const PrefixAccumulator& other) {
    require(state_.same_shape(other.state_), "PrefixAccumulator: shape disagrees");
    for (std::size_t i = 0; i < state_.size(); ++i)
      state_.data()[i] += other.state_.data()[i];
    count_ += other.count_;
  }

  const Matrix& state() const { return state_; }
  std::size_t positions_absorbed() const { return count_; }

 private:
  Matrix state_;
  std::size_t count_ = 0;
};

// Scan execution knobs for the causal path. Defaults keep the reference
// left-to-right order; block_size > 0 switches to a blocked scan (identical
// up to floating-point reassociation across block boundaries) whose blocks
// may run on several threads. Blocked mode holds one extra accumulator per
// block.
struct ScanOptions {
  std::size_t block_size = 0;
  unsigned threads = 1;
};

namespace detail {

inline void check_favor_inputs(const FavorConfig& cfg, const Matrix& q,
                               const Matrix& k, const Matrix& v) {
  require(q.cols() == cfg.feature_map.dim(),
          "favor: query dimension disagrees with the feature map");
  require(k.cols() == cfg.feature_map.dim(),
          "favor: key dimension disagrees with the feature map");
  require(k.rows() == v.rows(), "favor: key/value counts disagree");
}

// Scaled embeddings Q' and K'.
inline void favor_embed(const FavorConfig& cfg, const Matrix& q,
                        const Matrix& k, Matrix& qprime, Matrix& kprime) {
  qprime = embed(cfg.feature_map, q);
  kprime = embed(cfg.feature_map, k);
  const std::vector<double> gq = scalers(cfg.scaler.g, q);
  const std::vector<double> hk = scalers(cfg.scaler.h, k);
  for (std::size_t i = 0; i < qprime.rows(); ++i) {
    double* row = qprime.row(i);
    for (std::size_t m = 0; m < qprime.cols(); ++m) row[m] *= gq[i];
  }
  for (std::size_t i = 0; i < kprime.rows(); ++i) {
    double* row = kprime.row(i);
    for (std::size_t m = 0; m < kprime.cols(); ++m) row[m] *= hk[i];
  }
}

inline void renormalize_row(const double* augmented, std::size_t n_v,
                            double stabilizer, std::size_t row, double* out) {
  const double den = augmented[n_v] + stabilizer;
  if (!(den > 0.0) || !std::isfinite(den))
    throw DegeneracyError(
        row, "favor: attention denominator not positive at row " +
                 std::to_string(row) +
                 " (raise the stabilizer or the kernel epsilon)");
  const double inv = 1.0 / den;
  for (std::size_t t = 0; t < n_v; ++t) out[t] = augmented[t] * inv;
}

}  // namespace detail

// Attention over all positions in O(L M width) time.
inline Matrix favor_bidirectional(const FavorConfig& cfg, const Matrix& q,
                                  const Matrix& k, const Matrix& v) {
  detail::check_favor_inputs(cfg, q, k, v);
  Matrix qprime, kprime;
  detail::favor_embed(cfg, q, k, qprime, kprime);

  const std::size_t n_v = v.cols();
  const std::size_t w = n_v + 1;
  const std::size_t M = cfg.feature_map.num_features();

  // kv = K'^T [V | 1], M x w; the augmented column accumulates K'^T 1.
  Matrix kv(M, w);
  for (std::size_t i = 0; i < kprime.rows(); ++i) {
    const double* krow = kprime.row(i);
    const double* vrow = v.row(i);
    for (std::size_t m = 0; m < M; ++m) {
      const double km = krow[m];
      double* dst = kv.row(m);
      for (std::size_t t = 0; t < n_v; ++t) dst[t] += km * vrow[t];
      dst[n_v] += km;
    }
  }

  const Matrix product = matmul(qprime, kv);  // L x w
  Matrix out(q.rows(), n_v);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const double* prow = product.row(i);
    double* orow = out.row(i);
    if (cfg.renormalize) {
      detail::renormalize_row(prow, n_v, cfg.stabilizer, i, orow);
    } else {
      for (std::size_t t = 0; t < n_v; ++t) orow[t] = prow[t];
    }
  }
  return out;
}

namespace detail {

// Rows [begin, end) of the causal output given the carry-in prefix state.
inline void scan_segment(const FavorConfig& cfg, const Matrix& qprime,
                         const Matrix& kprime, const Matrix& v,
                         PrefixAccumulator acc, std::size_t begin,
                         std::size_t end, Matrix& out) {
  const std::size_t n_v = v.cols();
  std::vector<double> augmented(n_v + 1);
  for (std::size_t i = begin; i < end; ++i) {
    acc.absorb(kprime.row(i), v.row(i));
    acc.project(qprime.row(i), augmented.data());
    double* orow = out.row(i);
    if (cfg.renormalize) {
      renormalize_row(augmented.data(), n_v, cfg.stabilizer, i, orow);
    } else {
      for (std::size_t t = 0; t < n_v; ++t) orow[t] = augmented[t];
    }
  }
}

}  // namespace detail

// Causal attention: position i sees keys and values up to and including i.
// The default sequential scan is the reference order; its outputs are a pure
// left-to-right function of the inputs, so row i is bitwise independent of
// anything past i.
inline Matrix favor_unidirectional(const FavorConfig& cfg, const Matrix& q,
                                   const Matrix& k, const Matrix& v,
                                   const ScanOptions& scan = {}) {
  detail::check_favor_inputs(cfg, q, k, v);
  require(q.rows() == k.rows(), "favor: causal mask needs aligned lengths");
  Matrix qprime, kprime;
  detail::favor_embed(cfg, q, k, qprime, kprime);

  const std::size_t L = q.rows();
  const std::size_t n_v = v.cols();
  const std::size_t M = cfg.feature_map.num_features();
  Matrix out(L, n_v);

  if (scan.block_size == 0 || scan.block_size >= L) {
    detail::scan_segment(cfg, qprime, kprime, v, PrefixAccumulator(M, n_v + 1),
                         0, L, out);
    return out;
  }

  const std::size_t B = scan.block_size;
  const std::size_t num_blocks = (L + B - 1) / B;

  // Block totals, then exclusive carries by exact addition in block order.
  std::vector<PrefixAccumulator> totals(num_blocks,
                                        PrefixAccumulator(M, n_v + 1));
  auto sum_blocks = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      const std::size_t begin = b * B, end = std::min(L, begin + B);
      for (std::size_t i = begin; i < end; ++i)
        totals[b].absorb(kprime.row(i), v.row(i));
    }
  };
  std::vector<PrefixAccumulator> carries;
  carries.reserve(num_blocks);

  const unsigned workers =
      std::max(1u, std::min<unsigned>(scan.threads,
                                      static_cast<unsigned>(num_blocks)));
  if (workers == 1) {
    sum_blocks(0, num_blocks);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (num_blocks + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(num_blocks, lo + chunk);
      if (lo < hi) pool.emplace_back(sum_blocks, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }

  PrefixAccumulator running(M, n_v + 1);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    carries.push_back(running);
    running.merge(totals[b]);
  }

  auto emit_blocks = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      const std::size_t begin = b * B, end = std::min(L, begin + B);
      detail::scan_segment(cfg, qprime, kprime, v, carries[b], begin, end, out);
    }
  };
  if (workers == 1) {
    emit_blocks(0, num_blocks);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (num_blocks + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(num_blocks, lo + chunk);
      if (lo < hi) pool.emplace_back(emit_blocks, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }
  return out;
}

// The implied score matrix Q' K'^T, L x L. Diagnostic only: quadratic by
// construction, so none of the attention paths call it.
inline Matrix approx_attention_matrix(const FavorConfig& cfg, const Matrix& q,
                                      const Matrix& k) {
  require(q.cols() == cfg.feature_map.dim() && k.cols() == cfg.feature_map.dim(),
          "approx_attention_matrix: dimension disagrees with the feature map");
  Matrix qprime, kprime;
  detail::favor_embed(cfg, q, k, qprime, kprime);
  return matmul_nt(qprime, kprime);
}

}  // namespace favor
