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
#include <stdexcept>
#include <string>

#include "favor/feature_map.hpp"
#include "favor/matrix.hpp"
#include "favor/random.hpp"

namespace favor {

// Quadratic reference implementations. These materialize the full score
// matrix on purpose; they exist to be trusted, not to be fast.

enum class Directionality : std::uint32_t {
  kBidirectional = 0,
  kUnidirectional = 1,
};

struct AttentionProblem {
  Matrix Q, K, V;
  Directionality directionality = Directionality::kBidirectional;
};

inline AttentionProblem random_problem(std::size_t L, std::size_t d,
                                       std::uint64_t seed,
                                       Directionality dir =
                                           Directionality::kBidirectional) {
  Rng rng(seed);
  AttentionProblem prob;
  prob.Q = random_normal_matrix(L, d, rng);
  prob.K = random_normal_matrix(L, d, rng);
  prob.V = random_normal_matrix(L, d, rng);
  prob.directionality = dir;
  return prob;
}

namespace detail {

inline void check_attention_shapes(const Matrix& q, const Matrix& k,
                                   const Matrix& v) {
  require(q.cols() == k.cols(), "attention: query/key dimensions disagree");
  require(k.rows() == v.rows(), "attention: key/value counts disagree");
  require(q.cols() >= 1, "attention: dimension must be at least 1");
}

// Softmax over logits[0, width) in place; subtracts the row max first so
// exp never overflows for finite logits.
inline void softmax_row(double* logits, std::size_t width, std::size_t row) {
  double hi = logits[0];
  for (std::size_t j = 1; j < width; ++j) hi = std::max(hi, logits[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    logits[j] = std::exp(logits[j] - hi);
    sum += logits[j];
  }
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw DegeneracyError(row, "softmax: degenerate row " + std::to_string(row));
  for (std::size_t j = 0; j < width; ++j) logits[j] /= sum;
}

}  // namespace detail

// Softmax attention over all positions: rows of the score matrix
// exp(Q K^T / sqrt(d)) are normalized to sum 1 and applied to V.
inline Matrix exact_bidirectional(const Matrix& q, const Matrix& k,
                                  const Matrix& v) {
  detail::check_attention_shapes(q, k, v);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix scores = matmul_nt(q, k);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    double* row = scores.row(i);
    for (std::size_t j = 0; j < scores.cols(); ++j) row[j] *= inv_sqrt_d;
    detail::softmax_row(row, scores.cols(), i);
  }
  return matmul(scores, v);
}

// Causal softmax attention: row i attends to positions j <= i (the diagonal
// included), so output row i never reads V rows past i.
inline Matrix exact_unidirectional(const Matrix& q, const Matrix& k,
                                   const Matrix& v) {
  detail::check_attention_shapes(q, k, v);
  require(q.rows() == k.rows(), "attention: causal mask needs aligned lengths");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix scores = matmul_nt(q, k);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    double* row = scores.row(i);
    for (std::size_t j = 0; j <= i; ++j) row[j] *= inv_sqrt_d;
    detail::softmax_row(row, i + 1, i);
    for (std::size_t j = i + 1; j < scores.cols(); ++j) row[j] = 0.0;
  }
  return matmul(scores, v);
}

// ============================================================
// Generalized kernel attention
// ============================================================

enum class KernelKind : std::uint32_t {
  kGaussian = 0,  // exp(-||x - y||^2 / (2 sigma^2))
  kLinear = 1,    // x . y
};

struct Kernel {
  KernelKind kind = KernelKind::kGaussian;
  double sigma = 1.0;
};

inline double kernel_value(const Kernel& kern, const double* x, const double* y,
                           std::size_t d) {
  switch (kern.kind) {
    case KernelKind::kGaussian: {
      double sq = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        const double diff = x[t] - y[t];
        sq += diff * diff;
      }
      return std::exp(-sq / (2.0 * kern.sigma * kern.sigma));
    }
    case KernelKind::kLinear: {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += x[t] * y[t];
      return dot;
    }
  }
  throw std::invalid_argument("kernel_value: unknown kernel");
}

// Attention with score entries g(Q_i) * kernel(Q_i, K_j) * h(K_j). With the
// Gaussian kernel at sigma = d^(1/4) and softmax scalers on both sides this
// reproduces exact_bidirectional; that identity is pinned by tests.
inline Matrix exact_generalized(const Matrix& q, const Matrix& k,
                                const Matrix& v, const Kernel& kern,
                                const ScalerSpec& spec, bool renormalize) {
  detail::check_attention_shapes(q, k, v);
  const std::vector<double> gq = scalers(spec.g, q);
  const std::vector<double> hk = scalers(spec.h, k);

  Matrix scores(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double* row = scores.row(i);
    const double* qi = q.row(i);
    for (std::size_t j = 0; j < k.rows(); ++j) {
      const double a = gq[i] * kernel_value(kern, qi, k.row(j), q.cols()) * hk[j];
      if (!std::isfinite(a))
        throw std::domain_error("exact_generalized: non-finite score at (" +
                                std::to_string(i) + ", " + std::to_string(j) +
                                ")");
      row[j] = a;
    }
    if (renormalize) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k.rows(); ++j) sum += row[j];
      if (!(sum > 0.0) || !std::isfinite(sum))
        throw DegeneracyError(
            i, "exact_generalized: degenerate row " + std::to_string(i));
      for (std::size_t j = 0; j < k.rows(); ++j) row[j] /= sum;
    }
  }
  return matmul(scores, v);
}

}  // namespace favor
