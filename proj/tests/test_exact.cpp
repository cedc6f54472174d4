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

#include <cmath>
#include <vector>

#include <catch_amalgamated.hpp>

#include "favor/exact.hpp"

namespace {

// Literal two-pass reference: form all scores, exponentiate without the
// max-subtraction trick, normalize, multiply. Valid only for tame logits,
// which is exactly why the library routine exists; on tame inputs the two
// must agree.
favor::Matrix literal_attention(const favor::Matrix& q, const favor::Matrix& k,
                                const favor::Matrix& v, bool causal) {
  const std::size_t L = q.rows(), d = q.cols();
  favor::Matrix out(L, v.cols());
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t limit = causal ? i + 1 : k.rows();
    std::vector<double> w(limit);
    double sum = 0.0;
    for (std::size_t j = 0; j < limit; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += q(i, t) * k(j, t);
      w[j] = std::exp(dot / std::sqrt(static_cast<double>(d)));
      sum += w[j];
    }
    for (std::size_t j = 0; j < limit; ++j)
      for (std::size_t t = 0; t < v.cols(); ++t)
        out(i, t) += (w[j] / sum) * v(j, t);
  }
  return out;
}

}  // namespace

TEST_CASE("bidirectional attention matches the literal reference") {
  const favor::AttentionProblem prob = favor::random_problem(24, 8, 3);
  const favor::Matrix got = favor::exact_bidirectional(prob.Q, prob.K, prob.V);
  const favor::Matrix want = literal_attention(prob.Q, prob.K, prob.V, false);
  REQUIRE(favor::max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("attention rows are convex combinations of values") {
  // With V = identity the output rows are the attention weights themselves.
  const std::size_t L = 12;
  const favor::AttentionProblem prob = favor::random_problem(L, 4, 9);
  favor::Matrix eye(L, L);
  for (std::size_t i = 0; i < L; ++i) eye(i, i) = 1.0;
  const favor::Matrix w = favor::exact_bidirectional(prob.Q, prob.K, eye);
  for (std::size_t i = 0; i < L; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      REQUIRE(w(i, j) > 0.0);
      sum += w(i, j);
    }
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("huge logits survive the stable softmax") {
  favor::Matrix q(2, 2), k(2, 2), v(2, 1);
  q(0, 0) = 600.0;
  q(1, 1) = 600.0;
  k(0, 0) = 2.0;
  k(1, 1) = 2.0;
  v(0, 0) = 1.0;
  v(1, 0) = 2.0;
  // Literal exp overflows at logit ~710; the library path must not.
  const favor::Matrix out = favor::exact_bidirectional(q, k, v);
  REQUIRE(std::isfinite(out(0, 0)));
  REQUIRE(out(0, 0) == Catch::Approx(1.0));  // all weight on value 1
  REQUIRE(out(1, 0) == Catch::Approx(2.0));  // all weight on value 2
}

TEST_CASE("causal attention matches the literal reference") {
  const favor::AttentionProblem prob =
      favor::random_problem(24, 8, 4, favor::Directionality::kUnidirectional);
  const favor::Matrix got = favor::exact_unidirectional(prob.Q, prob.K, prob.V);
  const favor::Matrix want = literal_attention(prob.Q, prob.K, prob.V, true);
  REQUIRE(favor::max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("causal masking includes the diagonal and is bit-exact") {
  const std::size_t L = 16, d = 8;
  const favor::AttentionProblem prob =
      favor::random_problem(L, d, 5, favor::Directionality::kUnidirectional);

  // Row 0 sees only position 0, so it returns V row 0 verbatim.
  const favor::Matrix out = favor::exact_unidirectional(prob.Q, prob.K, prob.V);
  for (std::size_t t = 0; t < d; ++t) REQUIRE(out(0, t) == prob.V(0, t));

  // Rewriting the future must not move a single bit of any earlier row.
  favor::AttentionProblem mangled = prob;
  for (std::size_t j = 0; j < d; ++j) {
    mangled.K(L - 1, j) = 1e6;
    mangled.V(L - 1, j) = -1e6;
    mangled.Q(L - 1, j) = 42.0;
  }
  const favor::Matrix out2 =
      favor::exact_unidirectional(mangled.Q, mangled.K, mangled.V);
  for (std::size_t i = 0; i + 1 < L; ++i)
    for (std::size_t t = 0; t < d; ++t) REQUIRE(out(i, t) == out2(i, t));
}

TEST_CASE("causal attention needs aligned lengths") {
  favor::Matrix q(4, 2), k(6, 2), v(6, 2);
  REQUIRE_THROWS_AS(favor::exact_unidirectional(q, k, v),
                    std::invalid_argument);
}

TEST_CASE("mismatched shapes are rejected") {
  favor::Matrix q(4, 3), k(5, 2), v(5, 2);
  REQUIRE_THROWS_AS(favor::exact_bidirectional(q, k, v),
                    std::invalid_argument);
  favor::Matrix k2(5, 3), v2(4, 2);
  REQUIRE_THROWS_AS(favor::exact_bidirectional(q, k2, v2),
                    std::invalid_argument);
}

TEST_CASE("kernel values match closed forms") {
  const std::vector<double> x = {1.0, 2.0};
  const std::vector<double> y = {3.0, -1.0};
  favor::Kernel gauss{favor::KernelKind::kGaussian, 2.0};
  // ||x - y||^2 = 4 + 9 = 13; exp(-13 / 8).
  REQUIRE(favor::kernel_value(gauss, x.data(), y.data(), 2) ==
          Catch::Approx(std::exp(-13.0 / 8.0)));
  favor::Kernel lin{favor::KernelKind::kLinear, 1.0};
  REQUIRE(favor::kernel_value(lin, x.data(), y.data(), 2) == Catch::Approx(1.0));
}

TEST_CASE("generalized attention reduces to softmax attention") {
  // Gaussian kernel at sigma = d^(1/4) with softmax scalers on both sides
  // rebuilds exp(Q K^T / sqrt(d)) entry by entry.
  const std::size_t d = 16;
  const favor::AttentionProblem prob = favor::random_problem(20, d, 6);
  const favor::Kernel kern{favor::KernelKind::kGaussian,
                           std::pow(static_cast<double>(d), 0.25)};
  const favor::ScalerSpec spec{favor::ScalerKind::kSoftmaxNorm,
                               favor::ScalerKind::kSoftmaxNorm};
  const favor::Matrix got =
      favor::exact_generalized(prob.Q, prob.K, prob.V, kern, spec, true);
  const favor::Matrix want = favor::exact_bidirectional(prob.Q, prob.K, prob.V);
  REQUIRE(favor::max_abs_diff(got, want) < 1e-10);
}

TEST_CASE("generalized attention without renormalization is the raw product") {
  const favor::AttentionProblem prob = favor::random_problem(6, 4, 7);
  const favor::Kernel kern{favor::KernelKind::kLinear, 1.0};
  const favor::ScalerSpec spec{favor::ScalerKind::kUnit,
                               favor::ScalerKind::kUnit};
  const favor::Matrix got =
      favor::exact_generalized(prob.Q, prob.K, prob.V, kern, spec, false);
  // Linear kernel, unit scalers: scores are Q K^T, so out = Q K^T V.
  const favor::Matrix want =
      favor::matmul(favor::matmul_nt(prob.Q, prob.K), prob.V);
  REQUIRE(favor::max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("generalized attention flags degenerate rows") {
  // A linear kernel with orthogonal rows yields an all-zero score row, which
  // cannot be renormalized.
  favor::Matrix q(1, 2), k(1, 2), v(1, 1);
  q(0, 0) = 1.0;
  k(0, 1) = 1.0;
  v(0, 0) = 5.0;
  const favor::Kernel kern{favor::KernelKind::kLinear, 1.0};
  const favor::ScalerSpec spec{favor::ScalerKind::kUnit,
                               favor::ScalerKind::kUnit};
  REQUIRE_THROWS_AS(favor::exact_generalized(q, k, v, kern, spec, true),
                    favor::DegeneracyError);
  try {
    favor::exact_generalized(q, k, v, kern, spec, true);
  } catch (const favor::DegeneracyError& e) {
    REQUIRE(e.row == 0);
  }
}

TEST_CASE("random problems are seed-deterministic") {
  const favor::AttentionProblem a = favor::random_problem(8, 4, 42);
  const favor::AttentionProblem b = favor::random_problem(8, 4, 42);
  REQUIRE(favor::max_abs_diff(a.Q, b.Q) == 0.0);
  REQUIRE(favor::max_abs_diff(a.K, b.K) == 0.0);
  REQUIRE(favor::max_abs_diff(a.V, b.V) == 0.0);
}
