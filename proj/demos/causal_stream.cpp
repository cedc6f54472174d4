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

// Streams causal attention one position at a time through the prefix-sum
// accumulator and checks the result against the batch unidirectional path.

#include <cstdio>
#include <vector>

#include "favor/attention.hpp"
#include "favor/exact.hpp"

int main() {
  const std::size_t L = 64, d = 16, M = 128;
  favor::AttentionProblem prob = favor::random_problem(
      L, d, /*seed=*/11, favor::Directionality::kUnidirectional);
  // Token-scale queries and keys keep every prefix denominator positive,
  // including the single-term one at position 0.
  for (favor::Matrix* m : {&prob.Q, &prob.K})
    for (std::size_t i = 0; i < m->size(); ++i) m->data()[i] *= 0.3;
  const favor::FavorConfig cfg = favor::FavorConfig::softmax_defaults(
      d, M, favor::ProjectionKind::kRorf, /*seed=*/11);

  // Batch computation over the whole sequence.
  const favor::Matrix batch =
      favor::favor_unidirectional(cfg, prob.Q, prob.K, prob.V);

  // The same computation as an online scan: each arriving position updates
  // the fixed-size accumulator and emits one output row.
  favor::Matrix qp_all, kp_all;
  favor::detail::favor_embed(cfg, prob.Q, prob.K, qp_all, kp_all);
  const std::size_t n_v = prob.V.cols();
  favor::PrefixAccumulator acc(M, n_v + 1);
  favor::Matrix streamed(L, n_v);
  std::vector<double> augmented(n_v + 1);
  for (std::size_t i = 0; i < L; ++i) {
    acc.absorb(kp_all.row(i), prob.V.row(i));
    acc.project(qp_all.row(i), augmented.data());
    favor::detail::renormalize_row(augmented.data(), n_v, cfg.stabilizer, i,
                                   streamed.row(i));
  }

  std::printf("batch vs streamed max |difference|: %.3e\n",
              favor::max_abs_diff(batch, streamed));
  std::printf("accumulator state: %zu x %zu (independent of sequence length)\n",
              M, prob.V.cols() + 1);
  return 0;
}
