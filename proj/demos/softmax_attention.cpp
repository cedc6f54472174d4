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

// Approximates softmax attention on a random problem and prints the error
// against the exact computation, once per feature count.

#include <cstdio>

#include "favor/attention.hpp"
#include "favor/exact.hpp"

int main() {
  const std::size_t L = 128, d = 16;
  favor::AttentionProblem prob = favor::random_problem(L, d, /*seed=*/7);
  // Token-scale queries and keys; at this bandwidth they keep the attention
  // denominators comfortably positive for every feature count below.
  for (favor::Matrix* m : {&prob.Q, &prob.K})
    for (std::size_t i = 0; i < m->size(); ++i) m->data()[i] *= 0.5;
  const favor::Matrix exact =
      favor::exact_bidirectional(prob.Q, prob.K, prob.V);

  std::printf("%8s  %22s\n", "M", "relative error");
  for (std::size_t M : {16, 64, 256, 1024}) {
    const favor::FavorConfig cfg = favor::FavorConfig::softmax_defaults(
        d, M, favor::ProjectionKind::kRorf, /*seed=*/7);
    const favor::Matrix approx =
        favor::favor_bidirectional(cfg, prob.Q, prob.K, prob.V);
    std::printf("%8zu  %22.6e\n", M, favor::relative_frobenius(approx, exact));
  }
  return 0;
}
