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
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "favor/attention.hpp"
#include "favor/exact.hpp"
#include "favor/io.hpp"
#include "favor/matrix.hpp"
#include "favor/random.hpp"

namespace favor {

// ============================================================
// Error reporting
// ============================================================

enum class ErrorMetric : std::uint32_t {
  kAttnMatrixL1 = 0,      // sum of absolute entry differences
  kAttnMatrixFroRel = 1,  // Frobenius difference over reference norm
  kAttnMatrixMaxAbs = 2,  // worst absolute entry difference
  kOutputFroRel = 3,      // relative Frobenius of the attention output
  kKernelMse = 4,         // mean squared error of kernel estimates
};

inline const char* error_metric_name(ErrorMetric m) {
  switch (m) {
    case ErrorMetric::kAttnMatrixL1: return "attn_matrix_L1";
    case ErrorMetric::kAttnMatrixFroRel: return "attn_matrix_fro_rel";
    case ErrorMetric::kAttnMatrixMaxAbs: return "attn_matrix_maxabs";
    case ErrorMetric::kOutputFroRel: return "output_fro_rel";
    case ErrorMetric::kKernelMse: return "kernel_mse";
  }
  return "unknown";
}

inline ErrorMetric parse_error_metric(const std::string& name) {
  for (std::uint32_t v = 0; v <= 4; ++v) {
    const ErrorMetric m = static_cast<ErrorMetric>(v);
    if (name == error_metric_name(m)) return m;
  }
  throw std::domain_error("unknown metric: " + name);
}

struct ErrorReport {
  ErrorMetric metric = ErrorMetric::kAttnMatrixFroRel;
  ProjectionKind sampler = ProjectionKind::kIid;
  std::size_t M = 0;
  std::size_t L = 0;
  std::size_t d = 0;
  std::size_t trials = 0;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation across trials
  std::uint64_t seed = 0;
};

inline void write_error_reports_csv(std::ostream& out,
                                    const std::vector<ErrorReport>& reports) {
  out << "metric,sampler,M,L,d,trials,mean,std,seed\n";
  for (const ErrorReport& r : reports) {
    out << error_metric_name(r.metric) << ',' << projection_kind_name(r.sampler)
        << ',' << r.M << ',' << r.L << ',' << r.d << ',' << r.trials << ','
        << io::format_g17(r.mean) << ',' << io::format_g17(r.std_dev) << ','
        << r.seed << '\n';
  }
}

namespace detail {

inline std::pair<double, double> mean_and_sample_std(
    const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return {mean, std::sqrt(acc / static_cast<double>(xs.size() - 1))};
}

// Unnormalized score matrix exp(Q K^T / sqrt(d)); the quantity the feature
// product estimates without bias, so matrix error metrics target it.
inline Matrix exact_score_matrix(const Matrix& q, const Matrix& k) {
  Matrix scores = matmul_nt(q, k);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  double* p = scores.data();
  for (std::size_t i = 0; i < scores.size(); ++i)
    p[i] = std::exp(p[i] * inv_sqrt_d);
  return scores;
}

inline void run_chunked(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t, std::size_t)>& fn) {
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned t = 0; t < workers; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo < hi) pool.emplace_back(fn, lo, hi);
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace detail

// ============================================================
// Attention error sweeps
// ============================================================

struct SweepOptions {
  std::size_t L = 128;
  std::size_t d = 16;
  std::vector<std::size_t> M_list;
  std::vector<ProjectionKind> samplers;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::vector<ErrorMetric> metrics = {ErrorMetric::kAttnMatrixFroRel};
  unsigned threads = 1;
  // Query and key entries are unit normals times this factor. It sets the
  // norm radius the advisor reasons about; values well below 1 keep the
  // renormalized output path clear of denominator degeneracies at small M.
  double input_scale = 1.0;
};

// Softmax-attention approximation error against the quadratic reference,
// aggregated over independently seeded trials. Trial t draws its problem
// from derive_seed(seed, t) and combo (sampler, M) number c draws its map
// from derive_seed(trial seed, c + 1), so results do not depend on the
// thread count or on which combos are requested together.
inline std::vector<ErrorReport> attn_error_sweep(const SweepOptions& opt) {
  require(!opt.M_list.empty(), "attn_error_sweep: empty feature-count list");
  require(!opt.samplers.empty(), "attn_error_sweep: empty sampler list");
  require(opt.trials >= 1, "attn_error_sweep: need at least one trial");
  require(!opt.metrics.empty(), "attn_error_sweep: empty metric list");
  require(opt.input_scale > 0.0, "attn_error_sweep: input scale must be positive");

  const std::size_t combos = opt.samplers.size() * opt.M_list.size();
  bool need_matrix = false, need_output = false;
  for (ErrorMetric m : opt.metrics) {
    if (m == ErrorMetric::kOutputFroRel)
      need_output = true;
    else if (m != ErrorMetric::kKernelMse)
      need_matrix = true;
    require(m != ErrorMetric::kKernelMse,
            "attn_error_sweep: kernel_mse belongs to kernel_mse_study");
  }

  // errors[metric][combo][trial]
  std::vector<std::vector<std::vector<double>>> errors(
      opt.metrics.size(),
      std::vector<std::vector<double>>(combos,
                                       std::vector<double>(opt.trials)));

  detail::run_chunked(opt.trials, opt.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      const std::uint64_t trial_seed = derive_seed(opt.seed, t);
      AttentionProblem prob = random_problem(opt.L, opt.d, trial_seed);
      for (Matrix* m : {&prob.Q, &prob.K})
        for (std::size_t i = 0; i < m->size(); ++i)
          m->data()[i] *= opt.input_scale;
      Matrix reference_scores, reference_output;
      if (need_matrix)
        reference_scores = detail::exact_score_matrix(prob.Q, prob.K);
      if (need_output)
        reference_output = exact_bidirectional(prob.Q, prob.K, prob.V);

      std::size_t combo = 0;
      for (ProjectionKind sampler : opt.samplers) {
        for (std::size_t M : opt.M_list) {
          const FavorConfig cfg = FavorConfig::softmax_defaults(
              opt.d, M, sampler, derive_seed(trial_seed, combo + 1));
          Matrix approx_scores, approx_output;
          if (need_matrix)
            approx_scores = approx_attention_matrix(cfg, prob.Q, prob.K);
          if (need_output)
            approx_output = favor_bidirectional(cfg, prob.Q, prob.K, prob.V);
          for (std::size_t mi = 0; mi < opt.metrics.size(); ++mi) {
            double err = 0.0;
            switch (opt.metrics[mi]) {
              case ErrorMetric::kAttnMatrixL1:
                err = sum_abs_diff(approx_scores, reference_scores);
                break;
              case ErrorMetric::kAttnMatrixFroRel:
                err = relative_frobenius(approx_scores, reference_scores);
                break;
              case ErrorMetric::kAttnMatrixMaxAbs:
                err = max_abs_diff(approx_scores, reference_scores);
                break;
              case ErrorMetric::kOutputFroRel:
                err = relative_frobenius(approx_output, reference_output);
                break;
              case ErrorMetric::kKernelMse:
                break;  // rejected above
            }
            errors[mi][combo][t] = err;
          }
          ++combo;
        }
      }
    }
  });

  std::vector<ErrorReport> reports;
  reports.reserve(opt.metrics.size() * combos);
  for (std::size_t mi = 0; mi < opt.metrics.size(); ++mi) {
    std::size_t combo = 0;
    for (ProjectionKind sampler : opt.samplers) {
      for (std::size_t M : opt.M_list) {
        const auto [mean, sd] = detail::mean_and_sample_std(errors[mi][combo]);
        reports.push_back({opt.metrics[mi], sampler, M, opt.L, opt.d,
                           opt.trials, mean, sd, opt.seed});
        ++combo;
      }
    }
  }
  return reports;
}

// ============================================================
// Attention-matrix extraction
// ============================================================

using AttentionMechanism =
    std::function<Matrix(const Matrix&, const Matrix&, const Matrix&)>;

// Probes a mechanism with the identity value matrix: column j of the result
// is the mechanism's response to the one-hot value at position j, so the
// result IS the mechanism's effective L x L attention matrix. Requires a
// mechanism that accepts L x L values.
inline Matrix extract_attention_matrix(const AttentionMechanism& mechanism,
                                       const Matrix& q, const Matrix& k) {
  Matrix one_hot(k.rows(), k.rows());
  for (std::size_t i = 0; i < k.rows(); ++i) one_hot(i, i) = 1.0;
  return mechanism(q, k, one_hot);
}

// ============================================================
// Feature-count advisor
// ============================================================

struct FeatureCountAdvice {
  std::size_t num_features = 0;
  // Set when the log term was clamped to 1 (small-radius regimes where the
  // bound's log factor stops binding).
  bool log_clamped = false;
};

// Features sufficient for uniform score error delta over queries and keys of
// norm at most radius, with sigma the mean squared projection-row norm
// (equal to d for standard Gaussian rows). M grows as (d / delta^2) times
// the log of 4 sigma radius / (delta d^(1/4)), and the log factor is floored
// at 1 so the recommendation is monotone across the small-argument regime.
inline FeatureCountAdvice recommend_num_features(std::size_t d, double radius,
                                                 double delta, double sigma) {
  require(d >= 1, "recommend_num_features: dimension must be at least 1");
  require(radius > 0.0, "recommend_num_features: radius must be positive");
  require(delta > 0.0, "recommend_num_features: delta must be positive");
  require(sigma > 0.0, "recommend_num_features: sigma must be positive");

  const double dd = static_cast<double>(d);
  const double arg =
      4.0 * sigma * radius / (delta * std::pow(dd, 0.25));
  const double log_term = std::log(arg);
  FeatureCountAdvice advice;
  advice.log_clamped = !(log_term > 1.0);
  const double m = std::ceil((dd / (delta * delta)) * std::max(1.0, log_term));
  advice.num_features = static_cast<std::size_t>(m);
  return advice;
}

// ============================================================
// Kernel estimator study
// ============================================================

struct PointPair {
  std::vector<double> x, y;
};

using FeatureMapFactory = std::function<FeatureMap(std::uint64_t)>;

// Mean squared error of the feature-product kernel estimate over fresh maps,
// aggregated across the supplied evaluation pairs. Trial t uses the map from
// factory(derive_seed(seed, t)).
inline std::vector<ErrorReport> kernel_mse_study(
    const Kernel& kernel, const FeatureMapFactory& factory,
    const std::vector<PointPair>& pairs, std::size_t trials,
    std::uint64_t seed) {
  require(!pairs.empty(), "kernel_mse_study: no evaluation pairs");
  require(trials >= 1, "kernel_mse_study: need at least one trial");

  std::vector<double> squared_errors;
  squared_errors.reserve(pairs.size() * trials);
  ProjectionKind sampler = ProjectionKind::kIid;
  std::size_t M = 0, d = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const FeatureMap fm = factory(derive_seed(seed, t));
    sampler = fm.projection.kind;
    M = fm.num_features();
    d = fm.dim();
    for (const PointPair& pair : pairs) {
      require(pair.x.size() == d && pair.y.size() == d,
              "kernel_mse_study: pair dimension disagrees with the map");
      Matrix px(1, d), py(1, d);
      for (std::size_t j = 0; j < d; ++j) {
        px(0, j) = pair.x[j];
        py(0, j) = pair.y[j];
      }
      const Matrix fx = embed(fm, px);
      const Matrix fy = embed(fm, py);
      double est = 0.0;
      for (std::size_t m = 0; m < M; ++m) est += fx(0, m) * fy(0, m);
      const double truth =
          kernel_value(kernel, pair.x.data(), pair.y.data(), d);
      squared_errors.push_back((est - truth) * (est - truth));
    }
  }
  const auto [mean, sd] = detail::mean_and_sample_std(squared_errors);
  return {{ErrorMetric::kKernelMse, sampler, M, pairs.size(), d, trials, mean,
           sd, seed}};
}

// ============================================================
// Paired sign test
// ============================================================

struct SignTestResult {
  std::size_t wins = 0;  // strict a < b
  std::size_t n = 0;     // pairs net of ties
  double p_value = 1.0;  // one-sided: P(X >= wins), X ~ Binomial(n, 1/2)
};

inline SignTestResult paired_sign_test(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  require(a.size() == b.size(), "paired_sign_test: length mismatch");
  SignTestResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) ++r.wins;
    if (a[i] != b[i]) ++r.n;
  }
  if (r.n == 0) return r;
  // Binomial upper tail through log coefficients; n stays small enough that
  // summing terms is exact to working precision.
  const double log_half = std::log(0.5);
  double tail = 0.0;
  for (std::size_t k = r.wins; k <= r.n; ++k) {
    const double log_choose = std::lgamma(static_cast<double>(r.n) + 1.0) -
                              std::lgamma(static_cast<double>(k) + 1.0) -
                              std::lgamma(static_cast<double>(r.n - k) + 1.0);
    tail += std::exp(log_choose + static_cast<double>(r.n) * log_half);
  }
  r.p_value = std::min(1.0, tail);
  return r;
}

}  // namespace favor
