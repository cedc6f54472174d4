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
#include <sstream>

#include <catch_amalgamated.hpp>

#include "favor/analysis.hpp"

TEST_CASE("metric names round-trip") {
  for (std::uint32_t v = 0; v <= 4; ++v) {
    const favor::ErrorMetric m = static_cast<favor::ErrorMetric>(v);
    REQUIRE(favor::parse_error_metric(favor::error_metric_name(m)) == m);
  }
  REQUIRE_THROWS_AS(favor::parse_error_metric("rmse"), std::domain_error);
}

TEST_CASE("mean and sample standard deviation match hand values") {
  const auto [m1, s1] = favor::detail::mean_and_sample_std({2.0, 4.0, 6.0});
  REQUIRE(m1 == Catch::Approx(4.0));
  REQUIRE(s1 == Catch::Approx(2.0));
  const auto [m2, s2] = favor::detail::mean_and_sample_std({5.0});
  REQUIRE(m2 == 5.0);
  REQUIRE(s2 == 0.0);
  const auto [m3, s3] = favor::detail::mean_and_sample_std({});
  REQUIRE(m3 == 0.0);
  REQUIRE(s3 == 0.0);
}

TEST_CASE("error sweeps enumerate metric by sampler by feature count") {
  favor::SweepOptions opt;
  opt.L = 24;
  opt.d = 8;
  opt.M_list = {16, 64};
  opt.samplers = {favor::ProjectionKind::kIid, favor::ProjectionKind::kRorf};
  opt.trials = 3;
  opt.metrics = {favor::ErrorMetric::kAttnMatrixFroRel,
                 favor::ErrorMetric::kOutputFroRel};
  // The output metric runs the renormalized path; moderate norms keep its
  // denominators positive at the small feature counts used here.
  opt.input_scale = 0.35;
  const std::vector<favor::ErrorReport> reports = favor::attn_error_sweep(opt);
  REQUIRE(reports.size() == 2 * 2 * 2);
  // Metric-major, sampler-middle, feature-count-minor ordering.
  REQUIRE(reports[0].metric == favor::ErrorMetric::kAttnMatrixFroRel);
  REQUIRE(reports[0].sampler == favor::ProjectionKind::kIid);
  REQUIRE(reports[0].M == 16);
  REQUIRE(reports[1].M == 64);
  REQUIRE(reports[2].sampler == favor::ProjectionKind::kRorf);
  REQUIRE(reports[4].metric == favor::ErrorMetric::kOutputFroRel);
  for (const favor::ErrorReport& r : reports) {
    REQUIRE(r.L == 24);
    REQUIRE(r.d == 8);
    REQUIRE(r.trials == 3);
    REQUIRE(r.mean > 0.0);
    REQUIRE(std::isfinite(r.std_dev));
  }
}

TEST_CASE("error sweeps are deterministic and thread-count invariant") {
  favor::SweepOptions opt;
  opt.L = 16;
  opt.d = 8;
  opt.M_list = {8, 32};
  opt.samplers = {favor::ProjectionKind::kRorf};
  opt.trials = 4;
  opt.seed = 5;

  const auto a = favor::attn_error_sweep(opt);
  const auto b = favor::attn_error_sweep(opt);
  opt.threads = 4;
  const auto c = favor::attn_error_sweep(opt);
  REQUIRE(a.size() == c.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].mean == b[i].mean);
    REQUIRE(a[i].mean == c[i].mean);
    REQUIRE(a[i].std_dev == c[i].std_dev);
  }

  opt.seed = 6;
  const auto d = favor::attn_error_sweep(opt);
  REQUIRE(a[0].mean != d[0].mean);
}

TEST_CASE("requested combos do not perturb each other's draws") {
  // A combo's trial results must be a function of (seed, trial, combo index)
  // within its own request; the first combo of a one-element request matches
  // the first combo of a larger one.
  favor::SweepOptions small;
  small.L = 12;
  small.d = 8;
  small.M_list = {16};
  small.samplers = {favor::ProjectionKind::kIid};
  small.trials = 3;
  small.seed = 9;
  favor::SweepOptions large = small;
  large.M_list = {16, 32};
  const auto a = favor::attn_error_sweep(small);
  const auto b = favor::attn_error_sweep(large);
  REQUIRE(a[0].mean == b[0].mean);
  REQUIRE(a[0].std_dev == b[0].std_dev);
}

TEST_CASE("error sweep rejects the kernel metric and empty requests") {
  favor::SweepOptions opt;
  opt.M_list = {16};
  opt.samplers = {favor::ProjectionKind::kIid};
  opt.metrics = {favor::ErrorMetric::kKernelMse};
  REQUIRE_THROWS_AS(favor::attn_error_sweep(opt), std::invalid_argument);
  opt.metrics = {favor::ErrorMetric::kAttnMatrixFroRel};
  opt.M_list = {};
  REQUIRE_THROWS_AS(favor::attn_error_sweep(opt), std::invalid_argument);
}

TEST_CASE("csv reports carry the full schema") {
  std::vector<favor::ErrorReport> reports(1);
  reports[0] = {favor::ErrorMetric::kAttnMatrixL1,
                favor::ProjectionKind::kGorf,
                64,
                128,
                16,
                10,
                0.125,
                0.5,
                7};
  std::stringstream s;
  favor::write_error_reports_csv(s, reports);
  std::string header, row;
  std::getline(s, header);
  std::getline(s, row);
  REQUIRE(header == "metric,sampler,M,L,d,trials,mean,std,seed");
  const auto fields = favor::io::split_csv_line(row);
  REQUIRE(fields.size() == 9);
  REQUIRE(fields[0] == "attn_matrix_L1");
  REQUIRE(fields[1] == "gorf");
  REQUIRE(fields[2] == "64");
  REQUIRE(fields[6] == "0.125");
  REQUIRE(fields[8] == "7");
}

TEST_CASE("extraction recovers the exact attention matrix") {
  const std::size_t L = 10, d = 4;
  const favor::AttentionProblem prob = favor::random_problem(L, d, 11);
  const favor::Matrix got = favor::extract_attention_matrix(
      [](const favor::Matrix& q, const favor::Matrix& k,
         const favor::Matrix& v) {
        return favor::exact_bidirectional(q, k, v);
      },
      prob.Q, prob.K);

  // Direct row-softmax construction.
  favor::Matrix want = favor::matmul_nt(prob.Q, prob.K);
  for (std::size_t i = 0; i < L; ++i) {
    double hi = -1e300;
    for (std::size_t j = 0; j < L; ++j)
      hi = std::max(hi, want(i, j) / 2.0);  // sqrt(d) = 2
    double sum = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      want(i, j) = std::exp(want(i, j) / 2.0 - hi);
      sum += want(i, j);
    }
    for (std::size_t j = 0; j < L; ++j) want(i, j) /= sum;
  }
  REQUIRE(favor::max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("feature-count advice matches the hand-computed example") {
  // d = 16, radius 1, delta 0.5, sigma 16: the log argument is
  // 4 * 16 / (0.5 * 2) = 64, and (16 / 0.25) * ln 64 = 266.2, so 267.
  const favor::FeatureCountAdvice advice =
      favor::recommend_num_features(16, 1.0, 0.5, 16.0);
  REQUIRE(advice.num_features == 267);
  REQUIRE_FALSE(advice.log_clamped);
}

TEST_CASE("feature-count advice clamps the log in small regimes") {
  // Tiny radius drives the log argument under e; the floor takes over and
  // the advice reports it.
  const favor::FeatureCountAdvice advice =
      favor::recommend_num_features(16, 1e-3, 0.5, 16.0);
  REQUIRE(advice.log_clamped);
  REQUIRE(advice.num_features == 64);  // ceil(d / delta^2)
}

TEST_CASE("feature-count advice is monotone in its arguments") {
  const auto m = [](std::size_t d, double r, double delta) {
    return favor::recommend_num_features(d, r, delta, 16.0).num_features;
  };
  REQUIRE(m(16, 1.0, 0.5) <= m(32, 1.0, 0.5));
  REQUIRE(m(16, 1.0, 0.5) <= m(16, 2.0, 0.5));
  REQUIRE(m(16, 1.0, 0.5) <= m(16, 1.0, 0.25));
  // Across the clamp boundary: shrinking the radius never raises the advice.
  std::size_t prev = 0;
  for (double r = 1e-4; r < 10.0; r *= 1.7) {
    const std::size_t cur = m(16, r, 0.5);
    REQUIRE(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("feature-count advice validates inputs") {
  REQUIRE_THROWS_AS(favor::recommend_num_features(0, 1.0, 0.5, 16.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(favor::recommend_num_features(16, -1.0, 0.5, 16.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(favor::recommend_num_features(16, 1.0, 0.0, 16.0),
                    std::invalid_argument);
}

TEST_CASE("kernel study mean squared error shrinks with features") {
  const std::size_t d = 4;
  const favor::Kernel kern{favor::KernelKind::kGaussian,
                           std::pow(static_cast<double>(d), 0.25)};
  std::vector<favor::PointPair> pairs;
  favor::Rng rng(13);
  for (int i = 0; i < 8; ++i) {
    favor::PointPair p;
    p.x.resize(d);
    p.y.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      p.x[j] = rng.normal() * 0.5;
      p.y[j] = rng.normal() * 0.5;
    }
    pairs.push_back(p);
  }
  const auto factory_for = [&](std::size_t M) {
    return [M, d](std::uint64_t seed) {
      return favor::make_softmax_map(d, M, favor::ProjectionKind::kIid, seed);
    };
  };
  const auto small = favor::kernel_mse_study(kern, factory_for(8), pairs, 50, 1);
  const auto large =
      favor::kernel_mse_study(kern, factory_for(128), pairs, 50, 1);
  REQUIRE(small.size() == 1);
  REQUIRE(small[0].metric == favor::ErrorMetric::kKernelMse);
  REQUIRE(small[0].M == 8);
  REQUIRE(small[0].L == pairs.size());
  REQUIRE(small[0].trials == 50);
  REQUIRE(small[0].mean > large[0].mean);
}

TEST_CASE("kernel study uses the trig map scale, not the kernel sigma") {
  // The study's estimates target the map's own kernel; with the matching
  // Gaussian sigma = d^(1/4) the error tends to zero as M grows.
  const std::size_t d = 4;
  const favor::Kernel kern{favor::KernelKind::kGaussian,
                           std::pow(static_cast<double>(d), 0.25)};
  std::vector<favor::PointPair> pairs(1);
  pairs[0].x = {0.3, -0.2, 0.5, 0.1};
  pairs[0].y = {-0.1, 0.4, 0.2, -0.3};
  const auto big = favor::kernel_mse_study(
      kern,
      [d](std::uint64_t seed) {
        return favor::make_softmax_map(d, 4096, favor::ProjectionKind::kRorf,
                                       seed);
      },
      pairs, 20, 3);
  REQUIRE(big[0].mean < 1e-3);
}

TEST_CASE("paired sign test matches binomial hand values") {
  // All ten wins: p = 2^-10.
  std::vector<double> a(10, 1.0), b(10, 2.0);
  const favor::SignTestResult all = favor::paired_sign_test(a, b);
  REQUIRE(all.wins == 10);
  REQUIRE(all.n == 10);
  REQUIRE(all.p_value == Catch::Approx(std::pow(0.5, 10)));

  // Five of ten: the upper tail is 638/1024.
  for (int i = 0; i < 5; ++i) a[i] = 3.0;
  const favor::SignTestResult half = favor::paired_sign_test(a, b);
  REQUIRE(half.wins == 5);
  REQUIRE(half.p_value == Catch::Approx(638.0 / 1024.0));

  // Ties drop out of the count.
  std::vector<double> t1 = {1.0, 2.0, 2.0};
  std::vector<double> t2 = {2.0, 2.0, 1.0};
  const favor::SignTestResult ties = favor::paired_sign_test(t1, t2);
  REQUIRE(ties.wins == 1);
  REQUIRE(ties.n == 2);

  REQUIRE_THROWS_AS(favor::paired_sign_test({1.0}, {1.0, 2.0}),
                    std::invalid_argument);
}
