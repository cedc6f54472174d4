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

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "favor/bench.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("log-log slope recovers exact power laws") {
  std::vector<std::pair<std::size_t, std::uint64_t>> quadratic, linear;
  for (std::size_t L : {64, 128, 256, 512}) {
    quadratic.push_back({L, static_cast<std::uint64_t>(L) * L});
    linear.push_back({L, 7 * static_cast<std::uint64_t>(L)});
  }
  REQUIRE(favor::log_log_slope(quadratic) == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(favor::log_log_slope(linear) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("median timing returns a positive duration") {
  volatile double sink = 0.0;
  const std::uint64_t ns = favor::median_wall_time_ns([&]() {
    for (int i = 0; i < 1000; ++i) sink = sink + 1.0;
  });
  REQUIRE(ns > 0);
}

TEST_CASE("deterministic env flag follows the environment") {
  unsetenv("FAVOR_DETERMINISTIC");
  REQUIRE_FALSE(favor::deterministic_env());
  setenv("FAVOR_DETERMINISTIC", "1", 1);
  REQUIRE(favor::deterministic_env());
  setenv("FAVOR_DETERMINISTIC", "0", 1);
  REQUIRE_FALSE(favor::deterministic_env());
  unsetenv("FAVOR_DETERMINISTIC");
}

TEST_CASE("error sweep command validates its arguments") {
  std::stringstream err;
  favor::ErrorSweepArgs args;
  args.samplers = {favor::ProjectionKind::kIid};
  REQUIRE(favor::cmd_error_sweep(args, err) == 2);  // empty M list
  REQUIRE(err.str().find("usage:") != std::string::npos);

  args.M_list = {8};
  args.format = "xml";
  std::stringstream err2;
  REQUIRE(favor::cmd_error_sweep(args, err2) == 2);
}

TEST_CASE("error sweep command writes schema-complete csv") {
  const std::string path = "bench_test_error.csv";
  favor::ErrorSweepArgs args;
  args.L = 16;
  args.d = 8;
  args.M_list = {8, 16};
  args.samplers = {favor::ProjectionKind::kIid, favor::ProjectionKind::kRorf};
  args.trials = 2;
  args.out = path;
  std::stringstream err;
  REQUIRE(favor::cmd_error_sweep(args, err) == 0);

  const auto lines = lines_of(slurp(path));
  REQUIRE(lines.size() == 1 + 4);
  REQUIRE(lines[0] == "metric,sampler,M,L,d,trials,mean,std,seed");
  for (std::size_t i = 1; i < lines.size(); ++i)
    REQUIRE(favor::io::split_csv_line(lines[i]).size() == 9);

  // Identical reruns emit identical bytes.
  const std::string first = slurp(path);
  REQUIRE(favor::cmd_error_sweep(args, err) == 0);
  REQUIRE(slurp(path) == first);
  std::remove(path.c_str());
}

TEST_CASE("error sweep command emits parseable json") {
  const std::string path = "bench_test_error.json";
  favor::ErrorSweepArgs args;
  args.L = 12;
  args.d = 8;
  args.M_list = {8};
  args.samplers = {favor::ProjectionKind::kIid};
  args.trials = 2;
  args.out = path;
  args.format = "json";
  std::stringstream err;
  REQUIRE(favor::cmd_error_sweep(args, err) == 0);
  const nlohmann::json parsed = nlohmann::json::parse(slurp(path));
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 1);
  REQUIRE(parsed[0]["metric"] == "attn_matrix_fro_rel");
  REQUIRE(parsed[0]["sampler"] == "iid");
  REQUIRE(parsed[0]["M"] == 8);
  REQUIRE(parsed[0]["mean"].is_number());
  std::remove(path.c_str());
}

TEST_CASE("time sweep measures both modes and fits slopes") {
  favor::TimeSweepArgs args;
  args.L_list = {16, 32};
  args.d = 8;
  args.M_list = {16};
  const std::vector<favor::TimeSweepRow> rows = favor::run_time_sweep(args);
  REQUIRE(rows.size() == 4);  // exact x 2 lengths + favor x 2 lengths
  for (const favor::TimeSweepRow& row : rows) {
    REQUIRE(row.record.status == "ok");
    REQUIRE(row.record.wall_time_ns > 0);
    REQUIRE(row.slope.has_value());
  }
  REQUIRE(rows[0].record.mode == "exact");
  REQUIRE(rows[0].record.M == 0);
  REQUIRE(rows[2].record.mode == "favor");
  REQUIRE(rows[2].record.M == 16);
}

TEST_CASE("time sweep skips exact rows beyond the memory budget") {
  favor::TimeSweepArgs args;
  args.L_list = {16, 32};
  args.d = 8;
  args.M_list = {16};
  args.budget_mb = 0;
  const std::vector<favor::TimeSweepRow> rows = favor::run_time_sweep(args);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(rows[i].record.mode == "exact");
    REQUIRE(rows[i].record.status == "skipped");
    REQUIRE_FALSE(rows[i].slope.has_value());
  }
  for (std::size_t i = 2; i < 4; ++i) REQUIRE(rows[i].record.status == "ok");

  std::stringstream out;
  favor::write_time_sweep_csv(out, rows);
  const auto lines = lines_of(out.str());
  REQUIRE(lines[0] ==
          "mode,directionality,L,d,M,sampler,median_ns,peak_aux_bytes,slope,"
          "status,seed");
  const auto skipped = favor::io::split_csv_line(lines[1]);
  REQUIRE(skipped.size() == 11);
  REQUIRE(skipped[6].empty());   // median_ns
  REQUIRE(skipped[7].empty());   // peak_aux_bytes
  REQUIRE(skipped[8].empty());   // slope
  REQUIRE(skipped[9] == "skipped");
}

TEST_CASE("kernel sweep covers renormalization per kernel and counts degeneracies") {
  // Fixture-pinned degenerate case: a single identity feature on inputs of
  // opposite sign makes every renormalized trial throw, and none without.
  favor::Matrix w(1, 1);
  w(0, 0) = 1.0;
  favor::save_projection("bench_test_proj.bin", favor::explicit_projection(w));
  favor::Matrix q(1, 1), k(1, 1), v(1, 1);
  q(0, 0) = 1.0;
  k(0, 0) = -1.0;
  v(0, 0) = 2.0;
  favor::save_matrix("bench_test_q.bin", q);
  favor::save_matrix("bench_test_k.bin", k);
  favor::save_matrix("bench_test_v.bin", v);

  favor::KernelSweepArgs args;
  args.kernels = {favor::Nonlinearity::kIdentity};
  args.epsilon = 0.0;
  args.stabilizer = 0.0;
  args.trials = 3;
  args.proj_file = "bench_test_proj.bin";
  args.q_file = "bench_test_q.bin";
  args.k_file = "bench_test_k.bin";
  args.v_file = "bench_test_v.bin";

  const std::vector<favor::KernelSweepRow> rows = favor::run_kernel_sweep(args);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].renormalize);
  REQUIRE(rows[0].degeneracy_errors == 3);
  REQUIRE(rows[0].L == 1);
  REQUIRE(rows[0].d == 1);
  REQUIRE(rows[0].M == 1);
  REQUIRE(rows[0].sampler == favor::ProjectionKind::kExplicit);
  REQUIRE_FALSE(rows[1].renormalize);
  REQUIRE(rows[1].degeneracy_errors == 0);

  std::stringstream out;
  favor::write_kernel_sweep_csv(out, rows);
  const auto lines = lines_of(out.str());
  REQUIRE(lines[0] ==
          "kernel,renormalize,sampler,M,L,d,trials,mean,std,degeneracy_errors,"
          "seed");
  REQUIRE(favor::io::split_csv_line(lines[1]).size() == 11);
  REQUIRE(favor::io::split_csv_line(lines[1])[9] == "3");

  std::remove("bench_test_proj.bin");
  std::remove("bench_test_q.bin");
  std::remove("bench_test_k.bin");
  std::remove("bench_test_v.bin");
}

TEST_CASE("kernel sweep runs the full default battery") {
  favor::KernelSweepArgs args;
  args.L = 8;
  args.d = 4;
  args.M = 8;
  args.trials = 1;
  args.stabilizer = 1e-3;
  const std::vector<favor::KernelSweepRow> rows = favor::run_kernel_sweep(args);
  REQUIRE(rows.size() == 16);  // eight nonlinearities x two renormalize modes
}

TEST_CASE("kernel sweep validates fixture flags") {
  favor::KernelSweepArgs args;
  args.q_file = "only_q.bin";
  std::stringstream err;
  REQUIRE(favor::cmd_kernel_sweep(args, err) == 2);
}

TEST_CASE("extract command writes a loadable attention matrix") {
  const std::string path = "bench_test_extract.bin";
  favor::ExtractArgs args;
  args.L = 8;
  args.d = 4;
  args.out = path;
  std::stringstream err;
  REQUIRE(favor::cmd_extract(args, err) == 0);

  const favor::Matrix a = favor::load_matrix(path);
  REQUIRE(a.rows() == 8);
  REQUIRE(a.cols() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 8; ++j) sum += a(i, j);
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-12));
  }
  // Same seed, same bytes.
  const std::string first = slurp(path);
  REQUIRE(favor::cmd_extract(args, err) == 0);
  REQUIRE(slurp(path) == first);
  std::remove(path.c_str());

  favor::ExtractArgs bad;
  std::stringstream err2;
  REQUIRE(favor::cmd_extract(bad, err2) == 2);  // missing --out
}
