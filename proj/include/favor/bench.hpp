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

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "favor/analysis.hpp"
#include "favor/attention.hpp"
#include "favor/exact.hpp"
#include "favor/io.hpp"

namespace favor {

// Command drivers behind the bench binary. Each cmd_* validates its
// arguments (returning exit code 2 with a usage note on bad input), runs
// entirely deterministically for a fixed seed, and writes CSV or JSON to the
// chosen output. Setting FAVOR_DETERMINISTIC=1 in the environment forces
// single-threaded execution regardless of the threads argument.

inline bool deterministic_env() {
  const char* v = std::getenv("FAVOR_DETERMINISTIC");
  return v != nullptr && std::string(v) == "1";
}

struct BenchRecord {
  std::string mode;  // "exact" or "favor"
  Directionality directionality = Directionality::kBidirectional;
  std::size_t L = 0;
  std::size_t d = 0;
  std::size_t M = 0;  // 0 on exact rows
  ProjectionKind sampler = ProjectionKind::kIid;
  std::uint64_t wall_time_ns = 0;  // median over measured repetitions
  std::size_t peak_aux_bytes = 0;  // high-water matrix memory, best effort
  std::string status = "ok";       // "ok" or "skipped"
  std::uint64_t seed = 0;
};

// Median of `reps` timed runs after `warmup` untimed ones.
template <typename Fn>
std::uint64_t median_wall_time_ns(Fn&& fn, int warmup = 1, int reps = 5) {
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<std::uint64_t> times(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const clock::time_point start = clock::now();
    fn();
    times[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() -
                                                             start)
            .count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

// Least-squares slope of log(time) against log(L).
inline double log_log_slope(const std::vector<std::pair<std::size_t, std::uint64_t>>& points) {
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [l, t] : points) {
    const double x = std::log(static_cast<double>(l));
    const double y = std::log(static_cast<double>(t));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

inline int usage_error(std::ostream& err, const std::string& message,
                       const char* usage) {
  err << "error: " << message << "\nusage: " << usage << "\n";
  return 2;
}

inline int with_output(const std::string& path, std::ostream& err,
                       const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(std::cout);
    return 0;
  }
  std::ofstream out(path);
  if (!out) {
    err << "error: cannot open output file: " << path << "\n";
    return 1;
  }
  writer(out);
  return 0;
}

inline bool valid_format(const std::string& format) {
  return format == "csv" || format == "json";
}

}  // namespace detail

// ============================================================
// error-sweep
// ============================================================

struct ErrorSweepArgs {
  std::size_t L = 128;
  std::size_t d = 16;
  std::vector<std::size_t> M_list;
  std::vector<ProjectionKind> samplers;
  std::vector<ErrorMetric> metrics = {ErrorMetric::kAttnMatrixFroRel};
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double input_scale = 1.0;
  std::string out;  // empty writes to stdout
  std::string format = "csv";
};

inline constexpr const char* kErrorSweepUsage =
    "favor-bench error-sweep --M <list> [--samplers <list>] [--L n] [--d n] "
    "[--metrics <list>] [--trials n] [--seed n] [--threads n] "
    "[--input-scale x] [--out path] [--format csv|json]";

inline void write_error_reports_json(std::ostream& out,
                                     const std::vector<ErrorReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ErrorReport& r : reports) {
    arr.push_back({{"metric", error_metric_name(r.metric)},
                   {"sampler", projection_kind_name(r.sampler)},
                   {"M", r.M},
                   {"L", r.L},
                   {"d", r.d},
                   {"trials", r.trials},
                   {"mean", r.mean},
                   {"std", r.std_dev},
                   {"seed", r.seed}});
  }
  out << arr.dump(2) << "\n";
}

inline int cmd_error_sweep(const ErrorSweepArgs& args, std::ostream& err) {
  if (args.M_list.empty())
    return detail::usage_error(err, "--M needs at least one feature count",
                               kErrorSweepUsage);
  if (args.samplers.empty())
    return detail::usage_error(err, "--samplers needs at least one sampler",
                               kErrorSweepUsage);
  if (args.L < 1 || args.d < 1 || args.trials < 1)
    return detail::usage_error(err, "--L, --d and --trials must be positive",
                               kErrorSweepUsage);
  if (args.metrics.empty())
    return detail::usage_error(err, "--metrics needs at least one metric",
                               kErrorSweepUsage);
  if (!detail::valid_format(args.format))
    return detail::usage_error(err, "--format must be csv or json",
                               kErrorSweepUsage);
  if (!(args.input_scale > 0.0))
    return detail::usage_error(err, "--input-scale must be positive",
                               kErrorSweepUsage);

  SweepOptions opt;
  opt.L = args.L;
  opt.d = args.d;
  opt.M_list = args.M_list;
  opt.samplers = args.samplers;
  opt.metrics = args.metrics;
  opt.trials = args.trials;
  opt.seed = args.seed;
  opt.threads = deterministic_env() ? 1 : args.threads;
  opt.input_scale = args.input_scale;

  const std::vector<ErrorReport> reports = attn_error_sweep(opt);
  return detail::with_output(args.out, err, [&](std::ostream& out) {
    if (args.format == "csv")
      write_error_reports_csv(out, reports);
    else
      write_error_reports_json(out, reports);
  });
}

// ============================================================
// time-sweep
// ============================================================

struct TimeSweepArgs {
  std::vector<std::size_t> L_list;
  std::size_t d = 16;
  std::vector<std::size_t> M_list = {64};
  ProjectionKind sampler = ProjectionKind::kRorf;
  Directionality directionality = Directionality::kBidirectional;
  std::vector<std::string> modes = {"exact", "favor"};
  std::size_t budget_mb = 4096;  // exact rows beyond this are skipped
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

inline constexpr const char* kTimeSweepUsage =
    "favor-bench time-sweep --L <list> [--d n] [--M <list>] [--samplers kind] "
    "[--directionality bi|uni] [--modes <list>] [--budget-mb n] [--seed n] "
    "[--out path] [--format csv|json]";

struct TimeSweepRow {
  BenchRecord record;
  std::optional<double> slope;  // per (mode, M) series; empty below 2 points
};

inline std::vector<TimeSweepRow> run_time_sweep(const TimeSweepArgs& args) {
  std::vector<TimeSweepRow> rows;
  for (const std::string& mode : args.modes) {
    const std::vector<std::size_t> m_values =
        mode == "exact" ? std::vector<std::size_t>{0} : args.M_list;
    for (std::size_t M : m_values) {
      std::vector<std::size_t> row_indices;
      std::vector<std::pair<std::size_t, std::uint64_t>> measured;
      FavorConfig cfg;
      if (mode == "favor")
        cfg = FavorConfig::softmax_defaults(args.d, M, args.sampler,
                                            derive_seed(args.seed, 0x5eed));
      for (std::size_t L : args.L_list) {
        BenchRecord rec;
        rec.mode = mode;
        rec.directionality = args.directionality;
        rec.L = L;
        rec.d = args.d;
        rec.M = M;
        rec.sampler = args.sampler;
        rec.seed = args.seed;

        if (mode == "exact") {
          // The reference path materializes the L x L score matrix.
          const std::size_t needed = L * L * sizeof(double) + 4 * L * args.d * sizeof(double);
          if (needed > args.budget_mb * 1024 * 1024) {
            rec.status = "skipped";
            row_indices.push_back(rows.size());
            rows.push_back({rec, std::nullopt});
            continue;
          }
        }

        AttentionProblem prob =
            random_problem(L, args.d, derive_seed(args.seed, L));
        // Timing only cares about shapes. Moderate query/key norms keep the
        // renormalized path clear of denominator degeneracies at every L.
        for (Matrix* m : {&prob.Q, &prob.K})
          for (std::size_t idx = 0; idx < m->size(); ++idx)
            m->data()[idx] *= 0.25;
        Matrix sink;
        AllocationAudit audit;
        const auto run = [&]() {
          if (mode == "exact") {
            sink = args.directionality == Directionality::kUnidirectional
                       ? exact_unidirectional(prob.Q, prob.K, prob.V)
                       : exact_bidirectional(prob.Q, prob.K, prob.V);
          } else {
            sink = args.directionality == Directionality::kUnidirectional
                       ? favor_unidirectional(cfg, prob.Q, prob.K, prob.V)
                       : favor_bidirectional(cfg, prob.Q, prob.K, prob.V);
          }
        };
        rec.wall_time_ns = median_wall_time_ns(run);
        rec.peak_aux_bytes = audit.stats().peak_live_bytes;
        measured.push_back({L, rec.wall_time_ns});
        row_indices.push_back(rows.size());
        rows.push_back({rec, std::nullopt});
      }
      if (measured.size() >= 2) {
        const double slope = log_log_slope(measured);
        for (std::size_t idx : row_indices)
          if (rows[idx].record.status == "ok") rows[idx].slope = slope;
      }
    }
  }
  return rows;
}

inline void write_time_sweep_csv(std::ostream& out,
                                 const std::vector<TimeSweepRow>& rows) {
  out << "mode,directionality,L,d,M,sampler,median_ns,peak_aux_bytes,slope,"
         "status,seed\n";
  for (const TimeSweepRow& row : rows) {
    const BenchRecord& r = row.record;
    out << r.mode << ','
        << (r.directionality == Directionality::kUnidirectional ? "uni" : "bi")
        << ',' << r.L << ',' << r.d << ',' << r.M << ','
        << projection_kind_name(r.sampler) << ',';
    if (r.status == "ok")
      out << r.wall_time_ns << ',' << r.peak_aux_bytes << ',';
    else
      out << ",,";
    if (row.slope) out << io::format_g17(*row.slope);
    out << ',' << r.status << ',' << r.seed << '\n';
  }
}

inline void write_time_sweep_json(std::ostream& out,
                                  const std::vector<TimeSweepRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TimeSweepRow& row : rows) {
    const BenchRecord& r = row.record;
    nlohmann::json obj = {
        {"mode", r.mode},
        {"directionality",
         r.directionality == Directionality::kUnidirectional ? "uni" : "bi"},
        {"L", r.L},
        {"d", r.d},
        {"M", r.M},
        {"sampler", projection_kind_name(r.sampler)},
        {"status", r.status},
        {"seed", r.seed}};
    if (r.status == "ok") {
      obj["median_ns"] = r.wall_time_ns;
      obj["peak_aux_bytes"] = r.peak_aux_bytes;
    }
    if (row.slope) obj["slope"] = *row.slope;
    arr.push_back(obj);
  }
  out << arr.dump(2) << "\n";
}

inline int cmd_time_sweep(const TimeSweepArgs& args, std::ostream& err) {
  if (args.L_list.empty())
    return detail::usage_error(err, "--L needs at least one length",
                               kTimeSweepUsage);
  if (args.d < 1)
    return detail::usage_error(err, "--d must be positive", kTimeSweepUsage);
  if (args.M_list.empty())
    return detail::usage_error(err, "--M needs at least one feature count",
                               kTimeSweepUsage);
  for (const std::string& mode : args.modes)
    if (mode != "exact" && mode != "favor")
      return detail::usage_error(err, "--modes entries must be exact or favor",
                                 kTimeSweepUsage);
  if (args.modes.empty())
    return detail::usage_error(err, "--modes needs at least one mode",
                               kTimeSweepUsage);
  if (!detail::valid_format(args.format))
    return detail::usage_error(err, "--format must be csv or json",
                               kTimeSweepUsage);

  const std::vector<TimeSweepRow> rows = run_time_sweep(args);
  return detail::with_output(args.out, err, [&](std::ostream& out) {
    if (args.format == "csv")
      write_time_sweep_csv(out, rows);
    else
      write_time_sweep_json(out, rows);
  });
}

// ============================================================
// kernel-sweep
// ============================================================

struct KernelSweepArgs {
  std::size_t L = 64;
  std::size_t d = 16;
  std::size_t M = 256;
  ProjectionKind sampler = ProjectionKind::kRorf;
  std::vector<Nonlinearity> kernels;  // empty selects the full set
  double epsilon = 1e-3;
  double stabilizer = 0.0;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::string proj_file;  // optional fixed projection fixture
  std::string q_file, k_file, v_file;  // optional fixed problem fixtures
  std::string out;
  std::string format = "csv";
};

inline constexpr const char* kKernelSweepUsage =
    "favor-bench kernel-sweep [--kernel <list>] [--L n] [--d n] [--M n] "
    "[--samplers kind] [--epsilon x] [--stabilizer x] [--trials n] [--seed n] "
    "[--proj-file path] [--q path --k path --v path] [--out path] "
    "[--format csv|json]";

struct KernelSweepRow {
  Nonlinearity kernel = Nonlinearity::kRelu;
  bool renormalize = true;
  ProjectionKind sampler = ProjectionKind::kRorf;
  std::size_t M = 0, L = 0, d = 0, trials = 0;
  double mean = 0.0;  // output_fro_rel against exact softmax attention
  double std_dev = 0.0;
  std::size_t degeneracy_errors = 0;
  std::uint64_t seed = 0;
};

inline std::vector<Nonlinearity> all_nonlinearities() {
  return {Nonlinearity::kSigmoid,     Nonlinearity::kExponential,
          Nonlinearity::kRelu,        Nonlinearity::kAbsolute,
          Nonlinearity::kGelu,        Nonlinearity::kCosine,
          Nonlinearity::kTanh,        Nonlinearity::kIdentity};
}

inline std::vector<KernelSweepRow> run_kernel_sweep(const KernelSweepArgs& args) {
  const std::vector<Nonlinearity> kernels =
      args.kernels.empty() ? all_nonlinearities() : args.kernels;

  std::optional<Projection> fixed_proj;
  if (!args.proj_file.empty()) fixed_proj = load_projection(args.proj_file);

  std::optional<AttentionProblem> fixed_prob;
  if (!args.q_file.empty()) {
    AttentionProblem prob;
    prob.Q = load_matrix(args.q_file);
    prob.K = load_matrix(args.k_file);
    prob.V = load_matrix(args.v_file);
    fixed_prob = std::move(prob);
  }

  const std::size_t d = fixed_prob ? fixed_prob->Q.cols() : args.d;
  const std::size_t L = fixed_prob ? fixed_prob->Q.rows() : args.L;
  const std::size_t M = fixed_proj ? fixed_proj->M : args.M;
  const ProjectionKind sampler = fixed_proj ? fixed_proj->kind : args.sampler;

  std::vector<KernelSweepRow> rows;
  for (Nonlinearity f : kernels) {
    for (const bool renormalize : {true, false}) {
      KernelSweepRow row;
      row.kernel = f;
      row.renormalize = renormalize;
      row.sampler = sampler;
      row.M = M;
      row.L = L;
      row.d = d;
      row.trials = args.trials;
      row.seed = args.seed;

      std::vector<double> errors;
      for (std::size_t t = 0; t < args.trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(args.seed, t);
        const AttentionProblem prob =
            fixed_prob ? *fixed_prob : random_problem(L, d, trial_seed);
        const Matrix reference = exact_bidirectional(prob.Q, prob.K, prob.V);

        FavorConfig cfg;
        const std::uint64_t map_seed = derive_seed(trial_seed, 1);
        if (fixed_proj) {
          cfg.feature_map =
              map_from_projection(*fixed_proj, f, args.epsilon, map_seed);
        } else {
          cfg.feature_map =
              make_generalized_map(f, d, M, sampler, map_seed, args.epsilon);
        }
        cfg.scaler = {ScalerKind::kUnit, ScalerKind::kUnit};
        cfg.renormalize = renormalize;
        cfg.stabilizer = args.stabilizer;
        try {
          const Matrix out = favor_bidirectional(cfg, prob.Q, prob.K, prob.V);
          errors.push_back(relative_frobenius(out, reference));
        } catch (const DegeneracyError&) {
          ++row.degeneracy_errors;
        }
      }
      const auto [mean, sd] = detail::mean_and_sample_std(errors);
      row.mean = mean;
      row.std_dev = sd;
      rows.push_back(row);
    }
  }
  return rows;
}

inline void write_kernel_sweep_csv(std::ostream& out,
                                   const std::vector<KernelSweepRow>& rows) {
  out << "kernel,renormalize,sampler,M,L,d,trials,mean,std,degeneracy_errors,"
         "seed\n";
  for (const KernelSweepRow& r : rows) {
    out << nonlinearity_name(r.kernel) << ','
        << (r.renormalize ? "true" : "false") << ','
        << projection_kind_name(r.sampler) << ',' << r.M << ',' << r.L << ','
        << r.d << ',' << r.trials << ',' << io::format_g17(r.mean) << ','
        << io::format_g17(r.std_dev) << ',' << r.degeneracy_errors << ','
        << r.seed << '\n';
  }
}

inline void write_kernel_sweep_json(std::ostream& out,
                                    const std::vector<KernelSweepRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const KernelSweepRow& r : rows) {
    arr.push_back({{"kernel", nonlinearity_name(r.kernel)},
                   {"renormalize", r.renormalize},
                   {"sampler", projection_kind_name(r.sampler)},
                   {"M", r.M},
                   {"L", r.L},
                   {"d", r.d},
                   {"trials", r.trials},
                   {"mean", r.mean},
                   {"std", r.std_dev},
                   {"degeneracy_errors", r.degeneracy_errors},
                   {"seed", r.seed}});
  }
  out << arr.dump(2) << "\n";
}

inline int cmd_kernel_sweep(const KernelSweepArgs& args, std::ostream& err) {
  if (args.L < 1 || args.d < 1 || args.M < 1 || args.trials < 1)
    return detail::usage_error(err, "--L, --d, --M and --trials must be positive",
                               kKernelSweepUsage);
  if (!detail::valid_format(args.format))
    return detail::usage_error(err, "--format must be csv or json",
                               kKernelSweepUsage);
  const bool any_fixture =
      !args.q_file.empty() || !args.k_file.empty() || !args.v_file.empty();
  const bool all_fixtures =
      !args.q_file.empty() && !args.k_file.empty() && !args.v_file.empty();
  if (any_fixture && !all_fixtures)
    return detail::usage_error(err, "--q, --k and --v must be given together",
                               kKernelSweepUsage);

  try {
    const std::vector<KernelSweepRow> rows = run_kernel_sweep(args);
    return detail::with_output(args.out, err, [&](std::ostream& out) {
      if (args.format == "csv")
        write_kernel_sweep_csv(out, rows);
      else
        write_kernel_sweep_json(out, rows);
    });
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// ============================================================
// extract
// ============================================================

struct ExtractArgs {
  std::string mechanism = "exact";  // "exact" or "favor"
  Directionality directionality = Directionality::kBidirectional;
  std::size_t L = 32;
  std::size_t d = 16;
  std::size_t M = 256;
  ProjectionKind sampler = ProjectionKind::kRorf;
  double stabilizer = 1e-6;
  std::uint64_t seed = 0;
  // Applies to the generated random problem only; fixtures pass through
  // untouched.
  double input_scale = 1.0;
  std::string q_file, k_file;  // optional fixtures
  std::string out;             // required; written as a matrix fixture
};

inline constexpr const char* kExtractUsage =
    "favor-bench extract --out path [--mechanism exact|favor] "
    "[--directionality bi|uni] [--L n] [--d n] [--M n] [--samplers kind] "
    "[--stabilizer x] [--seed n] [--input-scale x] [--q path --k path]";

inline int cmd_extract(const ExtractArgs& args, std::ostream& err) {
  if (args.out.empty())
    return detail::usage_error(err, "--out is required", kExtractUsage);
  if (args.mechanism != "exact" && args.mechanism != "favor")
    return detail::usage_error(err, "--mechanism must be exact or favor",
                               kExtractUsage);
  if (args.L < 1 || args.d < 1 || args.M < 1)
    return detail::usage_error(err, "--L, --d and --M must be positive",
                               kExtractUsage);
  if (args.q_file.empty() != args.k_file.empty())
    return detail::usage_error(err, "--q and --k must be given together",
                               kExtractUsage);
  if (!(args.input_scale > 0.0))
    return detail::usage_error(err, "--input-scale must be positive",
                               kExtractUsage);

  try {
    Matrix q, k;
    if (!args.q_file.empty()) {
      q = load_matrix(args.q_file);
      k = load_matrix(args.k_file);
    } else {
      Rng rng(derive_seed(args.seed, 0));
      q = random_normal_matrix(args.L, args.d, rng);
      k = random_normal_matrix(args.L, args.d, rng);
      for (Matrix* m : {&q, &k})
        for (std::size_t i = 0; i < m->size(); ++i)
          m->data()[i] *= args.input_scale;
    }

    AttentionMechanism mechanism;
    if (args.mechanism == "exact") {
      mechanism = args.directionality == Directionality::kUnidirectional
                      ? AttentionMechanism(exact_unidirectional)
                      : AttentionMechanism(exact_bidirectional);
    } else {
      FavorConfig cfg = FavorConfig::softmax_defaults(
          k.cols(), args.M, args.sampler, derive_seed(args.seed, 1));
      cfg.stabilizer = args.stabilizer;
      if (args.directionality == Directionality::kUnidirectional) {
        mechanism = [cfg](const Matrix& qq, const Matrix& kk, const Matrix& vv) {
          return favor_unidirectional(cfg, qq, kk, vv);
        };
      } else {
        mechanism = [cfg](const Matrix& qq, const Matrix& kk, const Matrix& vv) {
          return favor_bidirectional(cfg, qq, kk, vv);
        };
      }
    }

    save_matrix(args.out, extract_attention_matrix(mechanism, q, k));
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace favor
