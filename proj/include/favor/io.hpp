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
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "favor/feature_map.hpp"
#include "favor/matrix.hpp"
#include "favor/projection.hpp"

namespace favor {

// ============================================================
// Binary formats
// ============================================================
// All integers are little-endian; 64-bit values are stored as (lo, hi) u32
// pairs and doubles as their IEEE-754 bit patterns.
//
//   Matrix fixture  "FAVMAT01"  u32 rows, u32 cols, rows*cols f64 row-major
//
//   Projection      "FAVPROJ1"  u32 kind, u32 d, u32 M, u64 seed, payload:
//     iid / gram-orthogonal / explicit:  M*d f64 row-major weights
//     hadamard:  u32 padded_dim, u32 num_hd_blocks, u32 num_blocks,
//                per block num_hd_blocks*padded_dim f64 sign diagonals
//     givens:    u32 num_blocks, u32 num_rotations,
//                per block num_rotations x (u32 i, u32 j, f64 theta),
//                then M f64 row multipliers
//     The gram-orthogonal payload is stored in materialized form, so its
//     norm-mode parameter is not recorded; a reloaded one resamples in the
//     default chi mode.
//
//   Feature map     "FAVFMAP1"  tag(f), tag(g), tag(h) as u32 length + UTF-8,
//                   f64 c, f64 input_scale, f64 epsilon, u64 seed,
//                   u32 has_bias, Projection blob, has_bias ? M f64 phases
//     Serialized together with its row scalers, which complete the kernel
//     description.

namespace io {

inline void write_bytes(std::ostream& out, const char* data, std::size_t n) {
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("io: write failed");
}

inline void read_bytes(std::istream& in, char* data, std::size_t n) {
  in.read(data, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw std::runtime_error("io: truncated input");
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  write_bytes(out, b, 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  char b[4];
  read_bytes(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  write_u32(out, static_cast<std::uint32_t>(v & 0xffffffffu));
  write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t read_u64(std::istream& in) {
  const std::uint64_t lo = read_u32(in);
  const std::uint64_t hi = read_u32(in);
  return lo | (hi << 32);
}

inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_u64(in));
}

inline void write_magic(std::ostream& out, const char (&magic)[9]) {
  write_bytes(out, magic, 8);
}

inline void expect_magic(std::istream& in, const char (&magic)[9],
                         const char* what) {
  char got[8];
  read_bytes(in, got, 8);
  for (int i = 0; i < 8; ++i)
    if (got[i] != magic[i])
      throw std::runtime_error(std::string(what) + ": bad magic");
}

inline void write_tag(std::ostream& out, const std::string& tag) {
  write_u32(out, static_cast<std::uint32_t>(tag.size()));
  write_bytes(out, tag.data(), tag.size());
}

inline std::string read_tag(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  if (n > 256) throw std::runtime_error("io: tag too long");
  std::string tag(n, '\0');
  read_bytes(in, tag.data(), n);
  return tag;
}

}  // namespace io

// ============================================================
// Matrix fixtures
// ============================================================

inline void write_matrix(std::ostream& out, const Matrix& m) {
  io::write_magic(out, "FAVMAT01");
  io::write_u32(out, static_cast<std::uint32_t>(m.rows()));
  io::write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i) io::write_f64(out, m.data()[i]);
}

inline Matrix read_matrix(std::istream& in) {
  io::expect_magic(in, "FAVMAT01", "matrix fixture");
  const std::uint32_t rows = io::read_u32(in);
  const std::uint32_t cols = io::read_u32(in);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = io::read_f64(in);
  return m;
}

// ============================================================
// Projections
// ============================================================

inline void write_projection(std::ostream& out, const Projection& p) {
  io::write_magic(out, "FAVPROJ1");
  io::write_u32(out, static_cast<std::uint32_t>(p.kind));
  io::write_u32(out, static_cast<std::uint32_t>(p.d));
  io::write_u32(out, static_cast<std::uint32_t>(p.M));
  io::write_u64(out, p.seed);
  switch (p.kind) {
    case ProjectionKind::kIid:
    case ProjectionKind::kRorf:
    case ProjectionKind::kExplicit:
      for (std::size_t i = 0; i < p.weights.size(); ++i)
        io::write_f64(out, p.weights.data()[i]);
      return;
    case ProjectionKind::kHorf:
      io::write_u32(out, static_cast<std::uint32_t>(p.padded_dim));
      io::write_u32(out, static_cast<std::uint32_t>(p.num_hd_blocks));
      io::write_u32(out, static_cast<std::uint32_t>(p.hadamard_signs.size()));
      for (const std::vector<double>& block : p.hadamard_signs)
        for (double s : block) io::write_f64(out, s);
      return;
    case ProjectionKind::kGorf: {
      const std::uint32_t rotations =
          p.givens_blocks.empty()
              ? 0u
              : static_cast<std::uint32_t>(p.givens_blocks.front().size());
      io::write_u32(out, static_cast<std::uint32_t>(p.givens_blocks.size()));
      io::write_u32(out, rotations);
      for (const std::vector<GivensRotation>& block : p.givens_blocks)
        for (const GivensRotation& g : block) {
          io::write_u32(out, g.i);
          io::write_u32(out, g.j);
          io::write_f64(out, g.theta);
        }
      for (double s : p.row_scales) io::write_f64(out, s);
      return;
    }
  }
  throw std::invalid_argument("write_projection: unknown kind");
}

inline Projection read_projection(std::istream& in) {
  io::expect_magic(in, "FAVPROJ1", "projection");
  Projection p;
  const std::uint32_t kind = io::read_u32(in);
  if (kind > 4) throw std::runtime_error("projection: unknown kind tag");
  p.kind = static_cast<ProjectionKind>(kind);
  p.d = io::read_u32(in);
  p.M = io::read_u32(in);
  p.seed = io::read_u64(in);
  if (p.d < 1 || p.M < 1)
    throw std::runtime_error("projection: degenerate dimensions");
  switch (p.kind) {
    case ProjectionKind::kIid:
    case ProjectionKind::kRorf:
    case ProjectionKind::kExplicit:
      p.weights.resize(p.M, p.d);
      for (std::size_t i = 0; i < p.weights.size(); ++i)
        p.weights.data()[i] = io::read_f64(in);
      return p;
    case ProjectionKind::kHorf: {
      p.padded_dim = io::read_u32(in);
      p.num_hd_blocks = io::read_u32(in);
      const std::uint32_t blocks = io::read_u32(in);
      if (!detail::is_pow2(p.padded_dim) || p.padded_dim < p.d)
        throw std::runtime_error("projection: bad padded dimension");
      p.hadamard_signs.resize(blocks);
      for (std::vector<double>& block : p.hadamard_signs) {
        block.resize(p.num_hd_blocks * p.padded_dim);
        for (double& s : block) s = io::read_f64(in);
      }
      return p;
    }
    case ProjectionKind::kGorf: {
      const std::uint32_t blocks = io::read_u32(in);
      const std::uint32_t rotations = io::read_u32(in);
      p.givens_blocks.resize(blocks);
      for (std::vector<GivensRotation>& block : p.givens_blocks) {
        block.resize(rotations);
        for (GivensRotation& g : block) {
          g.i = io::read_u32(in);
          g.j = io::read_u32(in);
          g.theta = io::read_f64(in);
          if (g.i >= p.d || g.j >= p.d)
            throw std::runtime_error("projection: rotation index out of range");
        }
      }
      p.row_scales.resize(p.M);
      for (double& s : p.row_scales) s = io::read_f64(in);
      return p;
    }
  }
  throw std::runtime_error("projection: unknown kind tag");
}

// ============================================================
// Feature maps
// ============================================================

inline void write_feature_map(std::ostream& out, const FeatureMap& fm,
                              const ScalerSpec& spec) {
  io::write_magic(out, "FAVFMAP1");
  io::write_tag(out, nonlinearity_name(fm.f));
  io::write_tag(out, scaler_name(spec.g));
  io::write_tag(out, scaler_name(spec.h));
  io::write_f64(out, fm.c);
  io::write_f64(out, fm.input_scale);
  io::write_f64(out, fm.epsilon);
  io::write_u64(out, fm.seed);
  io::write_u32(out, fm.bias.empty() ? 0u : 1u);
  write_projection(out, fm.projection);
  for (double b : fm.bias) io::write_f64(out, b);
}

inline std::pair<FeatureMap, ScalerSpec> read_feature_map(std::istream& in) {
  io::expect_magic(in, "FAVFMAP1", "feature map");
  FeatureMap fm;
  ScalerSpec spec;
  fm.f = parse_nonlinearity(io::read_tag(in));
  spec.g = parse_scaler(io::read_tag(in));
  spec.h = parse_scaler(io::read_tag(in));
  fm.c = io::read_f64(in);
  fm.input_scale = io::read_f64(in);
  fm.epsilon = io::read_f64(in);
  fm.seed = io::read_u64(in);
  const bool has_bias = io::read_u32(in) != 0;
  fm.projection = read_projection(in);
  if (has_bias) {
    fm.bias.resize(fm.projection.M);
    for (double& b : fm.bias) b = io::read_f64(in);
  }
  return {std::move(fm), spec};
}

// ============================================================
// File convenience wrappers
// ============================================================

namespace io {

// Shortest round-trippable decimal form, locale-independent; the one number
// format used in CSV output so identical runs emit identical bytes.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Splits one CSV line; fields here never contain commas or quotes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open for reading: " + path);
  return in;
}

}  // namespace io

inline void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out = io::open_out(path);
  write_matrix(out, m);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream in = io::open_in(path);
  return read_matrix(in);
}

inline void save_projection(const std::string& path, const Projection& p) {
  std::ofstream out = io::open_out(path);
  write_projection(out, p);
}

inline Projection load_projection(const std::string& path) {
  std::ifstream in = io::open_in(path);
  return read_projection(in);
}

inline void save_feature_map(const std::string& path, const FeatureMap& fm,
                             const ScalerSpec& spec) {
  std::ofstream out = io::open_out(path);
  write_feature_map(out, fm, spec);
}

inline std::pair<FeatureMap, ScalerSpec> load_feature_map(
    const std::string& path) {
  std::ifstream in = io::open_in(path);
  return read_feature_map(in);
}

}  // namespace favor
