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
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace favor {

// ============================================================
// Allocation audit
// ============================================================
// Matrix buffers report their size here while an AllocationAudit is alive on
// the current thread. The linear-attention paths promise never to create a
// sequence-length-squared buffer; tests hold them to it through this hook.

struct AllocationStats {
  std::size_t live_bytes = 0;
  std::size_t peak_live_bytes = 0;
  std::size_t largest_block_bytes = 0;
  std::size_t allocation_count = 0;
};

namespace detail {

inline AllocationStats*& audit_sink() {
  thread_local AllocationStats* sink = nullptr;
  return sink;
}

inline void note_alloc(std::size_t bytes) {
  if (AllocationStats* s = audit_sink()) {
    s->live_bytes += bytes;
    s->peak_live_bytes = std::max(s->peak_live_bytes, s->live_bytes);
    s->largest_block_bytes = std::max(s->largest_block_bytes, bytes);
    ++s->allocation_count;
  }
}

inline void note_free(std::size_t bytes) {
  if (AllocationStats* s = audit_sink()) {
    s->live_bytes -= std::min(bytes, s->live_bytes);
  }
}

}  // namespace detail

// Scoped recorder for matrix buffer traffic on the current thread. Audits
// nest; the innermost one sees the traffic.
class AllocationAudit {
 public:
  AllocationAudit() : previous_(detail::audit_sink()) {
    detail::audit_sink() = &stats_;
  }
  ~AllocationAudit() { detail::audit_sink() = previous_; }

  AllocationAudit(const AllocationAudit&) = delete;
  AllocationAudit& operator=(const AllocationAudit&) = delete;

  const AllocationStats& stats() const { return stats_; }

 private:
  AllocationStats stats_;
  AllocationStats* previous_;
};

// ============================================================
// Dense row-major matrix
// ============================================================

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    resize(rows, cols, fill);
  }

  Matrix(const Matrix& other)
      : rows_(other.rows_), cols_(other.cols_), data_(other.data_) {
    detail::note_alloc(bytes());
  }

  Matrix(Matrix&& other) noexcept
      : rows_(other.rows_), cols_(other.cols_), data_(std::move(other.data_)) {
    other.rows_ = 0;
    other.cols_ = 0;
    other.data_.clear();
  }

  Matrix& operator=(const Matrix& other) {
    if (this != &other) {
      detail::note_free(bytes());
      rows_ = other.rows_;
      cols_ = other.cols_;
      data_ = other.data_;
      detail::note_alloc(bytes());
    }
    return *this;
  }

  Matrix& operator=(Matrix&& other) noexcept {
    if (this != &other) {
      detail::note_free(bytes());
      rows_ = other.rows_;
      cols_ = other.cols_;
      data_ = std::move(other.data_);
      other.rows_ = 0;
      other.cols_ = 0;
      other.data_.clear();
    }
    return *this;
  }

  ~Matrix() { detail::note_free(bytes()); }

  void resize(std::size_t rows, std::size_t cols, double fill = 0.0) {
    detail::note_free(bytes());
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, fill);
    detail::note_alloc(bytes());
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::size_t bytes() const { return data_.size() * sizeof(double); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

// A nonpositive or non-finite attention denominator. Carries the row so
// callers can point at the offending position.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(std::size_t row_index, const std::string& message)
      : std::runtime_error(message), row(row_index) {}
  std::size_t row;
};

// ============================================================
// Products and norms
// ============================================================

// a (m x k) times b (k x n).
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
  Matrix out(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t t = 0; t < k; ++t) {
      const double ait = arow[t];
      const double* brow = b.row(t);
      for (std::size_t j = 0; j < n; ++j) orow[j] += ait * brow[j];
    }
  }
  return out;
}

// a (m x k) times b-transpose, with b given as (n x k). Row-times-row dot
// products keep both operands streaming.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions disagree");
  Matrix out(a.rows(), b.rows());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
      orow[j] = acc;
    }
  }
  return out;
}

// a-transpose times b, with a given as (k x m) and b as (k x n). Accumulates
// rank-one updates; the output stays small in every use here.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: inner dimensions disagree");
  Matrix out(a.cols(), b.cols());
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t t = 0; t < k; ++t) {
    const double* arow = a.row(t);
    const double* brow = b.row(t);
    for (std::size_t i = 0; i < m; ++i) {
      const double ati = arow[i];
      double* orow = out.row(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += ati * brow[j];
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  const double* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += p[i] * p[i];
  return std::sqrt(acc);
}

inline double frobenius_diff(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "frobenius_diff: shapes disagree");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "max_abs_diff: shapes disagree");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

inline double sum_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "sum_abs_diff: shapes disagree");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::abs(a.data()[i] - b.data()[i]);
  return acc;
}

// Relative Frobenius distance, guarded for a zero reference.
inline double relative_frobenius(const Matrix& estimate, const Matrix& reference) {
  const double base = frobenius_norm(reference);
  const double diff = frobenius_diff(estimate, reference);
  return base > 0.0 ? diff / base : diff;
}

}  // namespace favor
