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
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "favor/matrix.hpp"
#include "favor/projection.hpp"
#include "favor/random.hpp"

namespace favor {

// ============================================================
// Feature maps
// ============================================================
// phi(x) = (c / sqrt(M)) * (f(W sx + b) + epsilon) elementwise, with s the
// input scale. The trig softmax map uses c = sqrt(2), f = cos, M independent
// phases b ~ Unif(0, 2pi) and s = d^(-1/4); with a standard Gaussian W its
// feature dot products are unbiased for exp(-||x - y||^2 / (2 sqrt(d))),
// the Gaussian factor of softmax attention at this scaling. Generalized maps
// use c = 1, s = 1, no phases, and add epsilon after the nonlinearity.

enum class Nonlinearity : std::uint32_t {
  kCosine = 0,
  kIdentity = 1,
  kRelu = 2,
  kSigmoid = 3,
  kExponential = 4,
  kAbsolute = 5,
  kGelu = 6,
  kTanh = 7,
};

inline const char* nonlinearity_name(Nonlinearity f) {
  switch (f) {
    case Nonlinearity::kCosine: return "cosine";
    case Nonlinearity::kIdentity: return "identity";
    case Nonlinearity::kRelu: return "relu";
    case Nonlinearity::kSigmoid: return "sigmoid";
    case Nonlinearity::kExponential: return "exponential";
    case Nonlinearity::kAbsolute: return "absolute";
    case Nonlinearity::kGelu: return "gelu";
    case Nonlinearity::kTanh: return "tanh";
  }
  return "unknown";
}

inline Nonlinearity parse_nonlinearity(const std::string& name) {
  for (std::uint32_t v = 0; v <= 7; ++v) {
    const Nonlinearity f = static_cast<Nonlinearity>(v);
    if (name == nonlinearity_name(f)) return f;
  }
  throw std::domain_error("unknown nonlinearity: " + name);
}

inline double apply_nonlinearity(Nonlinearity f, double t) {
  switch (f) {
    case Nonlinearity::kCosine: return std::cos(t);
    case Nonlinearity::kIdentity: return t;
    case Nonlinearity::kRelu: return t > 0.0 ? t : 0.0;
    case Nonlinearity::kSigmoid: return 1.0 / (1.0 + std::exp(-t));
    case Nonlinearity::kExponential: return std::exp(t);
    case Nonlinearity::kAbsolute: return std::abs(t);
    case Nonlinearity::kGelu:
      // Exact Gaussian-CDF form, t * Phi(t).
      return t * 0.5 * (1.0 + std::erf(t / std::numbers::sqrt2_v<double>));
    case Nonlinearity::kTanh: return std::tanh(t);
  }
  throw std::domain_error("unknown nonlinearity value");
}

struct FeatureMap {
  Projection projection;
  std::vector<double> bias;  // per-feature phases; empty unless f is cosine
  Nonlinearity f = Nonlinearity::kCosine;
  double c = std::numbers::sqrt2_v<double>;
  double input_scale = 1.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;  // map-level seed; projection and phase streams derive from it

  std::size_t num_features() const { return projection.M; }
  std::size_t dim() const { return projection.d; }
};

// ============================================================
// Construction
// ============================================================

inline Projection sample_projection(ProjectionKind kind, std::size_t d,
                                    std::size_t M, std::uint64_t seed) {
  switch (kind) {
    case ProjectionKind::kIid: return sample_iid(d, M, seed);
    case ProjectionKind::kRorf: return sample_rorf(d, M, seed);
    case ProjectionKind::kHorf: return sample_horf(d, M, seed);
    case ProjectionKind::kGorf: return sample_gorf(d, M, seed);
    case ProjectionKind::kExplicit:
      throw std::invalid_argument("sample_projection: explicit kind has no sampler");
  }
  throw std::invalid_argument("sample_projection: unknown kind");
}

namespace detail {

inline std::vector<double> draw_phases(std::size_t M, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> bias(M);
  for (double& b : bias) b = rng.uniform(0.0, 2.0 * std::numbers::pi_v<double>);
  return bias;
}

}  // namespace detail

inline FeatureMap make_softmax_map(std::size_t d, std::size_t M,
                                   ProjectionKind sampler, std::uint64_t seed) {
  FeatureMap fm;
  fm.projection = sample_projection(sampler, d, M, derive_seed(seed, 0));
  fm.bias = detail::draw_phases(M, derive_seed(seed, 1));
  fm.f = Nonlinearity::kCosine;
  fm.c = std::numbers::sqrt2_v<double>;
  fm.input_scale = std::pow(static_cast<double>(d), -0.25);
  fm.epsilon = 0.0;
  fm.seed = seed;
  return fm;
}

// Generalized map for the named nonlinearity. "cosine" falls through to the
// softmax-map form (phases, c = sqrt(2), scaled inputs); everything else is
// phase-free with c = 1 and unscaled inputs.
inline FeatureMap make_generalized_map(Nonlinearity f, std::size_t d,
                                       std::size_t M, ProjectionKind sampler,
                                       std::uint64_t seed,
                                       double epsilon = 1e-3) {
  if (f == Nonlinearity::kCosine) {
    FeatureMap fm = make_softmax_map(d, M, sampler, seed);
    fm.epsilon = epsilon;
    return fm;
  }
  FeatureMap fm;
  fm.projection = sample_projection(sampler, d, M, derive_seed(seed, 0));
  fm.f = f;
  fm.c = 1.0;
  fm.input_scale = 1.0;
  fm.epsilon = epsilon;
  fm.seed = seed;
  return fm;
}

inline FeatureMap make_generalized_map(const std::string& f_name, std::size_t d,
                                       std::size_t M, ProjectionKind sampler,
                                       std::uint64_t seed,
                                       double epsilon = 1e-3) {
  return make_generalized_map(parse_nonlinearity(f_name), d, M, sampler, seed,
                              epsilon);
}

// Wraps an existing projection (a fixture, or one assembled by hand) in the
// map conventions for the given nonlinearity. The seed only feeds the phase
// draw of the cosine form.
inline FeatureMap map_from_projection(Projection projection, Nonlinearity f,
                                      double epsilon, std::uint64_t seed) {
  FeatureMap fm;
  fm.projection = std::move(projection);
  fm.f = f;
  fm.epsilon = epsilon;
  fm.seed = seed;
  if (f == Nonlinearity::kCosine) {
    fm.c = std::numbers::sqrt2_v<double>;
    fm.input_scale = std::pow(static_cast<double>(fm.dim()), -0.25);
    fm.bias = detail::draw_phases(fm.num_features(), derive_seed(seed, 1));
  } else {
    fm.c = 1.0;
    fm.input_scale = 1.0;
  }
  return fm;
}

// Same configuration, fresh randomness. Bit-identical for equal new_seed.
inline FeatureMap redraw(const FeatureMap& fm, std::uint64_t new_seed) {
  FeatureMap out = fm;
  out.projection = resample(fm.projection, derive_seed(new_seed, 0));
  if (!fm.bias.empty())
    out.bias = detail::draw_phases(fm.num_features(), derive_seed(new_seed, 1));
  out.seed = new_seed;
  return out;
}

// ============================================================
// Embedding
// ============================================================

// Rows of X to feature rows: L x d in, L x M out.
inline Matrix embed(const FeatureMap& fm, const Matrix& x) {
  require(x.cols() == fm.dim(), "embed: input dimension disagrees");
  require(fm.bias.empty() || fm.bias.size() == fm.num_features(),
          "embed: phase count disagrees with feature count");

  const Matrix* input = &x;
  Matrix scaled;
  if (fm.input_scale != 1.0) {
    scaled = x;
    double* p = scaled.data();
    for (std::size_t i = 0; i < scaled.size(); ++i) p[i] *= fm.input_scale;
    input = &scaled;
  }

  const Matrix proj = apply_projection(fm.projection, *input);  // M x L
  const std::size_t L = x.rows(), M = fm.num_features();
  const double norm = fm.c / std::sqrt(static_cast<double>(M));
  Matrix out(L, M);
  if (fm.f == Nonlinearity::kCosine) {
    for (std::size_t m = 0; m < M; ++m) {
      const double* prow = proj.row(m);
      const double phase = fm.bias.empty() ? 0.0 : fm.bias[m];
      for (std::size_t i = 0; i < L; ++i)
        out(i, m) = norm * (std::cos(prow[i] + phase) + fm.epsilon);
    }
  } else {
    for (std::size_t m = 0; m < M; ++m) {
      const double* prow = proj.row(m);
      for (std::size_t i = 0; i < L; ++i)
        out(i, m) = norm * (apply_nonlinearity(fm.f, prow[i]) + fm.epsilon);
    }
  }
  return out;
}

// ============================================================
// Row scalers
// ============================================================
// Positive per-row weights applied outside the feature product. The softmax
// scaler exp(||x||^2 / (2 sqrt(d))) restores the query/key norm factors that
// the Gaussian-kernel decomposition of softmax attention strips off.

enum class ScalerKind : std::uint32_t {
  kUnit = 0,
  kSoftmaxNorm = 1,
};

inline const char* scaler_name(ScalerKind k) {
  switch (k) {
    case ScalerKind::kUnit: return "unit";
    case ScalerKind::kSoftmaxNorm: return "softmax";
  }
  return "unknown";
}

inline ScalerKind parse_scaler(const std::string& name) {
  if (name == "unit") return ScalerKind::kUnit;
  if (name == "softmax") return ScalerKind::kSoftmaxNorm;
  throw std::domain_error("unknown scaler: " + name);
}

struct ScalerSpec {
  ScalerKind g = ScalerKind::kSoftmaxNorm;  // query side
  ScalerKind h = ScalerKind::kSoftmaxNorm;  // key side
};

inline std::vector<double> scalers(ScalerKind kind, const Matrix& x) {
  std::vector<double> out(x.rows(), 1.0);
  if (kind == ScalerKind::kUnit) return out;
  const double denom = 2.0 * std::sqrt(static_cast<double>(x.cols()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* row = x.row(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) sq += row[j] * row[j];
    const double value = std::exp(sq / denom);
    if (!std::isfinite(value) || value <= 0.0)
      throw std::domain_error("scalers: overflow at row " + std::to_string(i));
    out[i] = value;
  }
  return out;
}

}  // namespace favor
