/*
 * Copyright (c) 2026, The camoe-head Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "camoe/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace camoe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::EmptyVideo: return "empty_video";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::EmptyKeywords: return "empty_keywords";
    case ErrorKind::Config: return "config";
    case ErrorKind::ModeMismatch: return "mode_mismatch";
    case ErrorKind::Format: return "format";
    case ErrorKind::Digest: return "digest";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, ErrorKind::Dimension,
          "matrix data length " + std::to_string(data_.size()) + " does not match " +
              std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, ErrorKind::Dimension, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Tensor3::Tensor3(std::size_t items, std::size_t rows, std::size_t cols, double fill)
    : items_(items), rows_(rows), cols_(cols), data_(items * rows * cols, fill) {}

Tensor3::Tensor3(std::size_t items, std::size_t rows, std::size_t cols, std::vector<double> data)
    : items_(items), rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == items * rows * cols, ErrorKind::Dimension,
          "tensor data length does not match its shape");
}

Matrix Tensor3::item(std::size_t i) const {
  require(i < items_, ErrorKind::Dimension, "tensor item index out of range");
  const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(i * rows_ * cols_);
  return Matrix(rows_, cols_, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(rows_ * cols_)));
}

void Tensor3::set_item(std::size_t i, const Matrix& m) {
  require(i < items_ && m.rows() == rows_ && m.cols() == cols_, ErrorKind::Dimension,
          "tensor item shape mismatch");
  std::copy(m.values().begin(), m.values().end(),
            data_.begin() + static_cast<std::ptrdiff_t>(i * rows_ * cols_));
}

// ---------------------------------------------------------------------------

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Vector softmax(std::span<const double> logits) {
  require(!logits.empty(), ErrorKind::Dimension, "softmax of an empty vector");
  require(all_finite(logits), ErrorKind::Domain, "softmax input contains non-finite values");
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

Vector softmax_backward(std::span<const double> probs, std::span<const double> grad_out) {
  const double inner = dot(probs, grad_out);
  Vector grad(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) grad[i] = probs[i] * (grad_out[i] - inner);
  return grad;
}

double sigmoid(double x) {
  require(std::isfinite(x), ErrorKind::Domain, "sigmoid input is not finite");
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(std::span<const double> x) {
  Vector out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return sigmoid(v); });
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Dimension, "dot product of unequal lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_sim(std::span<const double> v, std::span<const double> s) {
  require(v.size() == s.size(), ErrorKind::Dimension, "cosine_sim of unequal lengths");
  const double nv = norm(v);
  const double ns = norm(s);
  require(nv > 0.0 && ns > 0.0, ErrorKind::Degenerate, "cosine_sim of a zero-norm vector");
  return std::clamp(dot(v, s) / (nv * ns), -1.0, 1.0);
}

void cosine_sim_backward(std::span<const double> v, std::span<const double> s, double upstream,
                         std::span<double> gv, std::span<double> gs) {
  const double nv = norm(v);
  const double ns = norm(s);
  require(nv > 0.0 && ns > 0.0, ErrorKind::Degenerate, "cosine_sim of a zero-norm vector");
  const double c = dot(v, s) / (nv * ns);
  const double inv = 1.0 / (nv * ns);
  for (std::size_t k = 0; k < v.size(); ++k) {
    gv[k] += upstream * (s[k] * inv - c * v[k] / (nv * nv));
    gs[k] += upstream * (v[k] * inv - c * s[k] / (ns * ns));
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), ErrorKind::Dimension, "axpy of unequal lengths");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorKind::Dimension, "matmul shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), ErrorKind::Dimension, "matmul_nt shape mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorKind::Dimension, "matmul_tn shape mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  return out;
}

Vector column_mean(const Matrix& m) {
  require(m.rows() > 0, ErrorKind::Dimension, "mean over zero rows");
  Vector out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(1.0, m.row(r), out);
  for (double& v : out) v /= static_cast<double>(m.rows());
  return out;
}

// ---------------------------------------------------------------------------

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  require(n > 0, ErrorKind::Domain, "random index over an empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

// ---------------------------------------------------------------------------

std::size_t FfnParams::input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
std::size_t FfnParams::output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

FfnShape FfnShape::mlp(std::vector<std::size_t> dims) {
  FfnShape shape;
  shape.dims = std::move(dims);
  const std::size_t n = shape.dims.size() < 2 ? 0 : shape.dims.size() - 1;
  shape.activations.assign(n, Activation::Relu);
  if (n > 0) shape.activations.back() = Activation::Linear;
  return shape;
}

FfnParams init_params(Rng& rng, const FfnShape& shape) {
  require(shape.dims.size() >= 2 && shape.activations.size() + 1 == shape.dims.size(),
          ErrorKind::Dimension, "FFN shape needs at least one layer and one activation per layer");
  FfnParams params;
  for (std::size_t k = 0; k + 1 < shape.dims.size(); ++k) {
    const std::size_t fan_in = shape.dims[k];
    const std::size_t fan_out = shape.dims[k + 1];
    require(fan_in > 0 && fan_out > 0, ErrorKind::Dimension, "FFN layer with a zero dimension");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer;
    layer.weight = Matrix(fan_out, fan_in);
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    layer.bias.resize(fan_out);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    layer.activation = shape.activations[k];
    params.layers.push_back(std::move(layer));
  }
  return params;
}

FfnParams init_params(std::uint64_t seed, const FfnShape& shape) {
  Rng rng(seed);
  return init_params(rng, shape);
}

FfnParams identity_ffn(std::size_t dim) {
  DenseLayer layer;
  layer.weight = Matrix(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) layer.weight(i, i) = 1.0;
  layer.bias.assign(dim, 0.0);
  FfnParams params;
  params.layers.push_back(std::move(layer));
  return params;
}

Matrix ffn_forward(const FfnParams& params, const Matrix& x, FfnTrace* trace) {
  require(!params.layers.empty(), ErrorKind::Dimension, "FFN has no layers");
  require(x.cols() == params.input_dim(), ErrorKind::Dimension,
          "FFN input dim " + std::to_string(x.cols()) + " does not match " +
              std::to_string(params.input_dim()));
  if (trace) {
    trace->inputs.clear();
    trace->outputs.clear();
  }
  Matrix current = x;
  for (const auto& layer : params.layers) {
    require(current.cols() == layer.weight.cols() && layer.bias.size() == layer.weight.rows(),
            ErrorKind::Dimension, "FFN layers do not compose");
    Matrix next = matmul_nt(current, layer.weight);
    for (std::size_t r = 0; r < next.rows(); ++r) {
      auto row = next.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] += layer.bias[c];
        if (layer.activation == Activation::Relu && row[c] < 0.0) row[c] = 0.0;
      }
    }
    if (trace) {
      trace->inputs.push_back(std::move(current));
      trace->outputs.push_back(next);
    }
    current = std::move(next);
  }
  return current;
}

Vector ffn_forward(const FfnParams& params, std::span<const double> x) {
  Matrix in(1, x.size(), Vector(x.begin(), x.end()));
  return ffn_forward(params, in).storage();
}

Matrix ffn_backward(const FfnParams& params, const FfnTrace& trace, const Matrix& grad_out,
                    FfnParams& grads) {
  Matrix grad = grad_out;
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& layer = params.layers[k];
    auto& glayer = grads.layers[k];
    const Matrix& out = trace.outputs[k];
    if (layer.activation == Activation::Relu)
      for (std::size_t i = 0; i < grad.size(); ++i)
        if (out.values()[i] <= 0.0) grad.values()[i] = 0.0;
    // dW += gradᵀ · input ; db += column sums of grad
    Matrix dw = matmul_tn(grad, trace.inputs[k]);
    axpy(1.0, dw.values(), glayer.weight.values());
    for (std::size_t r = 0; r < grad.rows(); ++r) axpy(1.0, grad.row(r), glayer.bias);
    grad = matmul(grad, layer.weight);
  }
  return grad;
}

Vector ffn_backward(const FfnParams& params, std::span<const double> x,
                    std::span<const double> grad_out, FfnParams& grads) {
  FfnTrace trace;
  ffn_forward(params, Matrix(1, x.size(), Vector(x.begin(), x.end())), &trace);
  Matrix g(1, grad_out.size(), Vector(grad_out.begin(), grad_out.end()));
  return ffn_backward(params, trace, g, grads).storage();
}

void collect_params(FfnParams& params, const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const std::string base = prefix + std::to_string(k) + ".";
    auto& layer = params.layers[k];
    out.push_back({base + "weight", layer.weight.values(), {layer.weight.rows(), layer.weight.cols()}});
    out.push_back({base + "bias", layer.bias, {layer.bias.size()}});
  }
}

}  // namespace camoe
