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

#pragma once

// Dense numeric kernels shared by every other module. All computation is in
// double precision; storage formats narrow to float only at the file boundary.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "camoe/error.hpp"

namespace camoe {

using Vector = std::vector<double>;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  void fill(double value);
  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// items × rows × cols, row-major. Holds a batch of per-video frame matrices
// (B × C × d) or per-caption token matrices.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t items, std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor3(std::size_t items, std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t items() const noexcept { return items_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Matrix item(std::size_t i) const;
  void set_item(std::size_t i, const Matrix& m);

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

 private:
  std::size_t items_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Elementwise and reduction kernels.

Vector softmax(std::span<const double> logits);
// Backward of softmax: given y = softmax(x) and dL/dy, returns dL/dx.
Vector softmax_backward(std::span<const double> probs, std::span<const double> grad_out);

double sigmoid(double x);
Vector sigmoid(std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double cosine_sim(std::span<const double> v, std::span<const double> s);

// Gradients of cosine_sim(v, s) scaled by `upstream`, accumulated into gv/gs.
void cosine_sim_backward(std::span<const double> v, std::span<const double> s, double upstream,
                         std::span<double> gv, std::span<double> gs);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

Matrix matmul(const Matrix& a, const Matrix& b);
// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Vector column_mean(const Matrix& m);

bool all_finite(std::span<const double> values);

// ---------------------------------------------------------------------------
// Seeded randomness. std::mt19937_64 is fully specified by the standard; the
// distributions below are hand-written so streams are identical everywhere.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Feed-forward networks.

enum class Activation { Linear, Relu };

struct DenseLayer {
  Matrix weight;  // out × in
  Vector bias;    // out
  Activation activation = Activation::Linear;
};

struct FfnParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
};

// dims has one more entry than activations; layer k maps dims[k] → dims[k+1].
struct FfnShape {
  std::vector<std::size_t> dims;
  std::vector<Activation> activations;

  // Hidden layers ReLU, output linear.
  static FfnShape mlp(std::vector<std::size_t> dims);
};

FfnParams init_params(Rng& rng, const FfnShape& shape);
FfnParams init_params(std::uint64_t seed, const FfnShape& shape);
FfnParams identity_ffn(std::size_t dim);

// Intermediate values kept for the backward pass.
struct FfnTrace {
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> outputs;  // post-activation output of each layer
};

// x is N × input_dim (one sample per row).
Matrix ffn_forward(const FfnParams& params, const Matrix& x, FfnTrace* trace = nullptr);
Vector ffn_forward(const FfnParams& params, std::span<const double> x);

// Accumulates parameter gradients into `grads` (same shapes as params) and
// returns dL/dx.
Matrix ffn_backward(const FfnParams& params, const FfnTrace& trace, const Matrix& grad_out,
                    FfnParams& grads);
Vector ffn_backward(const FfnParams& params, std::span<const double> x,
                    std::span<const double> grad_out, FfnParams& grads);

// ---------------------------------------------------------------------------
// Parameter enumeration: every trainable tensor is exposed as a named flat
// span so optimizers, gradient checks and serializers can treat models
// uniformly. Two structurally identical objects enumerate in the same order.

struct ParamRef {
  std::string name;
  std::span<double> values;
  std::vector<std::size_t> shape;
};

void collect_params(FfnParams& params, const std::string& prefix, std::vector<ParamRef>& out);

template <class T>
std::vector<ParamRef> param_refs(T& object) {
  std::vector<ParamRef> out;
  collect_params(object, "", out);
  return out;
}

template <class T>
T zeros_like(const T& object) {
  T copy = object;
  for (auto& ref : param_refs(copy))
    for (double& v : ref.values) v = 0.0;
  return copy;
}

template <class T>
std::size_t param_count(T& object) {
  std::size_t n = 0;
  for (const auto& ref : param_refs(object)) n += ref.values.size();
  return n;
}

}  // namespace camoe
