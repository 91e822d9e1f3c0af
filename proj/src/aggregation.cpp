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

#include "camoe/aggregation.hpp"

#include <algorithm>
#include <cmath>

namespace camoe {

std::string_view to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::MeanPool: return "mean";
    case AggregatorKind::SeAttention: return "se";
    case AggregatorKind::SelfAttention: return "self_attention";
  }
  return "mean";
}

AggregatorKind aggregator_kind_from_string(std::string_view name) {
  if (name == "mean") return AggregatorKind::MeanPool;
  if (name == "se") return AggregatorKind::SeAttention;
  if (name == "self_attention") return AggregatorKind::SelfAttention;
  fail(ErrorKind::Config, "unknown aggregator kind '" + std::string(name) + "'");
}

AggregatorParams make_aggregator(const AggregatorShape& shape, Rng& rng) {
  require(shape.dim > 0, ErrorKind::Dimension, "aggregator dim must be positive");
  AggregatorParams params;
  params.kind = shape.kind;
  const std::size_t d = shape.dim;
  switch (shape.kind) {
    case AggregatorKind::MeanPool:
      break;
    case AggregatorKind::SeAttention:
      params.bottleneck = init_params(rng, FfnShape::mlp({d, std::max<std::size_t>(1, d / 4), d}));
      break;
    case AggregatorKind::SelfAttention: {
      require(shape.max_frames > 0, ErrorKind::Dimension, "self-attention needs max_frames > 0");
      const std::size_t dk = shape.key_dim == 0 ? d : shape.key_dim;
      params.key = init_params(rng, FfnShape::mlp({d, dk}));
      params.query = init_params(rng, FfnShape::mlp({d, dk}));
      params.value = init_params(rng, FfnShape::mlp({d, d}));
      params.output = init_params(rng, FfnShape::mlp({d, d}));
      params.position = Matrix(shape.max_frames, d);
      break;
    }
  }
  return params;
}

namespace {

void check_frames(const Matrix& frames) {
  require(frames.rows() > 0, ErrorKind::EmptyVideo, "video has no frames");
  require(all_finite(frames.values()), ErrorKind::Domain, "frame features contain non-finite values");
}

// Forward state of the SE head.
struct SeState {
  Vector mean;
  FfnTrace trace;
  Vector gate_input;  // h = FFN(mean)
  Vector scores;      // sigmoid(h·x_i / √d)
  Vector out;
};

SeState se_forward(const AggregatorParams& params, const Matrix& frames) {
  check_frames(frames);
  const std::size_t c = frames.rows();
  const std::size_t d = frames.cols();
  require(params.bottleneck.input_dim() == d && params.bottleneck.output_dim() == d,
          ErrorKind::Dimension, "SE bottleneck does not match the frame dim");
  SeState st;
  st.mean = column_mean(frames);
  st.gate_input =
      ffn_forward(params.bottleneck, Matrix(1, d, st.mean), &st.trace).storage();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  st.scores.resize(c);
  st.out.assign(d, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    st.scores[i] = sigmoid(dot(st.gate_input, frames.row(i)) * inv_sqrt_d);
    axpy(st.scores[i], frames.row(i), st.out);
  }
  // Sum first, divide once: with every score at 0.5 this is bit-identical to
  // half of column_mean.
  for (double& v : st.out) v /= static_cast<double>(c);
  return st;
}

struct AttentionState {
  Matrix input;  // frames + positions
  FfnTrace key_trace, query_trace, value_trace, output_trace;
  Matrix keys, queries, values;
  Matrix weights;  // row-softmax of QKᵀ/√d_K
  Matrix mixed;    // weights · V
  Matrix projected;
  Vector out;
};

AttentionState attention_forward(const AggregatorParams& params, const Matrix& frames) {
  check_frames(frames);
  const std::size_t c = frames.rows();
  const std::size_t d = frames.cols();
  require(c <= params.position.rows(), ErrorKind::Capacity,
          "video has " + std::to_string(c) + " frames but the position embedding holds " +
              std::to_string(params.position.rows()));
  require(params.position.cols() == d && params.key.input_dim() == d, ErrorKind::Dimension,
          "self-attention parameters do not match the frame dim");
  require(params.key_dim() > 0 && params.key_dim() == params.query.output_dim(), ErrorKind::Dimension,
          "key and query projections disagree on d_K");

  AttentionState st;
  st.input = frames;
  for (std::size_t i = 0; i < c; ++i) axpy(1.0, params.position.row(i), st.input.row(i));
  st.keys = ffn_forward(params.key, st.input, &st.key_trace);
  st.queries = ffn_forward(params.query, st.input, &st.query_trace);
  st.values = ffn_forward(params.value, st.input, &st.value_trace);

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.key_dim()));
  Matrix logits = matmul_nt(st.queries, st.keys);
  st.weights = Matrix(c, c);
  for (std::size_t r = 0; r < c; ++r) {
    for (double& v : logits.row(r)) v *= inv_sqrt_dk;
    const Vector w = softmax(logits.row(r));
    std::copy(w.begin(), w.end(), st.weights.row(r).begin());
  }
  st.mixed = matmul(st.weights, st.values);
  st.projected = ffn_forward(params.output, st.mixed, &st.output_trace);
  st.out = column_mean(st.projected);
  return st;
}

}  // namespace

Vector aggregate_mean(const Matrix& frames) {
  check_frames(frames);
  return column_mean(frames);
}

Vector aggregate_se(const AggregatorParams& params, const Matrix& frames) {
  return se_forward(params, frames).out;
}

Vector aggregate_selfattn(const AggregatorParams& params, const Matrix& frames) {
  return attention_forward(params, frames).out;
}

Vector aggregate(const AggregatorParams& params, const Matrix& frames) {
  switch (params.kind) {
    case AggregatorKind::MeanPool: return aggregate_mean(frames);
    case AggregatorKind::SeAttention: return aggregate_se(params, frames);
    case AggregatorKind::SelfAttention: return aggregate_selfattn(params, frames);
  }
  return {};
}

Matrix aggregate_backward(const AggregatorParams& params, const Matrix& frames,
                          std::span<const double> grad_out, AggregatorParams& grads) {
  const std::size_t c = frames.rows();
  const std::size_t d = frames.cols();
  require(grad_out.size() == d, ErrorKind::Dimension, "aggregator gradient has the wrong dim");
  const double inv_c = 1.0 / static_cast<double>(c);
  Matrix dframes(c, d);

  switch (params.kind) {
    case AggregatorKind::MeanPool: {
      check_frames(frames);
      for (std::size_t i = 0; i < c; ++i) axpy(inv_c, grad_out, dframes.row(i));
      break;
    }
    case AggregatorKind::SeAttention: {
      const SeState st = se_forward(params, frames);
      const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
      Vector dh(d, 0.0);
      for (std::size_t i = 0; i < c; ++i) {
        const double s = st.scores[i];
        axpy(s * inv_c, grad_out, dframes.row(i));
        const double dscore = inv_c * dot(grad_out, frames.row(i));
        const double dz = dscore * s * (1.0 - s) * inv_sqrt_d;
        axpy(dz, frames.row(i), dh);
        axpy(dz, st.gate_input, dframes.row(i));
      }
      const Matrix dmean =
          ffn_backward(params.bottleneck, st.trace, Matrix(1, d, dh), grads.bottleneck);
      for (std::size_t i = 0; i < c; ++i) axpy(inv_c, dmean.row(0), dframes.row(i));
      break;
    }
    case AggregatorKind::SelfAttention: {
      const AttentionState st = attention_forward(params, frames);
      Matrix dprojected(c, d);
      for (std::size_t i = 0; i < c; ++i) axpy(inv_c, grad_out, dprojected.row(i));
      const Matrix dmixed = ffn_backward(params.output, st.output_trace, dprojected, grads.output);
      const Matrix dweights = matmul_nt(dmixed, st.values);
      const Matrix dvalues = matmul_tn(st.weights, dmixed);
      const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.key_dim()));
      Matrix dlogits(c, c);
      for (std::size_t r = 0; r < c; ++r) {
        const Vector g = softmax_backward(st.weights.row(r), dweights.row(r));
        for (std::size_t k = 0; k < c; ++k) dlogits(r, k) = g[k] * inv_sqrt_dk;
      }
      const Matrix dqueries = matmul(dlogits, st.keys);
      const Matrix dkeys = matmul_tn(dlogits, st.queries);
      dframes = ffn_backward(params.query, st.query_trace, dqueries, grads.query);
      const Matrix dk_in = ffn_backward(params.key, st.key_trace, dkeys, grads.key);
      const Matrix dv_in = ffn_backward(params.value, st.value_trace, dvalues, grads.value);
      axpy(1.0, dk_in.values(), dframes.values());
      axpy(1.0, dv_in.values(), dframes.values());
      for (std::size_t i = 0; i < c; ++i) axpy(1.0, dframes.row(i), grads.position.row(i));
      break;
    }
  }
  return dframes;
}

void collect_params(AggregatorParams& params, const std::string& prefix, std::vector<ParamRef>& out) {
  switch (params.kind) {
    case AggregatorKind::MeanPool:
      break;
    case AggregatorKind::SeAttention:
      collect_params(params.bottleneck, prefix + "bottleneck.", out);
      break;
    case AggregatorKind::SelfAttention:
      collect_params(params.key, prefix + "key.", out);
      collect_params(params.query, prefix + "query.", out);
      collect_params(params.value, prefix + "value.", out);
      collect_params(params.output, prefix + "output.", out);
      out.push_back({prefix + "position", params.position.values(), {params.position.rows(), params.position.cols()}});
      break;
  }
}

}  // namespace camoe
