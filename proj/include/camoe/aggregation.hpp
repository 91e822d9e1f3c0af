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

// Frame aggregation heads: collapse a C × d matrix of frame features into a
// single d-vector. Any expert or gate may use any of the three kinds.

#include <string_view>

#include "camoe/core_math.hpp"

namespace camoe {

enum class AggregatorKind { MeanPool, SeAttention, SelfAttention };

std::string_view to_string(AggregatorKind kind);
AggregatorKind aggregator_kind_from_string(std::string_view name);

struct AggregatorParams {
  AggregatorKind kind = AggregatorKind::MeanPool;

  // SeAttention: bottleneck d → max(1, d/4) → d, ReLU between.
  FfnParams bottleneck;

  // SelfAttention: single-layer projections and output network, plus a
  // learned position embedding with one row per supported frame.
  FfnParams key;
  FfnParams query;
  FfnParams value;
  FfnParams output;
  Matrix position;

  std::size_t key_dim() const { return key.output_dim(); }
  std::size_t max_frames() const { return position.rows(); }
};

struct AggregatorShape {
  AggregatorKind kind = AggregatorKind::MeanPool;
  std::size_t dim = 0;
  std::size_t max_frames = 0;
  std::size_t key_dim = 0;  // 0 → dim
};

// Position embeddings start at zero; dense layers use init_params.
AggregatorParams make_aggregator(const AggregatorShape& shape, Rng& rng);

Vector aggregate_mean(const Matrix& frames);
Vector aggregate_se(const AggregatorParams& params, const Matrix& frames);
Vector aggregate_selfattn(const AggregatorParams& params, const Matrix& frames);
Vector aggregate(const AggregatorParams& params, const Matrix& frames);

// Accumulates dL/dparams into `grads` and returns dL/dframes.
Matrix aggregate_backward(const AggregatorParams& params, const Matrix& frames,
                          std::span<const double> grad_out, AggregatorParams& grads);

void collect_params(AggregatorParams& params, const std::string& prefix, std::vector<ParamRef>& out);

}  // namespace camoe
