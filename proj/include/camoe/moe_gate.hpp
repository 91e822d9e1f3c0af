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

// Fusion / entity / action experts and the softmax gate that mixes them.

#include <array>
#include <string_view>
#include <vector>

#include "camoe/aggregation.hpp"
#include "camoe/text_alignment.hpp"

namespace camoe {

inline constexpr std::size_t kNumExperts = 3;

enum class GatingMode {
  NoGate,      // v_F = e_F(x)
  SingleGate,  // only the fusion output is a gated mixture
  MultiGate,   // every task output is a mixture with its own gate
};

std::string_view to_string(GatingMode mode);
std::size_t gate_count(GatingMode mode);

struct ExpertParams {
  TaskId task = TaskId::Fusion;
  AggregatorParams aggregator;
  FfnParams projection;  // d → d
};

struct GateParams {
  AggregatorParams aggregator;
  Matrix projection;  // d × E
};

struct MoeParams {
  GatingMode mode = GatingMode::SingleGate;
  std::array<ExpertParams, kNumExperts> experts;
  std::vector<GateParams> gates;  // gate_count(mode) entries, one per gated task

  void validate() const;
};

struct VideoReprSet {
  std::array<Vector, kNumExperts> repr;  // indexed by TaskId
  Vector gate;                           // fusion gate weights; one-hot when ungated

  const Vector& operator[](TaskId task) const { return repr[index_of(task)]; }
};

Vector expert_forward(const ExpertParams& expert, const Matrix& frames);
Vector gate_weights(const GateParams& gate, const Matrix& frames);

// Elementwise Σ_i weights[i] · outputs[i].
Vector mix_experts(const std::array<Vector, kNumExperts>& outputs, std::span<const double> weights);

VideoReprSet forward_video(const MoeParams& params, const Matrix& frames);
VideoReprSet forward_video(const std::array<ExpertParams, kNumExperts>& experts, const GateParams& gate,
                           const Matrix& frames, GatingMode mode);

// grad_repr holds dL/dv_t for each task (empty vectors are treated as zero).
// Accumulates into grads and returns dL/dframes.
Matrix forward_video_backward(const MoeParams& params, const Matrix& frames,
                              const std::array<Vector, kNumExperts>& grad_repr, MoeParams& grads);

void collect_params(ExpertParams& params, const std::string& prefix, std::vector<ParamRef>& out);
void collect_params(GateParams& params, const std::string& prefix, std::vector<ParamRef>& out);
void collect_params(MoeParams& params, const std::string& prefix, std::vector<ParamRef>& out);

}  // namespace camoe
