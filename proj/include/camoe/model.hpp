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

// The full retrieval head: experts + gate(s) on the video side, the text
// encoder on the caption side, and the logit scale.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "camoe/moe_gate.hpp"
#include "camoe/text_alignment.hpp"

namespace camoe {

// Training/ablation modes.
//   SingleTask: fusion loss only, no gate.
//   Mtac:       three task losses, every task fed the full caption, no gate.
//   MultiGate:  three task losses on keyword inputs, one gate per task.
//   Camoe:      three task losses on keyword inputs, gate on fusion only.
enum class TrainMode { SingleTask, Mtac, MultiGate, Camoe };

std::string_view to_string(TrainMode mode);
TrainMode train_mode_from_string(std::string_view name);
GatingMode gating_mode_for(TrainMode mode);

struct ModelConfig {
  std::size_t dim = 16;        // video / joint embedding dim d
  std::size_t token_dim = 16;  // caption token embedding dim
  std::size_t max_frames = 16;
  std::size_t key_dim = 0;     // 0 → dim
  TrainMode mode = TrainMode::Camoe;
  SentenceStrategy strategy = SentenceStrategy::Muw;
  std::array<AggregatorKind, 3> expert_aggregators{AggregatorKind::SeAttention, AggregatorKind::SelfAttention,
                                                   AggregatorKind::SelfAttention};
  AggregatorKind gate_aggregator = AggregatorKind::SeAttention;

  std::vector<TaskId> active_tasks() const;
  // The caption-side input used for `task` (Mtac feeds the full caption).
  TaskId text_input(TaskId task) const;
};

struct ModelParams {
  ModelConfig config;
  MoeParams moe;
  TextEncoderParams text;
  double log_logit_scale = 0.0;

  double logit_scale() const;
};

ModelParams init_model(const ModelConfig& config, std::uint64_t seed);
// Mean-pool experts, identity projections, no gate: cosine scores equal the
// raw similarity of mean frame and mean token.
ModelParams identity_model(std::size_t dim, std::size_t max_frames = 16);

void collect_params(ModelParams& params, const std::string& prefix, std::vector<ParamRef>& out);

// Parameters on the encoder side train at the lower learning rate.
bool is_encoder_param(std::string_view name);

// A set of (video, caption) pairs. Pair i is captions[i] with
// videos[caption_video[i]]; the ground truth of a similarity matrix built over
// pairs is its diagonal.
struct Dataset {
  std::vector<std::string> video_ids;
  std::vector<Matrix> videos;  // each C × d
  std::vector<CaptionRecord> captions;
  std::vector<std::size_t> caption_video;
  std::vector<bool> ambiguous;  // per caption; empty when unknown

  std::size_t size() const { return captions.size(); }
  const Matrix& video_of(std::size_t pair) const { return videos[caption_video[pair]]; }
  void validate() const;
};

}  // namespace camoe
