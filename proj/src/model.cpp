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

#include "camoe/model.hpp"

#include <algorithm>
#include <cmath>

#include "camoe/loss.hpp"

namespace camoe {

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::SingleTask: return "single-task";
    case TrainMode::Mtac: return "mtac";
    case TrainMode::MultiGate: return "multi-gate";
    case TrainMode::Camoe: return "camoe";
  }
  return "camoe";
}

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "single-task") return TrainMode::SingleTask;
  if (name == "mtac") return TrainMode::Mtac;
  if (name == "multi-gate") return TrainMode::MultiGate;
  if (name == "camoe") return TrainMode::Camoe;
  fail(ErrorKind::Config, "unknown mode '" + std::string(name) + "'");
}

GatingMode gating_mode_for(TrainMode mode) {
  switch (mode) {
    case TrainMode::SingleTask:
    case TrainMode::Mtac: return GatingMode::NoGate;
    case TrainMode::MultiGate: return GatingMode::MultiGate;
    case TrainMode::Camoe: return GatingMode::SingleGate;
  }
  return GatingMode::SingleGate;
}

std::vector<TaskId> ModelConfig::active_tasks() const {
  if (mode == TrainMode::SingleTask) return {TaskId::Fusion};
  return {kAllTasks.begin(), kAllTasks.end()};
}

TaskId ModelConfig::text_input(TaskId task) const {
  return mode == TrainMode::Mtac ? TaskId::Fusion : task;
}

double ModelParams::logit_scale() const { return logit_scale_from_log(log_logit_scale); }

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  require(config.dim > 0 && config.token_dim > 0 && config.max_frames > 0, ErrorKind::Config,
          "model dims must be positive");
  Rng rng(seed);
  ModelParams model;
  model.config = config;
  model.moe.mode = gating_mode_for(config.mode);
  for (std::size_t i = 0; i < kNumExperts; ++i) {
    ExpertParams& expert = model.moe.experts[i];
    expert.task = kAllTasks[i];
    expert.aggregator = make_aggregator(
        {config.expert_aggregators[i], config.dim, config.max_frames, config.key_dim}, rng);
    expert.projection = init_params(rng, FfnShape::mlp({config.dim, config.dim}));
  }
  for (std::size_t g = 0; g < gate_count(model.moe.mode); ++g) {
    GateParams gate;
    gate.aggregator = make_aggregator({config.gate_aggregator, config.dim, config.max_frames, config.key_dim}, rng);
    gate.projection = Matrix(config.dim, kNumExperts);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.dim));
    for (double& w : gate.projection.values()) w = rng.uniform(-bound, bound);
    model.moe.gates.push_back(std::move(gate));
  }
  model.text = make_text_encoder(config.token_dim, config.dim, config.strategy, rng);
  model.log_logit_scale = default_log_logit_scale();
  return model;
}

ModelParams identity_model(std::size_t dim, std::size_t max_frames) {
  ModelConfig config;
  config.dim = dim;
  config.token_dim = dim;
  config.max_frames = max_frames;
  config.mode = TrainMode::SingleTask;
  config.expert_aggregators = {AggregatorKind::MeanPool, AggregatorKind::MeanPool, AggregatorKind::MeanPool};
  ModelParams model = init_model(config, 0);
  for (auto& expert : model.moe.experts) expert.projection = identity_ffn(dim);
  model.text.projection = identity_ffn(dim);
  return model;
}

void collect_params(ModelParams& params, const std::string& prefix, std::vector<ParamRef>& out) {
  collect_params(params.moe, prefix + "video.", out);
  collect_params(params.text, prefix + "text.", out);
  out.push_back({prefix + "log_logit_scale", std::span<double>(&params.log_logit_scale, 1), {1}});
}

bool is_encoder_param(std::string_view name) { return name.starts_with("text."); }

void Dataset::validate() const {
  require(videos.size() == video_ids.size(), ErrorKind::Dimension, "video ids and videos differ in count");
  require(caption_video.size() == captions.size(), ErrorKind::Dimension, "every caption needs a video index");
  require(ambiguous.empty() || ambiguous.size() == captions.size(), ErrorKind::Dimension,
          "ambiguity flags must cover every caption");
  for (std::size_t i = 0; i < captions.size(); ++i) {
    require(caption_video[i] < videos.size(), ErrorKind::Dimension,
            "caption '" + captions[i].id + "' references a missing video");
    captions[i].validate();
  }
}

}  // namespace camoe
