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

#include "camoe/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace camoe {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const ModelParams& model, const Dataset& data, std::span<const std::size_t> pairs,
                                const LossConfig& config, const GradCheckOptions& options) {
  const ObjectiveResult analytic = evaluate_objective(model, data, pairs, config, true);
  ModelParams grads = *analytic.gradients;
  ModelParams probe = model;
  auto probe_refs = param_refs(probe);
  auto grad_refs = param_refs(grads);

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < probe_refs.size(); ++p)
    for (std::size_t k = 0; k < probe_refs[p].values.size(); ++k) coords.emplace_back(p, k);
  if (options.max_coordinates > 0 && options.max_coordinates < coords.size()) {
    Rng rng(options.sample_seed);
    rng.shuffle(coords);
    coords.resize(options.max_coordinates);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  for (const auto& [p, k] : coords) {
    if (probe_refs[p].name == "log_logit_scale" && !config.logit_scale_trainable) continue;
    double& slot = probe_refs[p].values[k];
    const double saved = slot;
    slot = saved + options.step;
    const double up = objective_value(probe, data, pairs, config);
    slot = saved - options.step;
    const double down = objective_value(probe, data, pairs, config);
    slot = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double a = grad_refs[p].values[k];
    const double err = relative_error(a, numeric);
    ++report.checked;
    if (report.checked == 1 || err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst = {probe_refs[p].name, k, a, numeric, err};
    }
  }
  return report;
}

Dataset random_instance(const InstanceShape& shape, std::uint64_t seed) {
  require(shape.batch > 0 && shape.frames > 0 && shape.dim > 0 && shape.tokens > 0, ErrorKind::Config,
          "instance dims must be positive");
  Rng rng(seed);
  Dataset data;
  for (std::size_t i = 0; i < shape.batch; ++i) {
    Matrix frames(shape.frames, shape.dim);
    for (double& v : frames.values()) v = rng.normal();
    data.video_ids.push_back("v" + std::to_string(i));
    data.videos.push_back(std::move(frames));

    CaptionRecord caption;
    caption.id = "c" + std::to_string(i);
    caption.video_id = data.video_ids.back();
    caption.tokens = Matrix(shape.tokens, shape.dim);
    for (double& v : caption.tokens.values()) v = rng.normal();
    caption.entity_mask.assign(shape.tokens, false);
    caption.action_mask.assign(shape.tokens, false);
    for (std::size_t t = 0; t < shape.tokens; ++t) {
      caption.entity_mask[t] = rng.uniform() < 0.4;
      caption.action_mask[t] = !caption.entity_mask[t] && rng.uniform() < 0.4;
    }
    // One guaranteed entity token and, when there is room, a distinct action token.
    const std::size_t e = rng.index(shape.tokens);
    const std::size_t a = shape.tokens > 1 ? (e + 1 + rng.index(shape.tokens - 1)) % shape.tokens : e;
    caption.entity_mask[e] = true;
    caption.action_mask[e] = false;
    if (a != e) caption.entity_mask[a] = false;
    caption.action_mask[a] = true;
    data.captions.push_back(std::move(caption));
    data.caption_video.push_back(i);
  }
  return data;
}

namespace {

void screen_aggregator(const AggregatorParams& agg, const Dataset& data, double& margin) {
  if (agg.kind != AggregatorKind::SeAttention) return;
  for (const auto& frames : data.videos) {
    Vector pre = column_mean(frames);
    for (std::size_t k = 0; k + 1 < agg.bottleneck.layers.size(); ++k) {
      const auto& layer = agg.bottleneck.layers[k];
      Vector next(layer.weight.rows());
      for (std::size_t r = 0; r < next.size(); ++r) {
        next[r] = dot(layer.weight.row(r), pre) + layer.bias[r];
        if (layer.activation == Activation::Relu) {
          margin = std::min(margin, std::abs(next[r]));
          next[r] = std::max(0.0, next[r]);
        }
      }
      pre = std::move(next);
    }
  }
}

}  // namespace

double relu_margin(const ModelParams& model, const Dataset& data) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& expert : model.moe.experts) screen_aggregator(expert.aggregator, data, margin);
  for (const auto& gate : model.moe.gates) screen_aggregator(gate.aggregator, data, margin);
  return margin;
}

GradCheckCaseResult run_gradcheck_case(const GradCheckCase& c, double margin) {
  GradCheckCaseResult result;
  result.config = c;
  ModelConfig config;
  config.dim = c.shape.dim;
  config.token_dim = c.shape.dim;
  config.max_frames = std::max<std::size_t>(c.shape.frames, 4);
  config.mode = c.mode;
  LossConfig loss;
  loss.dsl_enabled = c.dsl;
  // Finite differences see the priors move, so the analytic side must
  // differentiate through them too.
  loss.dsl_backprop_prior = c.dsl;
  loss.temp = c.temp;

  std::uint64_t seed = c.seed;
  for (int attempt = 0; attempt < 64; ++attempt, seed += 0x9e3779b97f4a7c15ULL) {
    ModelParams model = init_model(config, seed);
    const Dataset data = random_instance(c.shape, seed ^ 0xa5a5a5a5ULL);
    if (relu_margin(model, data) < margin) continue;
    // Random position embeddings so the attention path sees non-zero gradients
    // through them.
    Rng rng(seed + 1);
    for (auto& expert : model.moe.experts)
      for (double& v : expert.aggregator.position.values()) v = 0.1 * rng.normal();
    for (double& v : model.text.mask_embedding) v = 0.1 * rng.normal();
    const auto pairs = all_pairs(data);
    result.report = check_gradients(model, data, pairs, loss);
    result.instance_seed = seed;
    return result;
  }
  fail(ErrorKind::Config, "could not find an instance with a safe ReLU margin");
}

}  // namespace camoe
