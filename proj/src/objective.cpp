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

#include "camoe/objective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

namespace camoe {

std::size_t evaluation_threads() {
  if (const char* env = std::getenv("CAMOE_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<std::size_t>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(evaluation_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Vector encode_caption(const ModelParams& model, const CaptionRecord& caption, TaskId task, bool quiet) {
  return encode_text(model.text, caption, effective_task(caption, model.config.text_input(task), quiet));
}

Representations encode_pairs(const ModelParams& model, const Dataset& data, std::span<const std::size_t> pairs,
                             const std::vector<TaskId>& tasks) {
  Representations reps;
  reps.videos.resize(pairs.size());
  for (TaskId t : tasks) reps.texts[index_of(t)].resize(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const std::size_t p = pairs[i];
    reps.videos[i] = forward_video(model.moe, data.video_of(p));
    for (TaskId t : tasks) reps.texts[index_of(t)][i] = encode_caption(model, data.captions[p], t);
  });
  return reps;
}

std::vector<std::size_t> all_pairs(const Dataset& data) {
  std::vector<std::size_t> pairs(data.size());
  std::iota(pairs.begin(), pairs.end(), std::size_t{0});
  return pairs;
}

ObjectiveResult evaluate_objective(const ModelParams& model, const Dataset& data,
                                   std::span<const std::size_t> pairs, const LossConfig& config,
                                   bool with_gradients) {
  require(!pairs.empty(), ErrorKind::Dimension, "objective over an empty batch");
  const auto tasks = model.config.active_tasks();
  const Representations reps = encode_pairs(model, data, pairs, tasks);
  const std::size_t b = pairs.size();

  std::map<TaskId, SimilarityMatrix> sims;
  for (TaskId t : tasks) {
    Matrix s(b, b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j)
        s(i, j) = cosine_sim(reps.videos[i][t], reps.texts[index_of(t)][j]);
    sims.emplace(t, std::move(s));
  }

  const double scale = model.logit_scale();
  ObjectiveResult result;
  result.report = total_loss(sims, scale, config);
  require(std::isfinite(result.report.total), ErrorKind::Divergence, "loss is not finite");
  if (!with_gradients) return result;

  ModelParams grads = zeros_like(model);
  const bool clamped = std::exp(model.log_logit_scale) >= LossConfig::kMaxLogitScale;
  if (config.logit_scale_trainable && !clamped)
    grads.log_logit_scale = scale * result.report.d_logit_scale;

  // Similarity → representation gradients.
  std::vector<std::array<Vector, kNumExperts>> dvideo(b);
  std::array<std::vector<Vector>, kNumExperts> dtext;
  const std::size_t d = model.config.dim;
  for (TaskId t : tasks) {
    const std::size_t ti = index_of(t);
    dtext[ti].assign(b, Vector(d, 0.0));
    for (auto& dv : dvideo) dv[ti].assign(d, 0.0);
    const Matrix& ds = result.report.d_sim[ti];
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j)
        cosine_sim_backward(reps.videos[i][t], reps.texts[ti][j], ds(i, j), dvideo[i][ti], dtext[ti][j]);
  }

  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t p = pairs[i];
    forward_video_backward(model.moe, data.video_of(p), dvideo[i], grads.moe);
    for (TaskId t : tasks) {
      const TaskId input = effective_task(data.captions[p], model.config.text_input(t), true);
      encode_text_backward(model.text, data.captions[p], input, dtext[index_of(t)][i], grads.text);
    }
  }
  result.gradients = std::move(grads);
  return result;
}

double objective_value(const ModelParams& model, const Dataset& data, std::span<const std::size_t> pairs,
                       const LossConfig& config) {
  return evaluate_objective(model, data, pairs, config, false).report.total;
}

}  // namespace camoe
