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

// End-to-end forward and reverse pass: frames and captions → per-task cosine
// similarity matrices → summed contrastive loss → gradients for every
// parameter of the model.

#include <functional>
#include <optional>
#include <span>

#include "camoe/loss.hpp"
#include "camoe/model.hpp"

namespace camoe {

// Number of worker threads for pure evaluation work. Reads CAMOE_THREADS,
// defaulting to the hardware concurrency. Results never depend on it.
std::size_t evaluation_threads();

// Calls fn(i) for i in [0, n) across evaluation_threads() workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Caption-side representation for `task`, with the empty-keyword fallback.
Vector encode_caption(const ModelParams& model, const CaptionRecord& caption, TaskId task,
                      bool quiet = true);

struct Representations {
  std::vector<VideoReprSet> videos;              // per pair
  std::array<std::vector<Vector>, 3> texts;      // per task, per pair; empty if the task is inactive
};

Representations encode_pairs(const ModelParams& model, const Dataset& data, std::span<const std::size_t> pairs,
                             const std::vector<TaskId>& tasks);

struct ObjectiveResult {
  LossReport report;
  std::optional<ModelParams> gradients;  // set when requested; same layout as the model
};

ObjectiveResult evaluate_objective(const ModelParams& model, const Dataset& data,
                                   std::span<const std::size_t> pairs, const LossConfig& config,
                                   bool with_gradients);

// Loss value only; used by finite-difference checks.
double objective_value(const ModelParams& model, const Dataset& data, std::span<const std::size_t> pairs,
                       const LossConfig& config);

std::vector<std::size_t> all_pairs(const Dataset& data);

}  // namespace camoe
