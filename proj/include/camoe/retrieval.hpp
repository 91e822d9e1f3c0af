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

// Similarity construction, Dual-Softmax reranking, ranking metrics and gate
// analysis over a full evaluation gallery.

#include <string_view>
#include <vector>

#include "camoe/loss.hpp"
#include "camoe/objective.hpp"

namespace camoe {

enum class Direction {
  T2V,  // text queries (columns) rank videos (rows)
  V2T,  // video queries (rows) rank texts (columns)
};

std::string_view to_string(Direction direction);
Direction direction_from_string(std::string_view name);

struct RankingResult {
  Direction direction = Direction::T2V;
  std::vector<std::size_t> ranks;  // 1-based rank of the ground truth, per query
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double median_rank = 0.0;
  double mean_rank = 0.0;
};

SimilarityMatrix build_similarity(std::span<const VideoReprSet> videos, std::span<const Vector> texts, TaskId task);

// S ⊙ Pr for the requested direction. A non-zero window normalizes each prior
// over consecutive blocks of `window` entries instead of the whole gallery.
SimilarityMatrix dsl_rerank(const SimilarityMatrix& sim, double temp, Direction direction, std::size_t window = 0);

// Rank = 1 + number of gallery items scoring strictly higher than the ground
// truth (ties resolve optimistically).
RankingResult compute_metrics(const SimilarityMatrix& sim, Direction direction);

struct EvalConfig {
  double temp = 100.0;
  std::size_t dsl_window = 0;
};

struct ExpertEval {
  TaskId task = TaskId::Fusion;
  RankingResult plain_t2v, plain_v2t;
  RankingResult dsl_t2v, dsl_v2t;
};

// Similarity matrix of one task over every pair of the dataset.
SimilarityMatrix task_similarity(const ModelParams& model, const Dataset& data, TaskId task);

ExpertEval evaluate_task(const ModelParams& model, const Dataset& data, TaskId task, const EvalConfig& config);
std::vector<ExpertEval> per_expert_eval(const ModelParams& model, const Dataset& data, const EvalConfig& config);

struct GateReport {
  std::vector<std::string> video_ids;
  std::vector<Vector> weights;  // per video, fusion gate
  Vector mean;
};

GateReport gate_report(const ModelParams& model, const Dataset& data);

}  // namespace camoe
