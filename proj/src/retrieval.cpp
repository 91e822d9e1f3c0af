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

#include "camoe/retrieval.hpp"

#include <algorithm>
#include <numeric>

namespace camoe {

std::string_view to_string(Direction direction) { return direction == Direction::T2V ? "t2v" : "v2t"; }

Direction direction_from_string(std::string_view name) {
  if (name == "t2v") return Direction::T2V;
  if (name == "v2t") return Direction::V2T;
  fail(ErrorKind::Usage, "unknown direction '" + std::string(name) + "' (expected t2v or v2t)");
}

SimilarityMatrix build_similarity(std::span<const VideoReprSet> videos, std::span<const Vector> texts, TaskId task) {
  require(videos.size() == texts.size(), ErrorKind::Dimension, "video and text counts differ");
  Matrix sim(videos.size(), texts.size());
  for (std::size_t i = 0; i < videos.size(); ++i)
    for (std::size_t j = 0; j < texts.size(); ++j) sim(i, j) = cosine_sim(videos[i][task], texts[j]);
  return sim;
}

SimilarityMatrix dsl_rerank(const SimilarityMatrix& sim, double temp, Direction direction, std::size_t window) {
  require(sim.rows() == sim.cols() && sim.rows() > 0, ErrorKind::Dimension, "rerank needs a square matrix");
  require(temp > 0.0, ErrorKind::Config, "rerank temperature must be positive");
  const std::size_t b = sim.rows();
  const std::size_t w = window == 0 ? b : std::min(window, b);
  Matrix out = sim;
  Vector buf;
  // V2T ranks along rows, so its prior normalizes down columns (over videos);
  // T2V the other way round.
  const bool over_rows = direction == Direction::V2T;
  for (std::size_t fixed = 0; fixed < b; ++fixed)
    for (std::size_t start = 0; start < b; start += w) {
      const std::size_t stop = std::min(start + w, b);
      buf.resize(stop - start);
      for (std::size_t k = start; k < stop; ++k)
        buf[k - start] = temp * (over_rows ? sim(k, fixed) : sim(fixed, k));
      const Vector prior = softmax(buf);
      for (std::size_t k = start; k < stop; ++k) {
        double& cell = over_rows ? out(k, fixed) : out(fixed, k);
        cell *= prior[k - start];
      }
    }
  return out;
}

RankingResult compute_metrics(const SimilarityMatrix& sim, Direction direction) {
  require(sim.rows() == sim.cols() && sim.rows() > 0, ErrorKind::Dimension, "metrics need a square matrix");
  const std::size_t n = sim.rows();
  RankingResult result;
  result.direction = direction;
  result.ranks.resize(n);
  for (std::size_t q = 0; q < n; ++q) {
    auto score = [&](std::size_t g) { return direction == Direction::V2T ? sim(q, g) : sim(g, q); };
    const double truth = score(q);
    std::size_t higher = 0;
    for (std::size_t g = 0; g < n; ++g)
      if (score(g) > truth) ++higher;
    result.ranks[q] = higher + 1;
  }
  auto recall = [&](std::size_t k) {
    const auto hits = std::count_if(result.ranks.begin(), result.ranks.end(), [k](std::size_t r) { return r <= k; });
    return static_cast<double>(hits) / static_cast<double>(n);
  };
  result.r1 = recall(1);
  result.r5 = recall(5);
  result.r10 = recall(10);
  std::vector<std::size_t> sorted = result.ranks;
  std::sort(sorted.begin(), sorted.end());
  result.median_rank = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                                  : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
  result.mean_rank = static_cast<double>(std::accumulate(sorted.begin(), sorted.end(), std::size_t{0})) /
                     static_cast<double>(n);
  return result;
}

SimilarityMatrix task_similarity(const ModelParams& model, const Dataset& data, TaskId task) {
  const auto pairs = all_pairs(data);
  const Representations reps = encode_pairs(model, data, pairs, {task});
  return build_similarity(reps.videos, reps.texts[index_of(task)], task);
}

ExpertEval evaluate_task(const ModelParams& model, const Dataset& data, TaskId task, const EvalConfig& config) {
  const SimilarityMatrix sim = task_similarity(model, data, task);
  ExpertEval eval;
  eval.task = task;
  eval.plain_t2v = compute_metrics(sim, Direction::T2V);
  eval.plain_v2t = compute_metrics(sim, Direction::V2T);
  eval.dsl_t2v = compute_metrics(dsl_rerank(sim, config.temp, Direction::T2V, config.dsl_window), Direction::T2V);
  eval.dsl_v2t = compute_metrics(dsl_rerank(sim, config.temp, Direction::V2T, config.dsl_window), Direction::V2T);
  return eval;
}

std::vector<ExpertEval> per_expert_eval(const ModelParams& model, const Dataset& data, const EvalConfig& config) {
  std::vector<ExpertEval> out;
  for (TaskId task : kAllTasks) out.push_back(evaluate_task(model, data, task, config));
  return out;
}

GateReport gate_report(const ModelParams& model, const Dataset& data) {
  GateReport report;
  report.mean.assign(kNumExperts, 0.0);
  report.video_ids = data.video_ids;
  report.weights.resize(data.videos.size());
  parallel_for(data.videos.size(), [&](std::size_t i) {
    report.weights[i] = model.moe.gates.empty() ? Vector{1.0, 0.0, 0.0}
                                                : gate_weights(model.moe.gates[0], data.videos[i]);
  });
  for (const auto& w : report.weights) axpy(1.0, w, report.mean);
  if (!report.weights.empty())
    for (double& v : report.mean) v /= static_cast<double>(report.weights.size());
  return report;
}

}  // namespace camoe
