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

// Contrastive objectives over a B × B cosine-similarity matrix (rows are
// videos, columns are texts, the diagonal is the ground-truth pairing).

#include <array>
#include <map>
#include <optional>

#include "camoe/core_math.hpp"
#include "camoe/text_alignment.hpp"

namespace camoe {

using SimilarityMatrix = Matrix;

struct DirectionalLoss {
  double v2t = 0.0;
  double t2v = 0.0;

  double sum() const { return v2t + t2v; }
};

struct Priors {
  Matrix v2t;  // column-wise softmax of temp·S (normalized over videos per text)
  Matrix t2v;  // row-wise softmax of temp·S (normalized over texts per video)
};

struct LossConfig {
  static constexpr double kMaxLogitScale = 100.0;

  double temp = 100.0;
  bool dsl_enabled = false;
  // Differentiate through the priors instead of treating them as constants.
  bool dsl_backprop_prior = false;
  // Every prior numerator uses the diagonal entry exp(temp·S_kk) of its
  // row or column. The priors then no longer normalize.
  bool dsl_literal_numerator = false;
  bool logit_scale_trainable = true;
  std::array<double, 3> task_weights{1.0, 1.0, 1.0};

  void validate() const;
};

// ln(1/0.07), the CLIP initialization.
double default_log_logit_scale();
// exp(log_scale) clamped to kMaxLogitScale.
double logit_scale_from_log(double log_scale);

DirectionalLoss symmetric_ce(const SimilarityMatrix& sim, double logit_scale);

Priors dsl_priors(const SimilarityMatrix& sim, double temp, bool literal_numerator = false);

DirectionalLoss dsl_loss(const SimilarityMatrix& sim, double logit_scale, const LossConfig& config);

// Value and gradients of one task's contrastive loss (plain or DSL per
// config.dsl_enabled).
struct ContrastiveGrad {
  DirectionalLoss value;
  Matrix d_sim;
  double d_logit_scale = 0.0;
};

ContrastiveGrad contrastive_loss_with_grad(const SimilarityMatrix& sim, double logit_scale,
                                           const LossConfig& config);

struct LossReport {
  std::array<std::optional<DirectionalLoss>, 3> per_task;  // indexed by TaskId
  double total = 0.0;
  std::array<Matrix, 3> d_sim;  // dL/dS_t, empty for inactive tasks
  double d_logit_scale = 0.0;   // dL/dl (not the log-space parameter)
};

LossReport total_loss(const std::map<TaskId, SimilarityMatrix>& per_task, double logit_scale,
                      const LossConfig& config);

}  // namespace camoe
