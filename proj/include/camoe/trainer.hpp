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

#include <array>
#include <optional>
#include <vector>

#include "camoe/gradcheck.hpp"
#include "camoe/retrieval.hpp"

namespace camoe {

enum class OptimizerKind { Sgd, Adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  TrainMode mode = TrainMode::Camoe;
  // Text-encoder parameters use lr_encoder; everything else uses lr_head.
  double lr_encoder = 1e-3;
  double lr_head = 1e-2;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double warmup_fraction = 0.1;
  std::optional<std::size_t> warmup_steps;  // overrides warmup_fraction
  std::size_t max_steps = 0;                // 0: no cap
  std::size_t gradcheck_every = 0;          // 0: never
  std::size_t gradcheck_coordinates = 24;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;  // cumulative optimizer steps at the end of the epoch
  double train_loss = 0.0;
  std::array<std::optional<double>, 3> train_task_loss;
  std::optional<double> heldout_loss;
  std::array<std::optional<double>, 3> heldout_task_loss;
  double fusion_r1_t2v = 0.0;
  double fusion_r1_v2t = 0.0;
  Vector gate_mean;
  std::optional<double> gradcheck_max_rel_err;
};

struct TrainLog {
  TrainMode mode = TrainMode::Camoe;
  std::vector<EpochLog> epochs;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

TrainResult train(const Dataset& train_data, const Dataset* heldout, const ModelParams& initial,
                  const TrainConfig& config, const LossConfig& loss);

// Mean batch loss over `data` in sequential batches of `batch_size`.
struct DatasetLoss {
  double total = 0.0;
  std::array<std::optional<double>, 3> per_task;
};
DatasetLoss dataset_loss(const ModelParams& model, const Dataset& data, std::size_t batch_size,
                         const LossConfig& loss);

struct AblationRow {
  TrainMode mode = TrainMode::Camoe;
  TrainLog log;
};

// Trains every mode from the same seed on the same data.
std::vector<AblationRow> mode_ablation(const Dataset& train_data, const Dataset* heldout, const ModelConfig& model,
                                       std::uint64_t init_seed, const TrainConfig& config, const LossConfig& loss,
                                       const std::vector<TrainMode>& modes = {TrainMode::SingleTask, TrainMode::Mtac,
                                                                              TrainMode::MultiGate, TrainMode::Camoe});

}  // namespace camoe
