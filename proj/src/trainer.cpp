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

#include "camoe/trainer.hpp"

#include <cmath>
#include <sstream>

namespace camoe {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  fail(ErrorKind::Config, "unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  require(lr_encoder >= 0.0 && lr_head >= 0.0, ErrorKind::Config, "learning rates must be non-negative");
  require(epochs > 0, ErrorKind::Config, "epochs must be positive");
  require(batch_size >= 2, ErrorKind::Config, "batch size must be at least 2");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && eps > 0.0, ErrorKind::Config,
          "invalid Adam hyperparameters");
  require(warmup_fraction >= 0.0 && warmup_fraction <= 1.0, ErrorKind::Config, "warmup fraction must be in [0, 1]");
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(start + batch_size, order.size());
    // A one-pair batch has no negatives.
    if (stop - start < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

class Optimizer {
 public:
  Optimizer(ModelParams& model, const TrainConfig& config) : config_(config) {
    for (const auto& ref : param_refs(model)) {
      encoder_.push_back(is_encoder_param(ref.name));
      if (config.optimizer == OptimizerKind::Adam) {
        first_.emplace_back(ref.values.size(), 0.0);
        second_.emplace_back(ref.values.size(), 0.0);
      }
    }
  }

  void step(ModelParams& model, ModelParams& grads, double lr_scale) {
    ++t_;
    auto params = param_refs(model);
    auto gradients = param_refs(grads);
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      const double lr = lr_scale * (encoder_[p] ? config_.lr_encoder : config_.lr_head);
      auto values = params[p].values;
      auto g = gradients[p].values;
      if (config_.optimizer == OptimizerKind::Sgd) {
        for (std::size_t k = 0; k < values.size(); ++k) values[k] -= lr * g[k];
        continue;
      }
      auto& m = first_[p];
      auto& v = second_[p];
      for (std::size_t k = 0; k < values.size(); ++k) {
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
        values[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
      }
    }
  }

 private:
  const TrainConfig& config_;
  std::vector<bool> encoder_;
  std::vector<Vector> first_, second_;
  std::size_t t_ = 0;
};

std::string snapshot(ModelParams& model, std::size_t epoch, std::size_t step, const std::string& what) {
  std::ostringstream os;
  os << "training diverged at epoch " << epoch << " step " << step << ": " << what << "; parameter norms:";
  for (const auto& ref : param_refs(model)) os << ' ' << ref.name << '=' << norm(ref.values);
  return os.str();
}

void check_mode(const ModelParams& model, TrainMode mode) {
  require(model.config.mode == mode, ErrorKind::ModeMismatch,
          "model was built for mode '" + std::string(to_string(model.config.mode)) + "' but mode '" +
              std::string(to_string(mode)) + "' was requested");
}

}  // namespace

DatasetLoss dataset_loss(const ModelParams& model, const Dataset& data, std::size_t batch_size,
                         const LossConfig& loss) {
  const auto batches = make_batches(all_pairs(data), batch_size);
  require(!batches.empty(), ErrorKind::Dimension, "dataset too small for one batch");
  DatasetLoss out;
  for (const auto& batch : batches) {
    const auto result = evaluate_objective(model, data, batch, loss, false);
    out.total += result.report.total;
    for (std::size_t t = 0; t < 3; ++t)
      if (result.report.per_task[t]) out.per_task[t] = out.per_task[t].value_or(0.0) + result.report.per_task[t]->sum();
  }
  const double n = static_cast<double>(batches.size());
  out.total /= n;
  for (auto& v : out.per_task)
    if (v) *v /= n;
  return out;
}

TrainResult train(const Dataset& train_data, const Dataset* heldout, const ModelParams& initial,
                  const TrainConfig& config, const LossConfig& loss) {
  config.validate();
  loss.validate();
  check_mode(initial, config.mode);
  train_data.validate();
  require(train_data.size() >= config.batch_size, ErrorKind::Config, "batch size exceeds the dataset size");

  // Report keyword fallbacks once, up front.
  for (const auto& caption : train_data.captions)
    for (TaskId t : initial.config.active_tasks()) effective_task(caption, initial.config.text_input(t));

  TrainResult result{initial, {config.mode, {}}};
  ModelParams& model = result.params;
  Optimizer optimizer(model, config);
  Rng rng(config.seed);

  std::vector<std::size_t> order = all_pairs(train_data);
  const std::size_t per_epoch = make_batches(order, config.batch_size).size();
  std::size_t total_steps = per_epoch * config.epochs;
  if (config.max_steps > 0) total_steps = std::min(total_steps, config.max_steps);
  const std::size_t warmup = config.warmup_steps.value_or(
      static_cast<std::size_t>(std::ceil(config.warmup_fraction * static_cast<double>(total_steps))));

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs && step < total_steps; ++epoch) {
    rng.shuffle(order);
    EpochLog entry;
    entry.epoch = epoch + 1;
    std::size_t batches_run = 0;
    for (const auto& batch : make_batches(order, config.batch_size)) {
      if (step >= total_steps) break;
      ObjectiveResult obj;
      try {
        obj = evaluate_objective(model, train_data, batch, loss, true);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Divergence) fail(ErrorKind::Divergence, snapshot(model, epoch + 1, step, e.what()));
        throw;
      }
      ModelParams& grads = *obj.gradients;
      {
        auto refs = param_refs(grads);
        for (const auto& ref : refs)
          if (!all_finite(ref.values))
            fail(ErrorKind::Divergence, snapshot(model, epoch + 1, step, "non-finite gradient in " + ref.name));
      }

      if (config.gradcheck_every > 0 && step % config.gradcheck_every == 0) {
        LossConfig check = loss;
        check.dsl_backprop_prior = loss.dsl_enabled && !loss.dsl_literal_numerator;
        GradCheckOptions opts;
        opts.max_coordinates = config.gradcheck_coordinates;
        opts.sample_seed = config.seed + step;
        const auto report = check_gradients(model, train_data, batch, check, opts);
        entry.gradcheck_max_rel_err = std::max(entry.gradcheck_max_rel_err.value_or(0.0), report.max_rel_err);
      }

      entry.train_loss += obj.report.total;
      for (std::size_t t = 0; t < 3; ++t)
        if (obj.report.per_task[t])
          entry.train_task_loss[t] = entry.train_task_loss[t].value_or(0.0) + obj.report.per_task[t]->sum();

      const double scale = warmup == 0 ? 1.0 : std::min(1.0, static_cast<double>(step + 1) / static_cast<double>(warmup));
      optimizer.step(model, grads, scale);
      ++step;
      ++batches_run;
    }
    if (batches_run == 0) break;

    const double n = static_cast<double>(batches_run);
    entry.train_loss /= n;
    for (auto& v : entry.train_task_loss)
      if (v) *v /= n;
    entry.steps = step;
    if (heldout != nullptr) {
      const auto held = dataset_loss(model, *heldout, config.batch_size, loss);
      entry.heldout_loss = held.total;
      entry.heldout_task_loss = held.per_task;
    }
    const SimilarityMatrix sim = task_similarity(model, train_data, TaskId::Fusion);
    entry.fusion_r1_t2v = compute_metrics(sim, Direction::T2V).r1;
    entry.fusion_r1_v2t = compute_metrics(sim, Direction::V2T).r1;
    entry.gate_mean = gate_report(model, train_data).mean;
    result.log.epochs.push_back(std::move(entry));
  }
  return result;
}

std::vector<AblationRow> mode_ablation(const Dataset& train_data, const Dataset* heldout, const ModelConfig& model,
                                       std::uint64_t init_seed, const TrainConfig& config, const LossConfig& loss,
                                       const std::vector<TrainMode>& modes) {
  std::vector<AblationRow> rows;
  for (TrainMode mode : modes) {
    ModelConfig mc = model;
    mc.mode = mode;
    TrainConfig tc = config;
    tc.mode = mode;
    rows.push_back({mode, train(train_data, heldout, init_model(mc, init_seed), tc, loss).log});
  }
  return rows;
}

}  // namespace camoe
