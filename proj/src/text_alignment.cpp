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

#include "camoe/text_alignment.hpp"

#include <algorithm>
#include <utility>
#include <iostream>
#include <mutex>

namespace camoe {

std::string_view to_string(TaskId task) {
  switch (task) {
    case TaskId::Fusion: return "fusion";
    case TaskId::Entity: return "entity";
    case TaskId::Action: return "action";
  }
  return "fusion";
}

std::string_view to_string(SentenceStrategy strategy) {
  switch (strategy) {
    case SentenceStrategy::Rkw: return "rkw";
    case SentenceStrategy::Akwe: return "akwe";
    case SentenceStrategy::Muw: return "muw";
  }
  return "muw";
}

SentenceStrategy strategy_from_string(std::string_view name) {
  if (name == "rkw") return SentenceStrategy::Rkw;
  if (name == "akwe") return SentenceStrategy::Akwe;
  if (name == "muw") return SentenceStrategy::Muw;
  fail(ErrorKind::Config, "unknown sentence strategy '" + std::string(name) + "'");
}

void CaptionRecord::validate() const {
  require(tokens.rows() > 0, ErrorKind::Dimension, "caption '" + id + "' has no tokens");
  require(entity_mask.size() == tokens.rows() && action_mask.size() == tokens.rows(),
          ErrorKind::Dimension, "caption '" + id + "' mask length differs from token count");
}

TextEncoderParams make_text_encoder(std::size_t token_dim, std::size_t dim, SentenceStrategy strategy,
                                    Rng& rng) {
  TextEncoderParams params;
  params.projection = init_params(rng, FfnShape::mlp({token_dim, dim}));
  params.mask_embedding.assign(token_dim, 0.0);
  params.strategy = strategy;
  return params;
}

std::vector<bool> select_tokens(const CaptionRecord& caption, TaskId task) {
  switch (task) {
    case TaskId::Fusion: return std::vector<bool>(caption.length(), true);
    case TaskId::Entity: return caption.entity_mask;
    case TaskId::Action: return caption.action_mask;
  }
  return {};
}

namespace {

std::mutex sink_mutex;
WarningSink& sink_slot() {
  static WarningSink sink = [](std::string_view message) { std::cerr << "warning: " << message << '\n'; };
  return sink;
}

std::size_t count_active(const std::vector<bool>& active) {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

// Mean over positions fed to the projection (MUW and RKW).
Vector pooled_input(const TextEncoderParams& params, const CaptionRecord& caption,
                    const std::vector<bool>& active) {
  const std::size_t t = caption.length();
  Vector pooled(caption.tokens.cols(), 0.0);
  if (params.strategy == SentenceStrategy::Muw) {
    for (std::size_t i = 0; i < t; ++i)
      axpy(1.0, active[i] ? caption.tokens.row(i) : std::span<const double>(params.mask_embedding), pooled);
    for (double& v : pooled) v /= static_cast<double>(t);
  } else {
    for (std::size_t i = 0; i < t; ++i)
      if (active[i]) axpy(1.0, caption.tokens.row(i), pooled);
    for (double& v : pooled) v /= static_cast<double>(count_active(active));
  }
  return pooled;
}

std::vector<bool> active_tokens(const TextEncoderParams& params, const CaptionRecord& caption, TaskId task) {
  caption.validate();
  require(caption.tokens.cols() == params.projection.input_dim(), ErrorKind::Dimension,
          "caption token dim does not match the text projection");
  auto active = select_tokens(caption, task);
  require(count_active(active) > 0, ErrorKind::EmptyKeywords,
          "caption '" + caption.id + "' has no " + std::string(to_string(task)) + " keywords");
  return active;
}

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex);
  return std::exchange(sink_slot(), std::move(sink));
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex);
  if (sink_slot()) sink_slot()(message);
}

Vector encode_text(const TextEncoderParams& params, const CaptionRecord& caption, TaskId task) {
  const auto active = active_tokens(params, caption, task);
  if (params.strategy != SentenceStrategy::Akwe)
    return ffn_forward(params.projection, pooled_input(params, caption, active));

  const Matrix projected = ffn_forward(params.projection, caption.tokens);
  Vector out(projected.cols(), 0.0);
  for (std::size_t i = 0; i < caption.length(); ++i)
    if (active[i]) axpy(1.0, projected.row(i), out);
  for (double& v : out) v /= static_cast<double>(count_active(active));
  return out;
}

void encode_text_backward(const TextEncoderParams& params, const CaptionRecord& caption, TaskId task,
                          std::span<const double> grad_out, TextEncoderParams& grads) {
  const auto active = active_tokens(params, caption, task);
  const std::size_t t = caption.length();

  if (params.strategy == SentenceStrategy::Akwe) {
    FfnTrace trace;
    ffn_forward(params.projection, caption.tokens, &trace);
    Matrix dprojected(t, grad_out.size());
    const double scale = 1.0 / static_cast<double>(count_active(active));
    for (std::size_t i = 0; i < t; ++i)
      if (active[i]) axpy(scale, grad_out, dprojected.row(i));
    ffn_backward(params.projection, trace, dprojected, grads.projection);
    return;
  }

  const Vector pooled = pooled_input(params, caption, active);
  const Vector dpooled = ffn_backward(params.projection, pooled, grad_out, grads.projection);
  if (params.strategy == SentenceStrategy::Muw) {
    const double masked = static_cast<double>(t - count_active(active));
    axpy(masked / static_cast<double>(t), dpooled, grads.mask_embedding);
  }
}

TaskId effective_task(const CaptionRecord& caption, TaskId task, bool quiet) {
  if (task == TaskId::Fusion) return task;
  const auto active = select_tokens(caption, task);
  if (count_active(active) > 0) return task;
  if (!quiet)
    warn("caption '" + caption.id + "' has no " + std::string(to_string(task)) +
       " keywords; falling back to the full sentence");
  return TaskId::Fusion;
}

void collect_params(TextEncoderParams& params, const std::string& prefix, std::vector<ParamRef>& out) {
  collect_params(params.projection, prefix + "projection.", out);
  out.push_back({prefix + "mask_embedding", params.mask_embedding, {params.mask_embedding.size()}});
}

}  // namespace camoe
