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

// Sentence generation strategies and the toy text encoder. Keyword masks are
// supplied as data; the encoder is a mean over (masked) token embeddings
// followed by a learned projection.

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "camoe/core_math.hpp"

namespace camoe {

enum class TaskId { Fusion = 0, Entity = 1, Action = 2 };

inline constexpr std::array<TaskId, 3> kAllTasks{TaskId::Fusion, TaskId::Entity, TaskId::Action};
inline constexpr std::size_t index_of(TaskId task) { return static_cast<std::size_t>(task); }

std::string_view to_string(TaskId task);

enum class SentenceStrategy {
  Rkw,   // recombine keywords: drop everything else
  Akwe,  // average keyword embeddings after encoding the full sentence
  Muw,   // mask unconsidered words with a learned mask token
};

std::string_view to_string(SentenceStrategy strategy);
SentenceStrategy strategy_from_string(std::string_view name);

struct CaptionRecord {
  std::string id;
  std::string video_id;
  std::vector<std::string> words;  // optional, informational
  Matrix tokens;                   // T × d_in
  std::vector<bool> entity_mask;
  std::vector<bool> action_mask;

  std::size_t length() const { return tokens.rows(); }
  void validate() const;
};

struct TextEncoderParams {
  FfnParams projection;  // d_in → d
  Vector mask_embedding;  // d_in
  SentenceStrategy strategy = SentenceStrategy::Muw;
};

TextEncoderParams make_text_encoder(std::size_t token_dim, std::size_t dim, SentenceStrategy strategy,
                                    Rng& rng);

std::vector<bool> select_tokens(const CaptionRecord& caption, TaskId task);

// Throws ErrorKind::EmptyKeywords when the task selects no tokens.
Vector encode_text(const TextEncoderParams& params, const CaptionRecord& caption, TaskId task);

void encode_text_backward(const TextEncoderParams& params, const CaptionRecord& caption, TaskId task,
                          std::span<const double> grad_out, TextEncoderParams& grads);

// Returns `task`, or Fusion when the caption has no keywords for `task`.
// Fallbacks are reported through the warning sink unless `quiet`.
TaskId effective_task(const CaptionRecord& caption, TaskId task, bool quiet = false);

using WarningSink = std::function<void(std::string_view)>;
// Installs a process-wide sink for recoverable-condition warnings. The
// default writes to stderr. Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(std::string_view message);

void collect_params(TextEncoderParams& params, const std::string& prefix, std::vector<ParamRef>& out);

}  // namespace camoe
