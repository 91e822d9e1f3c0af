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

// Model files are line-oriented text:
//
//   camoe-model 1
//   config <key> <value...>          (one line per ModelConfig field)
//   param <name> <rank> <dims...>
//   <values, space separated, 17 significant digits>
//   ...
//   digest <16 hex digits>           (FNV-1a 64 of every preceding byte)

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "camoe/model.hpp"

namespace camoe::harness {

std::string encode_model(const ModelParams& params);
// `expected_mode`, when set, must match the stored mode.
ModelParams decode_model(std::string_view text, std::optional<TrainMode> expected_mode = std::nullopt);

void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path, std::optional<TrainMode> expected_mode = std::nullopt);

}  // namespace camoe::harness
