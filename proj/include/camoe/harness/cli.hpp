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

#include <iosfwd>
#include <string>
#include <vector>

#include "camoe/harness/dataset.hpp"
#include "camoe/trainer.hpp"

namespace camoe::harness {

std::string_view version();

// args excludes the program name. Reports go to `out`; warnings and the
// one-line JSON error record go to `err`. Returns the process exit status:
// 0 on success, 2 on usage errors, 1 on any other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Settings accepted by `train --config`.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;
  std::uint64_t init_seed = 0;
  bool dim_given = false;
  bool token_dim_given = false;
  bool max_frames_given = false;
};
RunConfig parse_run_config(const std::string& json_text);

}  // namespace camoe::harness
