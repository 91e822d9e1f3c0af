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

// Central finite-difference verification of the analytic gradients.

#include <cstdint>
#include <string>

#include "camoe/objective.hpp"

namespace camoe {

// |a - n| / max(|a|, |n|, floor). The floor keeps the ratio meaningful for
// gradients that are zero up to roundoff: with h = 1e-5 and losses of order
// 10, the central difference itself carries about 1e-10 of rounding noise.
double relative_error(double analytic, double numeric, double floor = 1e-5);

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_err = 0.0;
  GradCheckEntry worst;

  bool passed(double tolerance = 1e-4) const { return max_rel_err < tolerance; }
};

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise this many coordinates are sampled.
  std::size_t max_coordinates = 0;
  std::uint64_t sample_seed = 0;
};

GradCheckReport check_gradients(const ModelParams& model, const Dataset& data, std::span<const std::size_t> pairs,
                                const LossConfig& config, const GradCheckOptions& options = {});

struct InstanceShape {
  std::size_t batch = 4;
  std::size_t frames = 3;
  std::size_t dim = 8;
  std::size_t tokens = 5;
};

// Random frames and captions (with random keyword masks, each with at least
// one active token) for gradient checks.
Dataset random_instance(const InstanceShape& shape, std::uint64_t seed);

// Smallest |pre-activation| over every ReLU unit reached by `data`. Finite
// differences are only trustworthy when this is well above the step size.
double relu_margin(const ModelParams& model, const Dataset& data);

struct GradCheckCase {
  InstanceShape shape;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Camoe;
  bool dsl = false;
  double temp = 5.0;
};

struct GradCheckCaseResult {
  GradCheckCase config;
  GradCheckReport report;
  std::uint64_t instance_seed = 0;  // seed actually used after ReLU-margin screening
};

// Builds a screened instance and model from the case seed and checks every
// coordinate.
GradCheckCaseResult run_gradcheck_case(const GradCheckCase& c, double margin = 1e-3);

}  // namespace camoe
