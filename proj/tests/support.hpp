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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <span>
#include <string>

#include "camoe/core_math.hpp"
#include "oracle/scalar_oracle.hpp"

namespace test {

inline oracle::Grid grid(const camoe::Matrix& m) {
  oracle::Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

inline bool same(std::span<const double> a, std::span<const double> b) { return std::ranges::equal(a, b); }

inline oracle::Grid weights(const camoe::DenseLayer& layer) { return grid(layer.weight); }

inline camoe::Matrix random_matrix(camoe::Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  camoe::Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("camoe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test
