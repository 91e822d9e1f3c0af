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

// Reference arithmetic for the tests. Everything here is written out with
// plain loops over nested vectors and std::exp / std::log, sharing no code
// with the library.

#include <cmath>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<double> softmax(const std::vector<double>& z) {
  double mx = z[0];
  for (double v : z) mx = v > mx ? v : mx;
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// y = W x + b with W stored out × in.
inline std::vector<double> affine(const Grid& w, const std::vector<double>& b, const std::vector<double>& x) {
  std::vector<double> y(w.size());
  for (std::size_t o = 0; o < w.size(); ++o) {
    y[o] = b[o];
    for (std::size_t i = 0; i < x.size(); ++i) y[o] += w[o][i] * x[i];
  }
  return y;
}

inline std::vector<double> relu(std::vector<double> x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
  return x;
}

inline std::vector<double> mean_rows(const Grid& x) {
  std::vector<double> m(x[0].size(), 0.0);
  for (const auto& row : x)
    for (std::size_t k = 0; k < row.size(); ++k) m[k] += row[k];
  for (double& v : m) v /= static_cast<double>(x.size());
  return m;
}

// Prior normalized over videos (rows) for each text column.
inline Grid column_prior(const Grid& s, double temp) {
  const std::size_t n = s.size();
  Grid p(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) den += std::exp(temp * s[i][j]);
    for (std::size_t i = 0; i < n; ++i) p[i][j] = std::exp(temp * s[i][j]) / den;
  }
  return p;
}

// Prior normalized over texts (columns) for each video row.
inline Grid row_prior(const Grid& s, double temp) {
  const std::size_t n = s.size();
  Grid p(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) den += std::exp(temp * s[i][j]);
    for (std::size_t j = 0; j < n; ++j) p[i][j] = std::exp(temp * s[i][j]) / den;
  }
  return p;
}

// Mean over video rows of -log softmax_j(l·S[i][j]·P[i][j]) at j = i.
inline double ce_v2t(const Grid& s, double l, const Grid* prior = nullptr) {
  const std::size_t n = s.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) den += std::exp(l * s[i][j] * (prior ? (*prior)[i][j] : 1.0));
    const double num = std::exp(l * s[i][i] * (prior ? (*prior)[i][i] : 1.0));
    total += -std::log(num / den);
  }
  return total / static_cast<double>(n);
}

// Same over text columns.
inline double ce_t2v(const Grid& s, double l, const Grid* prior = nullptr) {
  const std::size_t n = s.size();
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) den += std::exp(l * s[i][j] * (prior ? (*prior)[i][j] : 1.0));
    const double num = std::exp(l * s[j][j] * (prior ? (*prior)[j][j] : 1.0));
    total += -std::log(num / den);
  }
  return total / static_cast<double>(n);
}

inline double dsl_v2t(const Grid& s, double l, double temp) {
  const Grid p = column_prior(s, temp);
  return ce_v2t(s, l, &p);
}

inline double dsl_t2v(const Grid& s, double l, double temp) {
  const Grid p = row_prior(s, temp);
  return ce_t2v(s, l, &p);
}

}  // namespace oracle
