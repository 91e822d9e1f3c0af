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

#include "camoe/loss.hpp"

#include <cmath>

namespace camoe {

void LossConfig::validate() const {
  require(temp > 0.0 && std::isfinite(temp), ErrorKind::Config, "DSL temperature must be positive");
  require(!(dsl_backprop_prior && dsl_literal_numerator), ErrorKind::Config,
          "dsl_backprop_prior is only defined for normalized priors");
  for (double w : task_weights)
    require(w >= 0.0 && std::isfinite(w), ErrorKind::Config, "task weights must be non-negative");
}

double default_log_logit_scale() { return std::log(1.0 / 0.07); }

double logit_scale_from_log(double log_scale) {
  return std::min(std::exp(log_scale), LossConfig::kMaxLogitScale);
}

namespace {

void check_square(const SimilarityMatrix& sim) {
  require(sim.rows() > 0 && sim.rows() == sim.cols(), ErrorKind::Dimension,
          "similarity matrix must be square and non-empty, got " + std::to_string(sim.rows()) + "x" +
              std::to_string(sim.cols()));
  require(all_finite(sim.values()), ErrorKind::Domain, "similarity matrix has non-finite entries");
}

Matrix row_softmax(const Matrix& m, double scale) {
  Matrix out(m.rows(), m.cols());
  Vector buf(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) buf[c] = scale * m(r, c);
    const Vector p = softmax(buf);
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

Matrix column_softmax(const Matrix& m, double scale) {
  return row_softmax(m.transposed(), scale).transposed();
}

// One direction of the cross-entropy. `row_major` selects whether queries are
// rows (v2t) or columns (t2v). The prior may be empty (all ones).
struct DirectionGrad {
  double loss = 0.0;
  Matrix d_sim;
  Matrix d_prior;
  double d_scale = 0.0;
};

DirectionGrad direction_loss(const Matrix& sim, const Matrix* prior, double scale, bool row_major,
                             bool want_grad) {
  const std::size_t b = sim.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  DirectionGrad out;
  if (want_grad) {
    out.d_sim = Matrix(b, b);
    out.d_prior = Matrix(b, b);
  }
  Vector logits(b);
  for (std::size_t q = 0; q < b; ++q) {
    auto entry = [&](std::size_t k) -> std::pair<std::size_t, std::size_t> {
      return row_major ? std::pair{q, k} : std::pair{k, q};
    };
    for (std::size_t k = 0; k < b; ++k) {
      const auto [r, c] = entry(k);
      logits[k] = scale * sim(r, c) * (prior ? (*prior)(r, c) : 1.0);
    }
    const Vector p = softmax(logits);
    out.loss -= std::log(p[q]) * inv_b;
    if (!want_grad) continue;
    for (std::size_t k = 0; k < b; ++k) {
      const auto [r, c] = entry(k);
      const double dz = (p[k] - (k == q ? 1.0 : 0.0)) * inv_b;
      const double pr = prior ? (*prior)(r, c) : 1.0;
      out.d_sim(r, c) += dz * scale * pr;
      out.d_prior(r, c) += dz * scale * sim(r, c);
      out.d_scale += dz * sim(r, c) * pr;
    }
  }
  return out;
}

}  // namespace

DirectionalLoss symmetric_ce(const SimilarityMatrix& sim, double logit_scale) {
  check_square(sim);
  return {direction_loss(sim, nullptr, logit_scale, true, false).loss,
          direction_loss(sim, nullptr, logit_scale, false, false).loss};
}

Priors dsl_priors(const SimilarityMatrix& sim, double temp, bool literal_numerator) {
  check_square(sim);
  require(temp > 0.0, ErrorKind::Config, "DSL temperature must be positive");
  Priors pr{column_softmax(sim, temp), row_softmax(sim, temp)};
  if (literal_numerator) {
    const std::size_t b = sim.rows();
    Matrix v2t(b, b);
    Matrix t2v(b, b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        v2t(i, j) = pr.v2t(i, i);
        t2v(i, j) = pr.t2v(i, i);
      }
    pr = {std::move(v2t), std::move(t2v)};
  }
  return pr;
}

DirectionalLoss dsl_loss(const SimilarityMatrix& sim, double logit_scale, const LossConfig& config) {
  check_square(sim);
  config.validate();
  const Priors pr = dsl_priors(sim, config.temp, config.dsl_literal_numerator);
  return {direction_loss(sim, &pr.v2t, logit_scale, true, false).loss,
          direction_loss(sim, &pr.t2v, logit_scale, false, false).loss};
}

ContrastiveGrad contrastive_loss_with_grad(const SimilarityMatrix& sim, double logit_scale,
                                           const LossConfig& config) {
  check_square(sim);
  config.validate();
  ContrastiveGrad out;
  if (!config.dsl_enabled) {
    auto v2t = direction_loss(sim, nullptr, logit_scale, true, true);
    auto t2v = direction_loss(sim, nullptr, logit_scale, false, true);
    out.value = {v2t.loss, t2v.loss};
    out.d_sim = std::move(v2t.d_sim);
    axpy(1.0, t2v.d_sim.values(), out.d_sim.values());
    out.d_logit_scale = v2t.d_scale + t2v.d_scale;
    return out;
  }

  const Priors pr = dsl_priors(sim, config.temp, config.dsl_literal_numerator);
  auto v2t = direction_loss(sim, &pr.v2t, logit_scale, true, true);
  auto t2v = direction_loss(sim, &pr.t2v, logit_scale, false, true);
  out.value = {v2t.loss, t2v.loss};
  out.d_sim = std::move(v2t.d_sim);
  axpy(1.0, t2v.d_sim.values(), out.d_sim.values());
  out.d_logit_scale = v2t.d_scale + t2v.d_scale;

  if (config.dsl_backprop_prior) {
    const std::size_t b = sim.rows();
    Vector probs(b), grads(b);
    // v2t prior: softmax down each column.
    for (std::size_t c = 0; c < b; ++c) {
      for (std::size_t r = 0; r < b; ++r) {
        probs[r] = pr.v2t(r, c);
        grads[r] = v2t.d_prior(r, c);
      }
      const Vector g = softmax_backward(probs, grads);
      for (std::size_t r = 0; r < b; ++r) out.d_sim(r, c) += config.temp * g[r];
    }
    // t2v prior: softmax along each row.
    for (std::size_t r = 0; r < b; ++r) {
      const Vector g = softmax_backward(pr.t2v.row(r), t2v.d_prior.row(r));
      for (std::size_t c = 0; c < b; ++c) out.d_sim(r, c) += config.temp * g[c];
    }
  }
  return out;
}

LossReport total_loss(const std::map<TaskId, SimilarityMatrix>& per_task, double logit_scale,
                      const LossConfig& config) {
  require(!per_task.empty(), ErrorKind::Dimension, "total_loss needs at least one task");
  const std::size_t b = per_task.begin()->second.rows();
  LossReport report;
  for (const auto& [task, sim] : per_task) {
    require(sim.rows() == b && sim.cols() == b, ErrorKind::Dimension,
            "task similarity matrices have mismatched batch sizes");
    const double weight = config.task_weights[index_of(task)];
    ContrastiveGrad g = contrastive_loss_with_grad(sim, logit_scale, config);
    report.per_task[index_of(task)] = g.value;
    report.total += weight * g.value.sum();
    for (double& v : g.d_sim.values()) v *= weight;
    report.d_sim[index_of(task)] = std::move(g.d_sim);
    report.d_logit_scale += weight * g.d_logit_scale;
  }
  return report;
}

}  // namespace camoe
