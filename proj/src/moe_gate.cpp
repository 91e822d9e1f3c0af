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

#include "camoe/moe_gate.hpp"

namespace camoe {

std::string_view to_string(GatingMode mode) {
  switch (mode) {
    case GatingMode::NoGate: return "none";
    case GatingMode::SingleGate: return "single";
    case GatingMode::MultiGate: return "multi";
  }
  return "single";
}

std::size_t gate_count(GatingMode mode) {
  switch (mode) {
    case GatingMode::NoGate: return 0;
    case GatingMode::SingleGate: return 1;
    case GatingMode::MultiGate: return kNumExperts;
  }
  return 0;
}

void MoeParams::validate() const {
  require(gates.size() == gate_count(mode), ErrorKind::ModeMismatch,
          "gating mode '" + std::string(to_string(mode)) + "' expects " +
              std::to_string(gate_count(mode)) + " gates, got " + std::to_string(gates.size()));
  for (const auto& gate : gates)
    require(gate.projection.cols() == kNumExperts, ErrorKind::Dimension,
            "gate projection must have one column per expert");
}

Vector expert_forward(const ExpertParams& expert, const Matrix& frames) {
  return ffn_forward(expert.projection, aggregate(expert.aggregator, frames));
}

namespace {

// logits_e = Σ_k AGG(x)_k · W^p[k][e]
Vector gate_logits(const GateParams& gate, std::span<const double> pooled) {
  require(gate.projection.rows() == pooled.size(), ErrorKind::Dimension,
          "gate projection rows do not match the aggregated dim");
  Vector logits(gate.projection.cols(), 0.0);
  for (std::size_t k = 0; k < pooled.size(); ++k)
    for (std::size_t e = 0; e < logits.size(); ++e) logits[e] += pooled[k] * gate.projection(k, e);
  return logits;
}

// dL/dframes contribution from one gate given dL/dg.
Matrix gate_backward(const GateParams& gate, const Matrix& frames, std::span<const double> dweights,
                     GateParams& grads) {
  const Vector pooled = aggregate(gate.aggregator, frames);
  const Vector weights = softmax(gate_logits(gate, pooled));
  const Vector dlogits = softmax_backward(weights, dweights);
  Vector dpooled(pooled.size(), 0.0);
  for (std::size_t k = 0; k < pooled.size(); ++k)
    for (std::size_t e = 0; e < dlogits.size(); ++e) {
      grads.projection(k, e) += pooled[k] * dlogits[e];
      dpooled[k] += gate.projection(k, e) * dlogits[e];
    }
  return aggregate_backward(gate.aggregator, frames, dpooled, grads.aggregator);
}

std::array<Vector, kNumExperts> all_experts(const MoeParams& params, const Matrix& frames) {
  std::array<Vector, kNumExperts> out;
  for (std::size_t i = 0; i < kNumExperts; ++i) out[i] = expert_forward(params.experts[i], frames);
  return out;
}

}  // namespace

Vector gate_weights(const GateParams& gate, const Matrix& frames) {
  return softmax(gate_logits(gate, aggregate(gate.aggregator, frames)));
}

Vector mix_experts(const std::array<Vector, kNumExperts>& outputs, std::span<const double> weights) {
  require(weights.size() == kNumExperts, ErrorKind::Dimension, "gate weights must have one entry per expert");
  Vector mixed(outputs[0].size(), 0.0);
  for (std::size_t i = 0; i < kNumExperts; ++i) axpy(weights[i], outputs[i], mixed);
  return mixed;
}

VideoReprSet forward_video(const MoeParams& params, const Matrix& frames) {
  params.validate();
  const auto experts = all_experts(params, frames);
  VideoReprSet out;
  switch (params.mode) {
    case GatingMode::NoGate:
      out.repr = experts;
      out.gate = {1.0, 0.0, 0.0};
      break;
    case GatingMode::SingleGate:
      out.gate = gate_weights(params.gates[0], frames);
      out.repr = experts;
      out.repr[index_of(TaskId::Fusion)] = mix_experts(experts, out.gate);
      break;
    case GatingMode::MultiGate:
      for (std::size_t t = 0; t < kNumExperts; ++t) {
        const Vector g = gate_weights(params.gates[t], frames);
        out.repr[t] = mix_experts(experts, g);
        if (t == index_of(TaskId::Fusion)) out.gate = g;
      }
      break;
  }
  return out;
}

VideoReprSet forward_video(const std::array<ExpertParams, kNumExperts>& experts, const GateParams& gate,
                           const Matrix& frames, GatingMode mode) {
  MoeParams params;
  params.mode = mode;
  params.experts = experts;
  params.gates.assign(gate_count(mode), gate);
  return forward_video(params, frames);
}

Matrix forward_video_backward(const MoeParams& params, const Matrix& frames,
                              const std::array<Vector, kNumExperts>& grad_repr, MoeParams& grads) {
  params.validate();
  const std::size_t d = frames.cols();
  Matrix dframes(frames.rows(), d);
  const auto experts = all_experts(params, frames);

  // dL/de_i accumulated over every task output that depends on expert i.
  std::array<Vector, kNumExperts> dexpert;
  for (auto& v : dexpert) v.assign(experts[0].size(), 0.0);

  auto route_gated = [&](std::size_t gate_index, std::span<const double> grad_task) {
    const GateParams& gate = params.gates[gate_index];
    const Vector g = gate_weights(gate, frames);
    Vector dg(kNumExperts, 0.0);
    for (std::size_t i = 0; i < kNumExperts; ++i) {
      axpy(g[i], grad_task, dexpert[i]);
      dg[i] = dot(grad_task, experts[i]);
    }
    const Matrix df = gate_backward(gate, frames, dg, grads.gates[gate_index]);
    axpy(1.0, df.values(), dframes.values());
  };

  for (std::size_t t = 0; t < kNumExperts; ++t) {
    if (grad_repr[t].empty()) continue;
    const bool gated = params.mode == GatingMode::MultiGate ||
                       (params.mode == GatingMode::SingleGate && t == index_of(TaskId::Fusion));
    if (gated)
      route_gated(params.mode == GatingMode::MultiGate ? t : 0, grad_repr[t]);
    else
      axpy(1.0, grad_repr[t], dexpert[t]);
  }

  for (std::size_t i = 0; i < kNumExperts; ++i) {
    const ExpertParams& expert = params.experts[i];
    const Vector pooled = aggregate(expert.aggregator, frames);
    const Vector dpooled = ffn_backward(expert.projection, pooled, dexpert[i], grads.experts[i].projection);
    const Matrix df = aggregate_backward(expert.aggregator, frames, dpooled, grads.experts[i].aggregator);
    axpy(1.0, df.values(), dframes.values());
  }
  return dframes;
}

void collect_params(ExpertParams& params, const std::string& prefix, std::vector<ParamRef>& out) {
  collect_params(params.aggregator, prefix + "aggregator.", out);
  collect_params(params.projection, prefix + "projection.", out);
}

void collect_params(GateParams& params, const std::string& prefix, std::vector<ParamRef>& out) {
  collect_params(params.aggregator, prefix + "aggregator.", out);
  out.push_back({prefix + "projection", params.projection.values(), {params.projection.rows(), params.projection.cols()}});
}

void collect_params(MoeParams& params, const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < kNumExperts; ++i)
    collect_params(params.experts[i], prefix + "expert." + std::string(to_string(kAllTasks[i])) + ".", out);
  for (std::size_t g = 0; g < params.gates.size(); ++g) {
    const std::string name = params.mode == GatingMode::MultiGate ? std::string(to_string(kAllTasks[g])) : "fusion";
    collect_params(params.gates[g], prefix + "gate." + name + ".", out);
  }
}

}  // namespace camoe
