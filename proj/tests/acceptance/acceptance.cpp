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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "camoe/gradcheck.hpp"
#include "camoe/harness/cli.hpp"
#include "camoe/harness/dataset.hpp"
#include "camoe/harness/formats.hpp"
#include "camoe/harness/model_io.hpp"
#include "camoe/trainer.hpp"
#include "oracle/metrics_oracle.hpp"
#include "oracle/scalar_oracle.hpp"

using namespace camoe;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

oracle::Grid grid(const Matrix& m) {
  oracle::Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

Matrix random_sim(Rng& rng, std::size_t n) {
  Matrix s(n, n);
  for (double& v : s.values()) v = rng.uniform(-1.0, 1.0);
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome gradients() {
  const auto start = Clock::now();
  const std::vector<InstanceShape> shapes{{2, 1, 4, 5},  {2, 3, 4, 5},  {4, 1, 8, 5},  {4, 3, 8, 5},
                                          {8, 1, 16, 5}, {8, 3, 16, 5}, {2, 3, 16, 5}, {8, 3, 4, 5},
                                          {4, 3, 16, 5}, {8, 1, 8, 5}};
  double worst = 0.0;
  std::size_t checked = 0, instances = 0;
  for (std::size_t i = 0; i < shapes.size(); ++i)
    for (bool dsl : {false, true}) {
      GradCheckCase c;
      c.shape = shapes[i];
      c.seed = 7 + i;
      c.dsl = dsl;
      const auto r = run_gradcheck_case(c);
      worst = std::max(worst, r.report.max_rel_err);
      checked += r.report.checked;
      ++instances;
    }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 60.0 && instances >= 20,
          std::to_string(instances) + " instances, " + std::to_string(checked) + " coordinates, max rel err " +
              fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome loss_oracle() {
  Rng rng(2);
  double worst = 0.0;
  LossConfig dsl;
  dsl.dsl_enabled = true;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 2);
    const Matrix s = random_sim(rng, n);
    const double l = rng.uniform(0.5, 20.0);
    dsl.temp = rng.uniform(0.5, 10.0);
    const auto ce = symmetric_ce(s, l);
    const auto d = dsl_loss(s, l, dsl);
    const auto g = grid(s);
    worst = std::max({worst, std::abs(ce.v2t - oracle::ce_v2t(g, l)), std::abs(ce.t2v - oracle::ce_t2v(g, l)),
                      std::abs(d.v2t - oracle::dsl_v2t(g, l, dsl.temp)),
                      std::abs(d.t2v - oracle::dsl_t2v(g, l, dsl.temp))});
  }
  const auto id = symmetric_ce(Matrix{{1, 0}, {0, 1}}, 1.0);
  const bool identity = std::abs(id.v2t - 0.31326) < 5e-6 && std::abs(id.t2v - 0.31326) < 5e-6;
  return {worst <= 1e-10 && identity, "max deviation " + fmt(worst) + ", identity case " + fmt(id.v2t)};
}

Outcome dsl_reductions() {
  LossConfig c;
  c.dsl_enabled = true;
  bool ok = true;
  for (double v : {0.9, -0.4, 0.0}) {
    const Matrix one{{v}};
    const auto d = dsl_loss(one, 14.0, c);
    ok = ok && d.v2t == 0.0 && d.t2v == 0.0;
    ok = ok && dsl_rerank(one, 100.0, Direction::V2T) == one && dsl_rerank(one, 100.0, Direction::T2V) == one;
  }
  Rng rng(3);
  double worst = 0.0;
  c.temp = 1e-8;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    const Matrix s = random_sim(rng, n);
    const double l = rng.uniform(1.0, 50.0);
    const auto d = dsl_loss(s, l, c);
    const auto ce = symmetric_ce(s, l / static_cast<double>(n));
    worst = std::max({worst, std::abs(d.v2t - ce.v2t), std::abs(d.t2v - ce.t2v)});
  }
  return {ok && worst <= 1e-6, std::string("single pair exact: ") + (ok ? "yes" : "no") + ", small-temp gap " + fmt(worst)};
}

Outcome dsl_fixes_broad_captions() {
  harness::SyntheticSpec spec;
  spec.pairs = 16;
  spec.dim = 64;
  spec.noise = 0.0;
  spec.ambiguity = 0.5;
  spec.seed = 1;
  spec.entity_concepts = 8;
  spec.action_concepts = 8;
  const auto bundle = harness::generate(spec);
  const Dataset data = harness::to_dataset(bundle, "all");
  ModelParams model = identity_model(spec.dim, spec.frames);
  std::fill(model.text.mask_embedding.begin(), model.text.mask_embedding.end(), 0.0);
  const Matrix s = task_similarity(model, data, TaskId::Fusion);
  const Matrix r = dsl_rerank(s, 100.0, Direction::V2T);
  const std::size_t n = s.rows();
  // Brute force: a row is right when its diagonal beats every other entry.
  auto diagonal_wins = [n](const Matrix& m, std::size_t i) {
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && m(i, j) >= m(i, i)) return false;
    return true;
  };
  std::size_t confusable = 0, plain_misses = 0, fixed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (bundle.pairs[i].confusable) {
      ++confusable;
      plain_misses += !diagonal_wins(s, i);
    }
    fixed += diagonal_wins(r, i);
  }
  return {confusable > 0 && plain_misses == confusable && fixed == n,
          "plain misranks " + std::to_string(plain_misses) + "/" + std::to_string(confusable) +
              " ambiguous rows, reranked diagonal argmax on " + std::to_string(fixed) + "/" + std::to_string(n) +
              " rows"};
}

Outcome metrics_oracle() {
  Rng rng(5);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix s = random_sim(rng, 16);
    // Quantize so ties occur.
    if (trial % 4 == 0)
      for (double& v : s.values()) v = std::round(v * 4.0) / 4.0;
    for (Direction dir : {Direction::V2T, Direction::T2V}) {
      const auto got = compute_metrics(s, dir);
      const auto want =
          oracle::sort_metrics(16, [&](std::size_t q, std::size_t g) { return dir == Direction::V2T ? s(q, g) : s(g, q); });
      mismatches += got.ranks != want.ranks || got.r1 != want.r1 || got.r5 != want.r5 || got.r10 != want.r10 ||
                    got.median_rank != want.median || got.mean_rank != want.mean;
    }
  }
  return {mismatches == 0, "200 rankings over 100 matrices, " + std::to_string(mismatches) + " mismatches"};
}

Outcome aggregator_invariants() {
  Rng rng(6);
  const std::size_t d = 8, c = 6;
  const AggregatorParams attn = make_aggregator({AggregatorKind::SelfAttention, d, c, 0}, rng);
  Matrix x(c, d);
  for (double& v : x.values()) v = rng.normal();
  const Vector mean0 = aggregate_mean(x), attn0 = aggregate_selfattn(attn, x);
  std::vector<std::size_t> perm(c);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    rng.shuffle(perm);
    Matrix y(c, d);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t k = 0; k < d; ++k) y(i, k) = x(perm[i], k);
    const Vector m = aggregate_mean(y), a = aggregate_selfattn(attn, y);
    for (std::size_t k = 0; k < d; ++k) worst = std::max({worst, std::abs(m[k] - mean0[k]), std::abs(a[k] - attn0[k])});
  }
  AggregatorParams se = make_aggregator({AggregatorKind::SeAttention, d, c, 0}, rng);
  for (auto& layer : se.bottleneck.layers) {
    std::fill(layer.weight.values().begin(), layer.weight.values().end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  bool half = true;
  for (std::size_t frames = 1; frames <= c; ++frames) {
    Matrix z(frames, d);
    for (double& v : z.values()) v = rng.normal();
    const Vector out = aggregate_se(se, z);
    const Vector mean = column_mean(z);
    for (std::size_t k = 0; k < d; ++k) half = half && out[k] == 0.5 * mean[k];
  }
  return {worst <= 1e-12 && half, "1000 permutations, max deviation " + fmt(worst) +
                                       ", zero-weight SE equals half the mean: " + (half ? "yes" : "no")};
}

Outcome gate_invariants() {
  ModelConfig config;
  config.dim = config.token_dim = 8;
  config.max_frames = 4;
  ModelParams m = init_model(config, 11);
  Rng rng(7);
  Matrix x(3, 8);
  for (double& v : x.values()) v = rng.normal();
  GateParams zero = m.moe.gates[0];
  std::fill(zero.projection.values().begin(), zero.projection.values().end(), 0.0);
  const Vector w = gate_weights(zero, x);
  const bool uniform = w[0] == 1.0 / 3.0 && w[1] == 1.0 / 3.0 && w[2] == 1.0 / 3.0;
  const VideoReprSet before = forward_video(m.moe, x);
  bool untouched = true;
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p = m;
    for (double& v : p.moe.gates[0].projection.values()) v += rng.normal();
    for (auto& layer : p.moe.gates[0].aggregator.bottleneck.layers)
      for (double& v : layer.weight.values()) v += rng.normal();
    const VideoReprSet after = forward_video(p.moe, x);
    untouched = untouched && after.repr[1] == before.repr[1] && after.repr[2] == before.repr[2];
  }
  return {uniform && untouched, std::string("zero projection uniform: ") + (uniform ? "yes" : "no") +
                                    ", entity/action heads bit-identical under 20 gate perturbations: " +
                                    (untouched ? "yes" : "no")};
}

Outcome convergence() {
  const auto start = Clock::now();
  harness::SyntheticSpec spec;
  spec.pairs = 32;
  spec.dim = 16;
  spec.noise = 0.05;
  spec.seed = 1;
  const Dataset data = harness::to_dataset(harness::generate(spec), "all");
  ModelConfig mc;
  mc.dim = mc.token_dim = spec.dim;
  mc.max_frames = spec.frames;
  TrainConfig tc;
  tc.epochs = 500 / (spec.pairs / tc.batch_size);
  const auto result = train(data, nullptr, init_model(mc, 0), tc, LossConfig{});
  std::optional<std::size_t> reached;
  for (const auto& e : result.log.epochs)
    if (e.fusion_r1_t2v == 1.0 && e.fusion_r1_v2t == 1.0 && e.steps <= 500) {
      reached = e.steps;
      break;
    }
  const double secs = seconds_since(start);
  return {reached.has_value() && secs < 120.0,
          (reached ? "R@1 = 1 both directions at step " + std::to_string(*reached) : std::string("R@1 never reached 1")) +
              ", " + fmt(secs) + " s"};
}

Outcome ablation() {
  harness::SyntheticSpec spec;
  spec.pairs = 64;
  spec.dim = 16;
  spec.entity_concepts = 8;
  spec.action_concepts = 8;
  spec.noise = 0.5;
  spec.heldout = 0.25;
  spec.seed = 3;
  const auto bundle = harness::generate(spec);
  const Dataset train_set = harness::to_dataset(bundle, "train");
  const Dataset held = harness::to_dataset(bundle, "test");
  ModelConfig mc;
  mc.dim = mc.token_dim = spec.dim;
  mc.max_frames = spec.frames;
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 16;
  tc.lr_head = tc.lr_encoder = 0.01;
  const auto rows =
      mode_ablation(train_set, &held, mc, 0, tc, LossConfig{}, {TrainMode::SingleTask, TrainMode::Camoe});
  const EpochLog& single = rows[0].log.epochs.back();
  const EpochLog& camoe = rows[1].log.epochs.back();
  const double single_held = *single.heldout_task_loss[0];
  const double camoe_held = *camoe.heldout_task_loss[0];
  const bool direction = camoe_held <= single_held;
  const bool single_shape = single.train_loss < single_held;
  const bool multi_shape = camoe.train_loss >= camoe_held;
  return {direction && single_shape && multi_shape,
          "held-out fusion loss camoe " + fmt(camoe_held) + " vs single-task " + fmt(single_held) +
              "; single-task train " + fmt(single.train_loss) + " < held-out " + fmt(single_held) +
              "; camoe train " + fmt(camoe.train_loss) + " >= held-out " + fmt(camoe_held)};
}

// Every file under dir, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = harness::read_file(entry.path());
  return files;
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / "camoe_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  harness::write_file_atomic(dir / "config.json",
                             R"({"train": {"epochs": 4, "batch_size": 8, "gradcheck_every": 3}, "init_seed": 2})");
  harness::write_file_atomic(dir / "sim.csv", harness::encode_csv_matrix(Matrix{{0.8, 0.6, 0.1}, {0.4, 0.7, 0.2}, {0.3, 0.3, 0.9}}));
  const std::string d = dir.string();
  const std::vector<std::vector<std::string>> commands{
      {"gen", "--out", d + "/data", "--pairs", "24", "--dim", "8", "--ambiguity", "0.25", "--action-concepts", "8", "--heldout", "0.25",
       "--seed", "9"},
      {"train", "--config", d + "/config.json", "--data", d + "/data", "--out", d + "/run"},
      {"eval", "--model", d + "/run/model.txt", "--data", d + "/data", "--split", "test", "--out", d + "/eval.json"},
      {"eval", "--model", d + "/run/model.txt", "--data", d + "/data", "--dsl", "--per-expert", "--temp", "20"},
      {"rerank", "--sim", d + "/sim.csv", "--temp", "5", "--direction", "t2v", "--out", d + "/reranked.csv"},
      {"gradcheck", "--seed", "3", "--sizes", "2x1x4,4x3x4"},
      {"inspect-gates", "--model", d + "/run/model.txt", "--data", d + "/data", "--out", d + "/gates.csv"},
  };
  std::string failure;
  auto run_all = [&](std::string& transcript) {
    for (const auto& args : commands) {
      std::ostringstream out, err;
      const int code = harness::run(args, out, err);
      transcript += args[0] + " " + std::to_string(code) + "\n" + out.str() + err.str();
      if (code != 0) {
        failure = args[0] + ": " + err.str();
        return false;
      }
    }
    return true;
  };
  std::string first, second;
  const bool ok1 = run_all(first);
  const auto files1 = snapshot(dir);
  const bool ok2 = run_all(second);
  const auto files2 = snapshot(dir);
  const bool same = first == second && files1 == files2;
  return {ok1 && ok2 && same, std::to_string(commands.size()) + " commands run twice, " +
                                  std::to_string(files1.size()) + " files and all console output " +
                                  (same ? "byte-identical" : "differ") + (ok1 && ok2 ? "" : ", failed " + failure)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"loss oracle equivalence", loss_oracle},
      {"dual softmax reductions", dsl_reductions},
      {"dual softmax fixes broad captions", dsl_fixes_broad_captions},
      {"metric oracle equivalence", metrics_oracle},
      {"aggregator invariants", aggregator_invariants},
      {"gate invariants", gate_invariants},
      {"toy training convergence", convergence},
      {"mode ablation direction", ablation},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
