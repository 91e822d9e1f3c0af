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

#include "camoe/harness/cli.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "camoe/harness/model_io.hpp"

#ifndef CAMOE_VERSION
#define CAMOE_VERSION "0.0.0"
#endif

namespace camoe::harness {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view version() { return CAMOE_VERSION; }

namespace {

// ---------------------------------------------------------------------------
// Config parsing.

template <class T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(ErrorKind::Config, "unknown key '" + key + "' in " + where);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
  }
  require(root.is_object(), ErrorKind::Config, "config must be a JSON object");
  RunConfig rc;
  try {
    reject_unknown(root, {"model", "train", "loss", "init_seed", "mode"}, "config");
    take(root, "init_seed", rc.init_seed);
    if (root.contains("mode")) {
      rc.model.mode = train_mode_from_string(root.at("mode").get<std::string>());
      rc.train.mode = rc.model.mode;
    }
    if (root.contains("model")) {
      const json& m = root.at("model");
      reject_unknown(m, {"dim", "token_dim", "max_frames", "key_dim", "strategy", "expert_aggregators", "gate_aggregator"},
                     "model");
      rc.dim_given = m.contains("dim");
      rc.token_dim_given = m.contains("token_dim");
      rc.max_frames_given = m.contains("max_frames");
      take(m, "dim", rc.model.dim);
      take(m, "token_dim", rc.model.token_dim);
      take(m, "max_frames", rc.model.max_frames);
      take(m, "key_dim", rc.model.key_dim);
      if (m.contains("strategy")) rc.model.strategy = strategy_from_string(m.at("strategy").get<std::string>());
      if (m.contains("expert_aggregators")) {
        const auto names = m.at("expert_aggregators").get<std::vector<std::string>>();
        require(names.size() == kNumExperts, ErrorKind::Config, "expert_aggregators needs 3 entries");
        for (std::size_t i = 0; i < kNumExperts; ++i) rc.model.expert_aggregators[i] = aggregator_kind_from_string(names[i]);
      }
      if (m.contains("gate_aggregator"))
        rc.model.gate_aggregator = aggregator_kind_from_string(m.at("gate_aggregator").get<std::string>());
    }
    if (root.contains("train")) {
      const json& t = root.at("train");
      reject_unknown(t,
                     {"lr_encoder", "lr_head", "epochs", "batch_size", "seed", "optimizer", "beta1", "beta2", "eps",
                      "warmup_fraction", "warmup_steps", "max_steps", "gradcheck_every", "gradcheck_coordinates"},
                     "train");
      take(t, "lr_encoder", rc.train.lr_encoder);
      take(t, "lr_head", rc.train.lr_head);
      take(t, "epochs", rc.train.epochs);
      take(t, "batch_size", rc.train.batch_size);
      take(t, "seed", rc.train.seed);
      if (t.contains("optimizer")) rc.train.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
      take(t, "beta1", rc.train.beta1);
      take(t, "beta2", rc.train.beta2);
      take(t, "eps", rc.train.eps);
      take(t, "warmup_fraction", rc.train.warmup_fraction);
      if (t.contains("warmup_steps")) rc.train.warmup_steps = t.at("warmup_steps").get<std::size_t>();
      take(t, "max_steps", rc.train.max_steps);
      take(t, "gradcheck_every", rc.train.gradcheck_every);
      take(t, "gradcheck_coordinates", rc.train.gradcheck_coordinates);
    }
    if (root.contains("loss")) {
      const json& l = root.at("loss");
      reject_unknown(l, {"temp", "dsl", "dsl_backprop_prior", "dsl_literal_numerator", "logit_scale_trainable", "task_weights"},
                     "loss");
      take(l, "temp", rc.loss.temp);
      take(l, "dsl", rc.loss.dsl_enabled);
      take(l, "dsl_backprop_prior", rc.loss.dsl_backprop_prior);
      take(l, "dsl_literal_numerator", rc.loss.dsl_literal_numerator);
      take(l, "logit_scale_trainable", rc.loss.logit_scale_trainable);
      if (l.contains("task_weights")) {
        const auto w = l.at("task_weights").get<std::vector<double>>();
        require(w.size() == 3, ErrorKind::Config, "task_weights needs 3 entries");
        std::copy(w.begin(), w.end(), rc.loss.task_weights.begin());
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config field has the wrong type: ") + e.what());
  }
  rc.train.validate();
  rc.loss.validate();
  return rc;
}

namespace {

// ---------------------------------------------------------------------------
// Report helpers.

ordered_json metrics_json(const RankingResult& r) {
  ordered_json j;
  j["r1"] = r.r1;
  j["r5"] = r.r5;
  j["r10"] = r.r10;
  j["median_rank"] = r.median_rank;
  j["mean_rank"] = r.mean_rank;
  j["ranks"] = r.ranks;
  return j;
}

ordered_json task_losses_json(const std::array<std::optional<double>, 3>& losses) {
  ordered_json j = ordered_json::object();
  for (TaskId t : kAllTasks)
    if (losses[index_of(t)]) j[std::string(to_string(t))] = *losses[index_of(t)];
  return j;
}

ordered_json epoch_json(const EpochLog& e) {
  ordered_json j;
  j["epoch"] = e.epoch;
  j["steps"] = e.steps;
  j["train_loss"] = e.train_loss;
  j["train_task_loss"] = task_losses_json(e.train_task_loss);
  if (e.heldout_loss) {
    j["heldout_loss"] = *e.heldout_loss;
    j["heldout_task_loss"] = task_losses_json(e.heldout_task_loss);
  }
  j["fusion_r1_t2v"] = e.fusion_r1_t2v;
  j["fusion_r1_v2t"] = e.fusion_r1_v2t;
  j["gate_mean"] = e.gate_mean;
  if (e.gradcheck_max_rel_err) j["gradcheck_max_rel_err"] = *e.gradcheck_max_rel_err;
  return j;
}

std::vector<InstanceShape> parse_sizes(const std::string& text) {
  std::vector<InstanceShape> shapes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    InstanceShape s;
    char x1 = 0, x2 = 0;
    std::istringstream is(item);
    if (!(is >> s.batch >> x1 >> s.frames >> x2 >> s.dim) || x1 != 'x' || x2 != 'x' || !is.eof() || s.batch < 2 ||
        s.frames == 0 || s.dim == 0)
      fail(ErrorKind::Usage, "--sizes entries look like BxCxd with B >= 2, got '" + item + "'");
    shapes.push_back(s);
  }
  require(!shapes.empty(), ErrorKind::Usage, "--sizes is empty");
  return shapes;
}

void print_json(std::ostream& out, const ordered_json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Subcommands.

struct GenArgs {
  SyntheticSpec spec;
  std::string out;
};

void cmd_gen(const GenArgs& a, std::ostream& out) {
  const DatasetBundle bundle = generate(a.spec);
  write_bundle(a.out, bundle);
  std::size_t ambiguous = 0, test = 0;
  for (const auto& p : bundle.pairs) {
    ambiguous += p.ambiguous;
    test += p.split == "test";
  }
  ordered_json j;
  j["command"] = "gen";
  j["out"] = a.out;
  j["pairs"] = bundle.pairs.size();
  j["ambiguous"] = ambiguous;
  j["test_pairs"] = test;
  print_json(out, j);
}

struct TrainArgs {
  std::string config, data, out, mode;
  std::optional<std::size_t> gradcheck_every;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig rc = a.config.empty() ? RunConfig{} : parse_run_config(read_file(a.config));
  if (!a.mode.empty()) rc.model.mode = train_mode_from_string(a.mode);
  rc.train.mode = rc.model.mode;
  if (a.gradcheck_every) rc.train.gradcheck_every = *a.gradcheck_every;

  const DatasetBundle bundle = read_bundle(a.data);
  const Dataset train_data = to_dataset(bundle, "train");
  const bool has_test = !select_pairs(bundle, "test").empty();
  const std::optional<Dataset> heldout = has_test ? std::optional<Dataset>(to_dataset(bundle, "test")) : std::nullopt;

  if (!rc.dim_given) rc.model.dim = train_data.videos.front().cols();
  if (!rc.token_dim_given) rc.model.token_dim = train_data.captions.front().tokens.cols();
  if (!rc.max_frames_given) {
    rc.model.max_frames = 1;
    for (const auto& v : train_data.videos) rc.model.max_frames = std::max(rc.model.max_frames, v.rows());
  }

  const ModelParams initial = init_model(rc.model, rc.init_seed);
  const TrainResult result = train(train_data, heldout ? &*heldout : nullptr, initial, rc.train, rc.loss);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  require(!ec && std::filesystem::is_directory(a.out), ErrorKind::Io, "cannot create output directory '" + a.out + "'");
  const std::filesystem::path dir(a.out);
  save_model(dir / "model.txt", result.params);
  std::string log;
  for (const auto& e : result.log.epochs) {
    ordered_json j;
    j["mode"] = to_string(result.log.mode);
    j.update(epoch_json(e));
    log += j.dump() + '\n';
  }
  write_file_atomic(dir / "train_log.jsonl", log);

  ordered_json j;
  j["command"] = "train";
  j["mode"] = to_string(result.log.mode);
  j["model"] = (dir / "model.txt").string();
  j["log"] = (dir / "train_log.jsonl").string();
  j["epochs"] = result.log.epochs.size();
  if (!result.log.epochs.empty()) j["final"] = epoch_json(result.log.epochs.back());
  print_json(out, j);
}

struct EvalArgs {
  std::string model, data, split = "all", mode, out;
  bool dsl = false;
  bool per_expert = false;
  double temp = 100.0;
  std::size_t window = 0;
  std::string temp_sweep;
};

std::vector<double> parse_temps(const std::string& list) {
  std::vector<double> temps;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    double t = 0.0;
    try {
      t = parse_double(std::string_view(list).substr(start, comma - start), start);
    } catch (const FormatError&) {
      fail(ErrorKind::Usage, "--temp-sweep takes comma-separated numbers, got '" + list + "'");
    }
    require(t > 0.0 && std::isfinite(t), ErrorKind::Domain, "--temp-sweep values must be positive");
    temps.push_back(t);
    start = comma + 1;
  }
  return temps;
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const ModelParams model =
      load_model(a.model, a.mode.empty() ? std::nullopt : std::optional(train_mode_from_string(a.mode)));
  const Dataset data = load_dataset(a.data, a.split);
  require(a.temp > 0.0 && std::isfinite(a.temp), ErrorKind::Domain, "--temp must be positive");
  const EvalConfig cfg{a.temp, a.window};
  const std::vector<ExpertEval> evals =
      a.per_expert ? per_expert_eval(model, data, cfg) : std::vector<ExpertEval>{evaluate_task(model, data, TaskId::Fusion, cfg)};

  ordered_json j;
  j["command"] = "eval";
  j["split"] = a.split;
  j["pairs"] = data.size();
  j["method"] = a.dsl ? "dsl" : "plain";
  if (a.dsl) {
    j["temp"] = a.temp;
    j["dsl_window"] = a.window;
  }
  ordered_json results = ordered_json::array();
  for (const auto& e : evals) {
    ordered_json r;
    r["task"] = to_string(e.task);
    r["t2v"] = metrics_json(a.dsl ? e.dsl_t2v : e.plain_t2v);
    r["v2t"] = metrics_json(a.dsl ? e.dsl_v2t : e.plain_v2t);
    results.push_back(std::move(r));
  }
  j["results"] = std::move(results);
  if (!a.temp_sweep.empty()) {
    // Fusion head reranked at each temperature.
    const SimilarityMatrix sim = task_similarity(model, data, TaskId::Fusion);
    ordered_json sweep = ordered_json::array();
    for (double t : parse_temps(a.temp_sweep)) {
      ordered_json r;
      r["temp"] = t;
      r["t2v"] = metrics_json(compute_metrics(dsl_rerank(sim, t, Direction::T2V, a.window), Direction::T2V));
      r["v2t"] = metrics_json(compute_metrics(dsl_rerank(sim, t, Direction::V2T, a.window), Direction::V2T));
      sweep.push_back(std::move(r));
    }
    j["temp_sweep"] = std::move(sweep);
  }
  if (!a.out.empty()) write_file_atomic(a.out, j.dump(2) + '\n');
  print_json(out, j);
}

struct RerankArgs {
  std::string sim, out, direction = "v2t";
  double temp = 100.0;
  std::size_t window = 0;
};

void cmd_rerank(const RerankArgs& a, std::ostream& out) {
  const Matrix sim = decode_csv_matrix(read_file(a.sim));
  require(a.temp > 0.0 && std::isfinite(a.temp), ErrorKind::Domain, "--temp must be positive");
  const Matrix reranked = dsl_rerank(sim, a.temp, direction_from_string(a.direction), a.window);
  const std::string csv = encode_csv_matrix(reranked);
  if (a.out.empty()) {
    out << csv;
  } else {
    write_file_atomic(a.out, csv);
    ordered_json j;
    j["command"] = "rerank";
    j["out"] = a.out;
    j["rows"] = reranked.rows();
    j["cols"] = reranked.cols();
    print_json(out, j);
  }
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::string sizes = "2x1x4,4x3x8,8x3x16";
  std::string mode = "camoe";
};

bool cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  const auto shapes = parse_sizes(a.sizes);
  const TrainMode mode = train_mode_from_string(a.mode);
  ordered_json cases = ordered_json::array();
  double worst = 0.0;
  std::size_t checked = 0;
  std::uint64_t case_seed = a.seed;
  for (const auto& shape : shapes)
    for (bool dsl : {false, true}) {
      GradCheckCase c;
      c.shape = shape;
      c.shape.tokens = 5;
      c.seed = case_seed++;
      c.mode = mode;
      c.dsl = dsl;
      const auto r = run_gradcheck_case(c);
      worst = std::max(worst, r.report.max_rel_err);
      checked += r.report.checked;
      ordered_json j;
      j["batch"] = shape.batch;
      j["frames"] = shape.frames;
      j["dim"] = shape.dim;
      j["dsl"] = dsl;
      j["instance_seed"] = r.instance_seed;
      j["checked"] = r.report.checked;
      j["max_rel_err"] = r.report.max_rel_err;
      j["worst_param"] = r.report.worst.param;
      cases.push_back(std::move(j));
    }
  const bool passed = worst < 1e-4;
  ordered_json j;
  j["command"] = "gradcheck";
  j["seed"] = a.seed;
  j["mode"] = to_string(mode);
  j["step"] = GradCheckOptions{}.step;
  j["checked"] = checked;
  j["max_rel_err"] = worst;
  j["passed"] = passed;
  j["cases"] = std::move(cases);
  print_json(out, j);
  return passed;
}

struct GatesArgs {
  std::string model, data, out, mode, split = "all";
};

void cmd_inspect_gates(const GatesArgs& a, std::ostream& out) {
  const ModelParams model =
      load_model(a.model, a.mode.empty() ? std::nullopt : std::optional(train_mode_from_string(a.mode)));
  const Dataset data = load_dataset(a.data, a.split);
  const GateReport report = gate_report(model, data);
  std::string csv = "video_id,fusion,entity,action\n";
  for (std::size_t i = 0; i < report.video_ids.size(); ++i) {
    csv += report.video_ids[i];
    for (double w : report.weights[i]) csv += ',' + format_double(w);
    csv += '\n';
  }
  if (!a.out.empty()) write_file_atomic(a.out, csv);
  ordered_json j;
  j["command"] = "inspect-gates";
  j["mode"] = to_string(model.config.mode);
  j["videos"] = report.video_ids.size();
  j["mean"] = report.mean;
  if (!a.out.empty()) j["out"] = a.out;
  print_json(out, j);
}

void error_record(std::ostream& err, std::string_view kind, const std::string& message,
                  std::optional<std::uint64_t> offset = std::nullopt) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  if (offset) j["offset"] = *offset;
  err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixture-of-experts retrieval head with dual softmax reranking", "camoe"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--pairs", gen.spec.pairs, "Number of video/caption pairs")->capture_default_str();
  g->add_option("--dim", gen.spec.dim, "Embedding dim")->capture_default_str();
  g->add_option("--frames", gen.spec.frames, "Frames per video")->capture_default_str();
  g->add_option("--tokens", gen.spec.tokens, "Tokens per caption")->capture_default_str();
  g->add_option("--entity-concepts", gen.spec.entity_concepts)->capture_default_str();
  g->add_option("--action-concepts", gen.spec.action_concepts)->capture_default_str();
  g->add_option("--noise", gen.spec.noise, "Per-frame noise sigma")->capture_default_str();
  g->add_option("--ambiguity", gen.spec.ambiguity, "Fraction of entity-only captions")->capture_default_str();
  g->add_option("--heldout", gen.spec.heldout, "Fraction of pairs in the test split")->capture_default_str();
  g->add_option("--seed", gen.spec.seed)->capture_default_str();

  TrainArgs tr;
  std::size_t gradcheck_every = 0;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", tr.config, "JSON config file");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--mode", tr.mode, "single-task, mtac, multi-gate or camoe");
  auto* gce = t->add_option("--gradcheck-every", gradcheck_every, "Gradient check every N steps");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate retrieval metrics");
  e->add_option("--model", ev.model)->required();
  e->add_option("--data", ev.data)->required();
  e->add_option("--split", ev.split, "train, test or all")->capture_default_str();
  e->add_option("--mode", ev.mode, "Expected model mode");
  e->add_flag("--dsl", ev.dsl, "Rerank with the dual softmax prior");
  e->add_option("--temp", ev.temp)->capture_default_str();
  e->add_flag("--per-expert", ev.per_expert, "Report every task head");
  e->add_option("--dsl-window", ev.window, "Normalize priors over blocks of this size (0: whole gallery)")
      ->capture_default_str();
  e->add_option("--temp-sweep", ev.temp_sweep, "Also rerank the fusion head at each of these temperatures, e.g. 1,10,100");
  e->add_option("--out", ev.out, "Also write the report to this file");

  RerankArgs rr;
  auto* r = app.add_subcommand("rerank", "Apply the dual softmax prior to a similarity CSV");
  r->add_option("--sim", rr.sim, "Similarity CSV (rows videos, columns texts)")->required();
  r->add_option("--temp", rr.temp)->capture_default_str();
  r->add_option("--direction", rr.direction, "v2t or t2v")->capture_default_str();
  r->add_option("--window", rr.window)->capture_default_str();
  r->add_option("--out", rr.out, "Output CSV (stdout when omitted)");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient");
  c->add_option("--seed", gc.seed)->capture_default_str();
  c->add_option("--sizes", gc.sizes, "Comma-separated BxCxd shapes")->capture_default_str();
  c->add_option("--mode", gc.mode)->capture_default_str();

  GatesArgs ga;
  auto* ig = app.add_subcommand("inspect-gates", "Dump per-video fusion gate weights");
  ig->add_option("--model", ga.model)->required();
  ig->add_option("--data", ga.data)->required();
  ig->add_option("--split", ga.split)->capture_default_str();
  ig->add_option("--mode", ga.mode, "Expected model mode");
  ig->add_option("--out", ga.out, "CSV output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return 0;
  } catch (const CLI::ParseError& pe) {
    error_record(err, to_string(ErrorKind::Usage), pe.what());
    return 2;
  }
  if (gce->count() > 0) tr.gradcheck_every = gradcheck_every;

  const WarningSink sink = [&err](std::string_view msg) {
    ordered_json j;
    j["warning"] = msg;
    err << j.dump() << '\n';
  };
  struct Restore {
    WarningSink previous;
    ~Restore() { set_warning_sink(std::move(previous)); }
  } restore{set_warning_sink(sink)};

  try {
    if (g->parsed()) cmd_gen(gen, out);
    else if (t->parsed()) cmd_train(tr, out);
    else if (e->parsed()) cmd_eval(ev, out);
    else if (r->parsed()) cmd_rerank(rr, out);
    else if (c->parsed()) return cmd_gradcheck(gc, out) ? 0 : 1;
    else if (ig->parsed()) cmd_inspect_gates(ga, out);
    return 0;
  } catch (const FormatError& fe) {
    error_record(err, to_string(fe.kind()), fe.what(), fe.offset());
    return 1;
  } catch (const Error& ce) {
    error_record(err, to_string(ce.kind()), ce.what());
    return ce.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& ex) {
    error_record(err, "internal", ex.what());
    return 1;
  }
}

}  // namespace camoe::harness
