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

#include "camoe/harness/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

namespace camoe::harness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kFillerConcepts = 4;
constexpr double kFillerScale = 0.2;
constexpr double kBroadActionScale = 0.5;

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i);
  return buf;
}

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// Orthonormal when there is room, random unit vectors otherwise.
std::vector<Vector> make_concepts(std::size_t count, std::size_t dim, Rng& rng) {
  std::vector<Vector> out;
  const bool orthogonal = count <= dim;
  while (out.size() < count) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    if (orthogonal)
      for (const auto& u : out) axpy(-dot(v, u), u, v);
    const double n = norm(v);
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    out.push_back(std::move(v));
  }
  return out;
}

struct CaptionDraft {
  std::vector<std::string> words;
  std::vector<Vector> vectors;
  std::vector<bool> entity, action;
};

void place(CaptionDraft& c, std::size_t pos, std::string word, const Vector& v, bool entity, bool action) {
  c.words[pos] = std::move(word);
  c.vectors[pos] = v;
  c.entity[pos] = entity;
  c.action[pos] = action;
}

// `keywords` are put at distinct random positions; the rest become fillers.
CaptionDraft draft_caption(std::size_t tokens, const std::vector<std::tuple<std::string, Vector, bool, bool>>& keywords,
                           const std::vector<Vector>& fillers, Rng& rng) {
  CaptionDraft c{std::vector<std::string>(tokens), std::vector<Vector>(tokens), std::vector<bool>(tokens),
                 std::vector<bool>(tokens)};
  std::vector<std::size_t> positions(tokens);
  for (std::size_t i = 0; i < tokens; ++i) positions[i] = i;
  rng.shuffle(positions);
  for (std::size_t k = 0; k < keywords.size(); ++k) {
    const auto& [word, v, e, a] = keywords[k];
    place(c, positions[k], word, v, e, a);
  }
  for (std::size_t k = keywords.size(); k < tokens; ++k) {
    const std::size_t f = rng.index(fillers.size());
    Vector v = fillers[f];
    for (double& x : v) x *= kFillerScale;
    place(c, positions[k], numbered("filler_", f), v, false, false);
  }
  return c;
}

}  // namespace

void SyntheticSpec::validate() const {
  require(pairs > 0 && dim > 0 && frames > 0 && tokens > 0, ErrorKind::Config,
          "pairs, dim, frames and tokens must be positive");
  require(entity_concepts > 0 && action_concepts > 0, ErrorKind::Config, "concept counts must be positive");
  require(std::isfinite(noise) && noise >= 0.0, ErrorKind::Config, "noise must be >= 0");
  require(ambiguity >= 0.0 && ambiguity <= 1.0, ErrorKind::Config, "ambiguity must lie in [0, 1]");
  require(heldout >= 0.0 && heldout < 1.0, ErrorKind::Config, "heldout must lie in [0, 1)");
  if (ambiguity == 0.0) {
    require(pairs <= entity_concepts * action_concepts, ErrorKind::Config,
            "pairs exceed the number of distinct entity/action combinations");
    require(tokens >= 2, ErrorKind::Config, "captions need at least 2 tokens");
  } else {
    require(tokens >= 2, ErrorKind::Config, "captions need at least 2 tokens");
    // Every broad group needs its own entity and every specific pair its own
    // (entity, action) combination, otherwise pairs come out as exact copies.
    const auto n_amb = static_cast<std::size_t>(std::llround(ambiguity * static_cast<double>(pairs)));
    require(n_amb == 0 || entity_concepts >= n_amb, ErrorKind::Config,
            "ambiguity needs at least " + std::to_string(n_amb) + " entity concepts, got " +
                std::to_string(entity_concepts));
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; n_amb > 0 && k < pairs - n_amb; ++k)
      require(seen.emplace(k % n_amb, (n_amb + k) % action_concepts).second, ErrorKind::Config,
              "too few action concepts to keep ambiguous groups distinct");
  }
}

DatasetBundle generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n_amb =
      static_cast<std::size_t>(std::llround(spec.ambiguity * static_cast<double>(spec.pairs)));
  const std::size_t n_spec = spec.pairs - n_amb;
  const std::size_t n_detail = n_amb > 0 ? n_spec : 0;

  const auto concepts =
      make_concepts(spec.entity_concepts + spec.action_concepts + kFillerConcepts + n_detail, spec.dim, rng);
  const std::vector<Vector> entities(concepts.begin(), concepts.begin() + spec.entity_concepts);
  const std::vector<Vector> actions(concepts.begin() + spec.entity_concepts,
                                    concepts.begin() + spec.entity_concepts + spec.action_concepts);
  const auto filler_begin = concepts.begin() + spec.entity_concepts + spec.action_concepts;
  const std::vector<Vector> fillers(filler_begin, filler_begin + kFillerConcepts);
  const std::vector<Vector> details(filler_begin + kFillerConcepts, concepts.end());

  DatasetBundle b;
  b.spec = spec;
  b.videos = Tensor3(spec.pairs, spec.frames, spec.dim);
  b.tokens = Tensor3(spec.pairs, spec.tokens, spec.dim);

  auto emit = [&](std::size_t i, const Vector& centre, const CaptionDraft& caption, PairRecord record) {
    Matrix frames(spec.frames, spec.dim);
    for (std::size_t f = 0; f < spec.frames; ++f)
      for (std::size_t k = 0; k < spec.dim; ++k) frames(f, k) = to_f32(centre[k] + spec.noise * rng.normal());
    b.videos.set_item(i, frames);
    Matrix tokens(spec.tokens, spec.dim);
    for (std::size_t t = 0; t < spec.tokens; ++t)
      for (std::size_t k = 0; k < spec.dim; ++k) tokens(t, k) = to_f32(caption.vectors[t][k]);
    b.tokens.set_item(i, tokens);
    b.video_ids.push_back(numbered("video", i));
    record.caption_id = numbered("caption", i);
    record.video_id = b.video_ids.back();
    b.captions.push_back({record.caption_id, record.video_id, caption.words, caption.entity, caption.action, i});
    b.pairs.push_back(std::move(record));
  };

  auto combine = [&](const Vector& a, double sa, const Vector& c, double sc) {
    Vector v(spec.dim, 0.0);
    axpy(sa, a, v);
    axpy(sc, c, v);
    return v;
  };

  if (n_amb == 0) {
    std::vector<std::pair<std::size_t, std::size_t>> combos;
    for (std::size_t e = 0; e < spec.entity_concepts; ++e)
      for (std::size_t a = 0; a < spec.action_concepts; ++a) combos.emplace_back(e, a);
    rng.shuffle(combos);
    for (std::size_t i = 0; i < spec.pairs; ++i) {
      const auto [e, a] = combos[i];
      const auto caption = draft_caption(
          spec.tokens,
          {{numbered("entity_", e), entities[e], true, false}, {numbered("action_", a), actions[a], false, true}},
          fillers, rng);
      PairRecord record;
      record.group = e;
      emit(i, combine(entities[e], 1.0, actions[a], 1.0), caption, record);
    }
  } else {
    // Broad captions name only the entity of their group. Specific pairs join
    // the groups round-robin: same entity on screen, but their captions name
    // an action and a detail instead.
    for (std::size_t g = 0; g < n_amb; ++g) {
      const std::size_t e = g % spec.entity_concepts;
      const std::size_t a = g % spec.action_concepts;
      const auto caption = draft_caption(spec.tokens, {{numbered("entity_", e), entities[e], true, false}}, fillers, rng);
      PairRecord record;
      record.ambiguous = true;
      record.group = g;
      emit(g, combine(entities[e], 1.0, actions[a], kBroadActionScale), caption, record);
    }
    for (std::size_t k = 0; k < n_spec; ++k) {
      const std::size_t g = k % n_amb;
      const std::size_t e = g % spec.entity_concepts;
      const std::size_t a = (n_amb + k) % spec.action_concepts;
      std::vector<std::tuple<std::string, Vector, bool, bool>> keywords{
          {numbered("action_", a), actions[a], false, true}};
      if (spec.tokens >= 3) keywords.emplace_back(numbered("detail_", k), details[k], true, false);
      const auto caption = draft_caption(spec.tokens, keywords, fillers, rng);
      PairRecord record;
      record.confusable = true;
      record.group = g;
      emit(n_amb + k, combine(entities[e], 1.0, actions[a], 1.0), caption, record);
    }
  }

  const std::size_t n_test =
      static_cast<std::size_t>(std::llround(spec.heldout * static_cast<double>(spec.pairs)));
  for (std::size_t i = spec.pairs - n_test; i < spec.pairs; ++i) b.pairs[i].split = "test";
  return b;
}

void DatasetBundle::validate() const {
  require(videos.items() == video_ids.size(), ErrorKind::Dimension,
          "videos.caeb holds " + std::to_string(videos.items()) + " videos, manifest lists " +
              std::to_string(video_ids.size()));
  std::map<std::string, std::size_t> video_index;
  for (std::size_t i = 0; i < video_ids.size(); ++i) video_index[video_ids[i]] = i;
  std::map<std::string, std::size_t> caption_index;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    const auto& c = captions[i];
    require(video_index.count(c.video_id) > 0, ErrorKind::Dimension,
            "caption '" + c.id + "' references unknown video '" + c.video_id + "'");
    require(c.token_embedding_ref < tokens.items(), ErrorKind::Dimension,
            "caption '" + c.id + "' token_embedding_ref is out of range");
    require(c.tokens.size() > 0 && c.tokens.size() <= tokens.rows(), ErrorKind::Dimension,
            "caption '" + c.id + "' has more tokens than captions.caeb stores");
    caption_index[c.id] = i;
  }
  for (const auto& p : pairs) {
    require(caption_index.count(p.caption_id) > 0, ErrorKind::Dimension, "pair names unknown caption '" + p.caption_id + "'");
    require(video_index.count(p.video_id) > 0, ErrorKind::Dimension, "pair names unknown video '" + p.video_id + "'");
    require(p.split == "train" || p.split == "test", ErrorKind::Format, "pair split must be train or test");
  }
}

// ---------------------------------------------------------------------------

namespace {

ordered_json spec_json(const SyntheticSpec& s) {
  ordered_json j;
  j["pairs"] = s.pairs;
  j["dim"] = s.dim;
  j["frames"] = s.frames;
  j["tokens"] = s.tokens;
  j["entity_concepts"] = s.entity_concepts;
  j["action_concepts"] = s.action_concepts;
  j["noise"] = s.noise;
  j["ambiguity"] = s.ambiguity;
  j["heldout"] = s.heldout;
  j["seed"] = s.seed;
  return j;
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec s;
  s.pairs = j.at("pairs").get<std::size_t>();
  s.dim = j.at("dim").get<std::size_t>();
  s.frames = j.at("frames").get<std::size_t>();
  s.tokens = j.at("tokens").get<std::size_t>();
  s.entity_concepts = j.at("entity_concepts").get<std::size_t>();
  s.action_concepts = j.at("action_concepts").get<std::size_t>();
  s.noise = j.at("noise").get<double>();
  s.ambiguity = j.at("ambiguity").get<double>();
  s.heldout = j.at("heldout").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

std::string encode_manifest(const DatasetBundle& bundle) {
  std::string out;
  ordered_json header;
  header["type"] = "header";
  header["format"] = "camoe-dataset";
  header["version"] = 1;
  header["spec"] = bundle.spec ? spec_json(*bundle.spec) : ordered_json();
  out += header.dump() + '\n';
  for (std::size_t i = 0; i < bundle.video_ids.size(); ++i) {
    ordered_json j;
    j["type"] = "video";
    j["index"] = i;
    j["id"] = bundle.video_ids[i];
    out += j.dump() + '\n';
  }
  for (const auto& p : bundle.pairs) {
    ordered_json j;
    j["type"] = "pair";
    j["caption_id"] = p.caption_id;
    j["video_id"] = p.video_id;
    j["split"] = p.split;
    j["ambiguous"] = p.ambiguous;
    j["confusable"] = p.confusable;
    j["group"] = p.group;
    out += j.dump() + '\n';
  }
  return out;
}

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle) {
  bundle.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec && std::filesystem::is_directory(dir), ErrorKind::Io,
          "cannot create output directory '" + dir.string() + "'");
  write_embeddings(dir / "videos.caeb", bundle.videos);
  write_embeddings(dir / "captions.caeb", bundle.tokens);
  write_file_atomic(dir / "captions.jsonl", encode_caption_lines(bundle.captions));
  write_file_atomic(dir / "manifest.jsonl", encode_manifest(bundle));
}

DatasetBundle read_bundle(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorKind::Io, "dataset directory '" + dir.string() + "' does not exist");
  DatasetBundle b;
  b.videos = read_embeddings(dir / "videos.caeb");
  b.tokens = read_embeddings(dir / "captions.caeb");
  b.captions = decode_caption_lines(read_file(dir / "captions.jsonl"));

  const std::string manifest = read_file(dir / "manifest.jsonl");
  std::size_t offset = 0;
  bool seen_header = false;
  while (offset < manifest.size()) {
    std::size_t end = manifest.find('\n', offset);
    if (end == std::string::npos) end = manifest.size();
    const std::string_view line(manifest.data() + offset, end - offset);
    const std::size_t at = offset;
    offset = end + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("manifest record is not valid JSON: ") + e.what(), at + e.byte - 1);
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (!seen_header) {
        if (type != "header" || j.at("format") != "camoe-dataset" || j.at("version") != 1)
          throw FormatError("manifest must start with a camoe-dataset version 1 header", at);
        if (!j.at("spec").is_null()) b.spec = spec_from_json(j.at("spec"));
        seen_header = true;
      } else if (type == "video") {
        if (j.at("index").get<std::size_t>() != b.video_ids.size())
          throw FormatError("video records must be listed in index order", at);
        b.video_ids.push_back(j.at("id").get<std::string>());
      } else if (type == "pair") {
        PairRecord p;
        p.caption_id = j.at("caption_id").get<std::string>();
        p.video_id = j.at("video_id").get<std::string>();
        p.split = j.at("split").get<std::string>();
        p.ambiguous = j.at("ambiguous").get<bool>();
        p.confusable = j.at("confusable").get<bool>();
        p.group = j.at("group").get<std::size_t>();
        b.pairs.push_back(std::move(p));
      } else {
        throw FormatError("unknown manifest record type '" + type + "'", at);
      }
    } catch (const json::exception& e) {
      throw FormatError(std::string("manifest record has a missing or mistyped field: ") + e.what(), at);
    }
  }
  if (!seen_header) throw FormatError("manifest is empty", 0);
  b.validate();
  return b;
}

std::vector<PairRecord> select_pairs(const DatasetBundle& bundle, const std::string& split) {
  require(split == "train" || split == "test" || split == "all", ErrorKind::Usage,
          "split must be train, test or all");
  std::vector<PairRecord> out;
  for (const auto& p : bundle.pairs)
    if (split == "all" || p.split == split) out.push_back(p);
  return out;
}

Dataset to_dataset(const DatasetBundle& bundle, const std::string& split) {
  bundle.validate();
  std::map<std::string, std::size_t> video_index;
  for (std::size_t i = 0; i < bundle.video_ids.size(); ++i) video_index[bundle.video_ids[i]] = i;
  std::map<std::string, std::size_t> caption_index;
  for (std::size_t i = 0; i < bundle.captions.size(); ++i) caption_index[bundle.captions[i].id] = i;

  Dataset data;
  std::map<std::size_t, std::size_t> remap;
  for (const auto& p : select_pairs(bundle, split)) {
    const std::size_t source = video_index.at(p.video_id);
    auto [it, inserted] = remap.emplace(source, data.videos.size());
    if (inserted) {
      data.video_ids.push_back(p.video_id);
      data.videos.push_back(bundle.videos.item(source));
    }
    const CaptionLine& line = bundle.captions[caption_index.at(p.caption_id)];
    CaptionRecord rec;
    rec.id = line.id;
    rec.video_id = p.video_id;
    rec.words = line.tokens;
    const Matrix all = bundle.tokens.item(line.token_embedding_ref);
    rec.tokens = Matrix(line.tokens.size(), all.cols());
    for (std::size_t t = 0; t < line.tokens.size(); ++t)
      std::copy(all.row(t).begin(), all.row(t).end(), rec.tokens.row(t).begin());
    rec.entity_mask = line.entity_mask;
    rec.action_mask = line.action_mask;
    data.captions.push_back(std::move(rec));
    data.caption_video.push_back(it->second);
    data.ambiguous.push_back(p.ambiguous);
  }
  require(!data.captions.empty(), ErrorKind::Config, "split '" + split + "' selects no pairs");
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& split) {
  return to_dataset(read_bundle(dir), split);
}

}  // namespace camoe::harness
