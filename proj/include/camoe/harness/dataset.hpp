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

// Dataset directories and the synthetic generator.
//
//   <dir>/manifest.jsonl   header record, one record per video, one per pair
//   <dir>/videos.caeb      item i = frames of the video with manifest index i
//   <dir>/captions.jsonl   caption records
//   <dir>/captions.caeb    token embeddings, addressed by token_embedding_ref

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "camoe/harness/formats.hpp"
#include "camoe/model.hpp"

namespace camoe::harness {

struct SyntheticSpec {
  std::size_t pairs = 32;
  std::size_t dim = 16;
  std::size_t frames = 4;
  std::size_t tokens = 4;
  std::size_t entity_concepts = 6;
  std::size_t action_concepts = 6;
  double noise = 0.05;
  // Fraction of captions that name only an entity shared with other videos.
  double ambiguity = 0.0;
  // Fraction of pairs placed in the "test" split (taken from the end).
  double heldout = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PairRecord {
  std::string caption_id;
  std::string video_id;
  std::string split = "train";
  bool ambiguous = false;
  // A specific caption whose video shares its entity with an ambiguous one.
  bool confusable = false;
  std::size_t group = 0;
};

struct DatasetBundle {
  std::optional<SyntheticSpec> spec;
  std::vector<std::string> video_ids;
  Tensor3 videos;  // videos × frames × dim
  std::vector<CaptionLine> captions;
  Tensor3 tokens;  // captions × tokens × token dim
  std::vector<PairRecord> pairs;

  void validate() const;
};

// Values are rounded to f32 so an in-memory bundle equals its reloaded copy.
DatasetBundle generate(const SyntheticSpec& spec);

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);
DatasetBundle read_bundle(const std::filesystem::path& dir);

std::string encode_manifest(const DatasetBundle& bundle);

// split is "train", "test" or "all". Only videos referenced by the selected
// pairs are kept; pair order follows the manifest.
Dataset to_dataset(const DatasetBundle& bundle, const std::string& split);
Dataset load_dataset(const std::filesystem::path& dir, const std::string& split);

// Pair-level flags in the same order as to_dataset(bundle, split).
std::vector<PairRecord> select_pairs(const DatasetBundle& bundle, const std::string& split);

}  // namespace camoe::harness
