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

// On-disk formats.
//
//   CAEB embedding file (little-endian):
//     offset  0  "CAEB"
//     offset  4  u32 version (= 1)
//     offset  8  u32 item count
//     offset 12  u32 vectors per item
//     offset 16  u32 dim
//     offset 20  count × vectors × dim f32, row-major
//
//   Captions: one JSON object per line
//     {"id", "video_id", "tokens": [str], "entity_mask": [0|1],
//      "action_mask": [0|1], "token_embedding_ref": int}
//
//   Similarity CSV: a header line "text_0,...,text_{n-1}", then one line per
//   video with 17-significant-digit values.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "camoe/core_math.hpp"

namespace camoe::harness {

inline constexpr std::uint32_t kEmbeddingVersion = 1;

std::string encode_embeddings(const Tensor3& tensor);
Tensor3 decode_embeddings(std::string_view bytes);

void write_embeddings(const std::filesystem::path& path, const Tensor3& tensor);
Tensor3 read_embeddings(const std::filesystem::path& path);

struct CaptionLine {
  std::string id;
  std::string video_id;
  std::vector<std::string> tokens;
  std::vector<bool> entity_mask;
  std::vector<bool> action_mask;
  std::size_t token_embedding_ref = 0;
};

std::string encode_caption_lines(const std::vector<CaptionLine>& lines);
std::vector<CaptionLine> decode_caption_lines(std::string_view text);

// Shortest round-trip is not used: values are always written with 17
// significant digits so output is stable byte-for-byte.
std::string format_double(double value);
double parse_double(std::string_view text, std::uint64_t offset);

std::string encode_csv_matrix(const Matrix& matrix);
Matrix decode_csv_matrix(std::string_view text);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace camoe::harness
