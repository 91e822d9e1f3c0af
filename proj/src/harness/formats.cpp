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

#include "camoe/harness/formats.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace camoe::harness {

namespace {

constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  require(v <= UINT32_MAX, ErrorKind::Dimension, std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string encode_embeddings(const Tensor3& tensor) {
  std::string out = "CAEB";
  put_u32(out, kEmbeddingVersion);
  put_u32(out, checked_u32(tensor.items(), "item count"));
  put_u32(out, checked_u32(tensor.rows(), "vectors per item"));
  put_u32(out, checked_u32(tensor.cols(), "dim"));
  out.reserve(kHeaderBytes + 4 * tensor.values().size());
  for (double v : tensor.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Tensor3 decode_embeddings(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("embedding file shorter than its header", bytes.size());
  if (bytes.substr(0, 4) != "CAEB") throw FormatError("bad embedding magic, expected CAEB", 0);
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kEmbeddingVersion)
    throw FormatError("unsupported embedding version " + std::to_string(version), 4);
  const std::uint64_t count = get_u32(bytes, 8);
  const std::uint64_t vectors = get_u32(bytes, 12);
  const std::uint64_t dim = get_u32(bytes, 16);
  const std::uint64_t expected = kHeaderBytes + 4 * count * vectors * dim;
  if (bytes.size() != expected)
    throw FormatError("embedding payload holds " + std::to_string(bytes.size() - kHeaderBytes) + " bytes, header implies " +
                          std::to_string(expected - kHeaderBytes),
                      std::min<std::uint64_t>(bytes.size(), expected));
  std::vector<double> data(count * vectors * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float f = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
    if (!std::isfinite(f)) throw FormatError("non-finite embedding value", kHeaderBytes + 4 * i);
    data[i] = static_cast<double>(f);
  }
  return Tensor3(count, vectors, dim, std::move(data));
}

void write_embeddings(const std::filesystem::path& path, const Tensor3& tensor) {
  write_file_atomic(path, encode_embeddings(tensor));
}

Tensor3 read_embeddings(const std::filesystem::path& path) { return decode_embeddings(read_file(path)); }

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json mask_json(const std::vector<bool>& mask) {
  auto arr = nlohmann::ordered_json::array();
  for (bool b : mask) arr.push_back(b ? 1 : 0);
  return arr;
}

std::vector<bool> mask_from_json(const nlohmann::json& arr, std::uint64_t offset) {
  if (!arr.is_array()) throw FormatError("mask must be an array", offset);
  std::vector<bool> mask;
  for (const auto& v : arr) {
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
      throw FormatError("mask entries must be 0 or 1", offset);
    mask.push_back(v.get<int>() == 1);
  }
  return mask;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t offset = 0;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(offset, end - offset);
    if (!line.empty()) fn(line, offset);
    offset = end + 1;
  }
}

}  // namespace

std::string encode_caption_lines(const std::vector<CaptionLine>& lines) {
  std::string out;
  for (const auto& line : lines) {
    nlohmann::ordered_json j;
    j["id"] = line.id;
    j["video_id"] = line.video_id;
    j["tokens"] = line.tokens;
    j["entity_mask"] = mask_json(line.entity_mask);
    j["action_mask"] = mask_json(line.action_mask);
    j["token_embedding_ref"] = line.token_embedding_ref;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<CaptionLine> decode_caption_lines(std::string_view text) {
  std::vector<CaptionLine> lines;
  for_each_line(text, [&](std::string_view raw, std::uint64_t offset) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("caption record is not valid JSON: ") + e.what(), offset + e.byte - 1);
    }
    try {
      CaptionLine line;
      line.id = j.at("id").get<std::string>();
      line.video_id = j.at("video_id").get<std::string>();
      line.tokens = j.at("tokens").get<std::vector<std::string>>();
      line.entity_mask = mask_from_json(j.at("entity_mask"), offset);
      line.action_mask = mask_from_json(j.at("action_mask"), offset);
      line.token_embedding_ref = j.at("token_embedding_ref").get<std::size_t>();
      if (line.entity_mask.size() != line.tokens.size() || line.action_mask.size() != line.tokens.size())
        throw FormatError("caption '" + line.id + "' mask length differs from token count", offset);
      lines.push_back(std::move(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("caption record has a missing or mistyped field: ") + e.what(), offset);
    }
  });
  return lines;
}

// ---------------------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::uint64_t offset) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw FormatError("invalid number '" + std::string(text) + "'", offset);
  return value;
}

std::string encode_csv_matrix(const Matrix& matrix) {
  std::string out;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    if (c) out += ',';
    out += "text_" + std::to_string(c);
  }
  out += '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      if (c) out += ',';
      out += format_double(matrix(r, c));
    }
    out += '\n';
  }
  return out;
}

Matrix decode_csv_matrix(std::string_view text) {
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool header = true;
  std::vector<double> values;
  for_each_line(text, [&](std::string_view line, std::uint64_t offset) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      if (!header) values.push_back(parse_double(field, offset + start));
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (header) {
      cols = fields;
      header = false;
      return;
    }
    if (fields != cols)
      throw FormatError("CSV row has " + std::to_string(fields) + " fields, header has " + std::to_string(cols), offset);
    ++rows;
  });
  if (header) throw FormatError("CSV matrix is empty", 0);
  return Matrix(rows, cols, std::move(values));
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    require(static_cast<bool>(out), ErrorKind::Io, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::Io, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace camoe::harness
