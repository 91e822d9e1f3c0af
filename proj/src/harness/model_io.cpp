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

#include "camoe/harness/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "camoe/harness/formats.hpp"

namespace camoe::harness {

namespace {

constexpr std::string_view kMagic = "camoe-model 1";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

std::size_t parse_size(std::string_view word, std::uint64_t offset) {
  std::size_t v = 0;
  const auto res = std::from_chars(word.data(), word.data() + word.size(), v);
  if (res.ec != std::errc() || res.ptr != word.data() + word.size())
    throw FormatError("invalid integer '" + std::string(word) + "'", offset);
  return v;
}

// Line reader that remembers byte offsets for error messages.
struct Lines {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line_start = 0;

  bool next(std::string_view& line) {
    if (pos >= text.size()) return false;
    line_start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    pos = end + 1;
    return true;
  }
};

}  // namespace

std::string encode_model(const ModelParams& params) {
  const ModelConfig& c = params.config;
  std::ostringstream out;
  out << kMagic << '\n';
  out << "config dim " << c.dim << '\n';
  out << "config token_dim " << c.token_dim << '\n';
  out << "config max_frames " << c.max_frames << '\n';
  out << "config key_dim " << c.key_dim << '\n';
  out << "config mode " << to_string(c.mode) << '\n';
  out << "config strategy " << to_string(c.strategy) << '\n';
  out << "config expert_aggregators";
  for (AggregatorKind k : c.expert_aggregators) out << ' ' << to_string(k);
  out << '\n';
  out << "config gate_aggregator " << to_string(c.gate_aggregator) << '\n';
  ModelParams copy = params;
  for (const auto& ref : param_refs(copy)) {
    out << "param " << ref.name << ' ' << ref.shape.size();
    for (std::size_t d : ref.shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < ref.values.size(); ++i) {
      if (i) out << ' ';
      out << format_double(ref.values[i]);
    }
    out << '\n';
  }
  std::string body = out.str();
  body += "digest " + hex64(fnv1a64(body)) + '\n';
  return body;
}

ModelParams decode_model(std::string_view text, std::optional<TrainMode> expected_mode) {
  // Integrity first: the last line must carry the digest of everything before it.
  std::string_view trimmed = text;
  if (!trimmed.empty() && trimmed.back() == '\n') trimmed.remove_suffix(1);
  const std::size_t last_nl = trimmed.rfind('\n');
  const std::size_t digest_at = last_nl == std::string_view::npos ? 0 : last_nl + 1;
  const std::string_view last = trimmed.substr(digest_at);
  if (!last.starts_with("digest ") || last.size() != 7 + 16)
    fail(ErrorKind::Digest, "model file has no digest line (truncated or not a model file)");
  const std::string_view body = text.substr(0, digest_at);
  if (last.substr(7) != hex64(fnv1a64(body)))
    fail(ErrorKind::Digest, "model digest mismatch: stored " + std::string(last.substr(7)) + ", computed " +
                                hex64(fnv1a64(body)));

  Lines lines{body};
  std::string_view line;
  if (!lines.next(line) || line != kMagic) throw FormatError("missing 'camoe-model 1' header", 0);

  ModelConfig config;
  while (lines.pos < body.size() && body.substr(lines.pos).starts_with("config ")) {
    lines.next(line);
    const auto w = split_words(line);
    const std::uint64_t at = lines.line_start;
    if (w.size() < 3) throw FormatError("config line needs a key and a value", at);
    const std::string_view key = w[1];
    try {
      if (key == "dim") config.dim = parse_size(w[2], at);
      else if (key == "token_dim") config.token_dim = parse_size(w[2], at);
      else if (key == "max_frames") config.max_frames = parse_size(w[2], at);
      else if (key == "key_dim") config.key_dim = parse_size(w[2], at);
      else if (key == "mode") config.mode = train_mode_from_string(w[2]);
      else if (key == "strategy") config.strategy = strategy_from_string(w[2]);
      else if (key == "gate_aggregator") config.gate_aggregator = aggregator_kind_from_string(w[2]);
      else if (key == "expert_aggregators") {
        if (w.size() != 2 + kNumExperts) throw FormatError("expert_aggregators needs 3 entries", at);
        for (std::size_t i = 0; i < kNumExperts; ++i) config.expert_aggregators[i] = aggregator_kind_from_string(w[2 + i]);
      } else {
        throw FormatError("unknown config key '" + std::string(key) + "'", at);
      }
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(e.what(), at);
    }
  }

  if (expected_mode && *expected_mode != config.mode)
    fail(ErrorKind::ModeMismatch, "model was saved in mode '" + std::string(to_string(config.mode)) +
                                      "' but '" + std::string(to_string(*expected_mode)) + "' was requested");

  ModelParams params = init_model(config, 0);
  for (auto& ref : param_refs(params)) {
    if (!lines.next(line)) throw FormatError("model file ends before parameter '" + ref.name + "'", lines.pos);
    const auto head = split_words(line);
    const std::uint64_t at = lines.line_start;
    if (head.size() < 3 || head[0] != "param") throw FormatError("expected a param line", at);
    if (head[1] != ref.name)
      throw FormatError("expected parameter '" + ref.name + "', found '" + std::string(head[1]) + "'", at);
    const std::size_t rank = parse_size(head[2], at);
    std::vector<std::size_t> shape;
    for (std::size_t i = 0; i < rank && 3 + i < head.size(); ++i) shape.push_back(parse_size(head[3 + i], at));
    if (shape != ref.shape || head.size() != 3 + rank)
      fail(ErrorKind::Dimension, "parameter '" + ref.name + "' shape does not match the stored config");
    if (!lines.next(line)) throw FormatError("missing values for '" + ref.name + "'", lines.pos);
    const auto words = split_words(line);
    if (words.size() != ref.values.size())
      throw FormatError("parameter '" + ref.name + "' has " + std::to_string(words.size()) + " values, expected " +
                            std::to_string(ref.values.size()),
                        lines.line_start);
    for (std::size_t i = 0; i < words.size(); ++i)
      ref.values[i] = parse_double(words[i], lines.line_start + static_cast<std::size_t>(words[i].data() - line.data()));
  }
  if (lines.next(line)) throw FormatError("unexpected trailing content", lines.line_start);
  return params;
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  write_file_atomic(path, encode_model(params));
}

ModelParams load_model(const std::filesystem::path& path, std::optional<TrainMode> expected_mode) {
  return decode_model(read_file(path), expected_mode);
}

}  // namespace camoe::harness
