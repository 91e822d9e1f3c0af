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

#include "support.hpp"

#include "camoe/text_alignment.hpp"
#include "oracle/fd_oracle.hpp"

using namespace camoe;

namespace {

CaptionRecord caption(Matrix tokens, std::vector<bool> entity, std::vector<bool> action) {
  CaptionRecord c;
  c.id = "c0";
  c.video_id = "v0";
  c.tokens = std::move(tokens);
  c.entity_mask = std::move(entity);
  c.action_mask = std::move(action);
  return c;
}

TextEncoderParams identity_encoder(std::size_t d, SentenceStrategy strategy) {
  Rng rng(0);
  TextEncoderParams p = make_text_encoder(d, d, strategy, rng);
  p.projection = identity_ffn(d);
  return p;
}

}  // namespace

TEST_CASE("select_tokens") {
  const auto c = caption(Matrix(3, 2, 1.0), {true, false, true}, {false, false, false});
  CHECK(select_tokens(c, TaskId::Fusion) == std::vector<bool>{true, true, true});
  CHECK(select_tokens(c, TaskId::Entity) == std::vector<bool>{true, false, true});
  CHECK(select_tokens(c, TaskId::Action) == std::vector<bool>{false, false, false});
}

TEST_CASE("caption validation rejects mask length mismatch") {
  const auto c = caption(Matrix(3, 2, 1.0), {true, false}, {false, false, false});
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("all-true mask makes every strategy the full-sentence encoding") {
  Rng rng(4);
  const Matrix tokens = test::random_matrix(rng, 4, 3);
  const auto c = caption(tokens, {true, true, true, true}, {true, true, true, true});
  Rng prng(6);
  TextEncoderParams base = make_text_encoder(3, 5, SentenceStrategy::Muw, prng);
  for (double& v : base.mask_embedding) v = rng.normal();
  const Vector full = encode_text(base, c, TaskId::Fusion);
  for (auto s : {SentenceStrategy::Muw, SentenceStrategy::Rkw, SentenceStrategy::Akwe}) {
    TextEncoderParams p = base;
    p.strategy = s;
    const Vector v = encode_text(p, c, TaskId::Entity);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(v[k] == doctest::Approx(full[k]).epsilon(1e-14));
  }
}

TEST_CASE("MUW and RKW on the two-token example") {
  const auto c = caption(Matrix{{2, 0}, {4, 0}}, {true, false}, {false, true});
  CHECK(encode_text(identity_encoder(2, SentenceStrategy::Muw), c, TaskId::Entity) == Vector{1, 0});
  CHECK(encode_text(identity_encoder(2, SentenceStrategy::Rkw), c, TaskId::Entity) == Vector{2, 0});
}

TEST_CASE("AKWE equals RKW under a linear projection") {
  Rng rng(12);
  const auto c = caption(test::random_matrix(rng, 5, 4), {true, false, true, false, false},
                         {false, true, false, false, true});
  Rng prng(1);
  TextEncoderParams p = make_text_encoder(4, 3, SentenceStrategy::Akwe, prng);
  TextEncoderParams r = p;
  r.strategy = SentenceStrategy::Rkw;
  for (TaskId t : kAllTasks) {
    const Vector a = encode_text(p, c, t);
    const Vector b = encode_text(r, c, t);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-14));
  }
}

TEST_CASE("empty keywords raise, and effective_task falls back with a warning") {
  const auto c = caption(Matrix{{1, 0}, {0, 1}}, {true, false}, {false, false});
  const auto p = identity_encoder(2, SentenceStrategy::Muw);
  try {
    encode_text(p, c, TaskId::Action);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyKeywords);
  }
  std::vector<std::string> seen;
  auto previous = set_warning_sink([&](std::string_view m) { seen.emplace_back(m); });
  CHECK(effective_task(c, TaskId::Action) == TaskId::Fusion);
  CHECK(effective_task(c, TaskId::Entity) == TaskId::Entity);
  CHECK(effective_task(c, TaskId::Action, true) == TaskId::Fusion);
  set_warning_sink(std::move(previous));
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].find("no action keywords") != std::string::npos);
}

TEST_CASE("text encoder backward matches finite differences") {
  Rng rng(30);
  const auto c = caption(test::random_matrix(rng, 4, 3), {true, false, false, true}, {false, true, false, false});
  for (auto s : {SentenceStrategy::Muw, SentenceStrategy::Rkw, SentenceStrategy::Akwe}) {
    Rng prng(2);
    TextEncoderParams p = make_text_encoder(3, 2, s, prng);
    for (double& v : p.mask_embedding) v = rng.normal();
    const Vector w{0.7, -1.3};
    for (TaskId t : kAllTasks) {
      auto grads = zeros_like(p);
      encode_text_backward(p, c, t, w, grads);
      auto probe = p;
      auto refs = param_refs(probe);
      auto grefs = param_refs(grads);
      for (std::size_t r = 0; r < refs.size(); ++r) {
        const std::vector<double> saved(refs[r].values.begin(), refs[r].values.end());
        const auto num = oracle::numeric_gradient(
            [&](const std::vector<double>& values) {
              std::copy(values.begin(), values.end(), refs[r].values.begin());
              const double out = dot(encode_text(probe, c, t), w);
              std::copy(saved.begin(), saved.end(), refs[r].values.begin());
              return out;
            },
            saved);
        for (std::size_t k = 0; k < num.size(); ++k) CHECK(grefs[r].values[k] == doctest::Approx(num[k]).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("strategy names round-trip") {
  for (auto s : {SentenceStrategy::Muw, SentenceStrategy::Rkw, SentenceStrategy::Akwe})
    CHECK(strategy_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(strategy_from_string("bow"), Error);
}
