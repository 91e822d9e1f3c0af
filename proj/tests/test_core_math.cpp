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

#include "oracle/fd_oracle.hpp"

using namespace camoe;

TEST_CASE("softmax of equal logits is uniform") {
  const Vector p = softmax(Vector{0, 0, 0});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax stays finite for large logits") {
  const Vector p = softmax(Vector{1000, 0});
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  CHECK(all_finite(p));
}

TEST_CASE("softmax matches exp ratios") {
  const Vector p = softmax(Vector{0.8, 0.4});
  CHECK(p[0] == doctest::Approx(0.59869).epsilon(1e-5));
  CHECK(p[1] == doctest::Approx(0.40131).epsilon(1e-5));
  const auto o = oracle::softmax({0.8, 0.4});
  CHECK(std::abs(p[0] - o[0]) < 1e-15);
}

TEST_CASE("softmax rejects empty and non-finite input") {
  CHECK_THROWS_AS(softmax(Vector{}), Error);
  CHECK_THROWS_AS(softmax(Vector{1.0, std::nan("")}), Error);
}

TEST_CASE("sigmoid values") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(2.0) == doctest::Approx(0.880797).epsilon(1e-6));
  for (double x : {0.3, 4.0, 30.0}) CHECK(sigmoid(x) + sigmoid(-x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sigmoid(-800.0) == 0.0);
  const Vector v = sigmoid(Vector{0.0, 2.0});
  CHECK(v[0] == 0.5);
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_sim(Vector{1, 0}, Vector{0, 1}) == 0.0);
  CHECK(cosine_sim(Vector{3, 4}, Vector{3, 4}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_sim(Vector{1, 1}, Vector{1, 0}) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK_THROWS_AS(cosine_sim(Vector{0, 0}, Vector{1, 0}), Error);
  CHECK_THROWS_AS(cosine_sim(Vector{1, 0, 0}, Vector{1, 0}), Error);
  try {
    cosine_sim(Vector{0, 0}, Vector{1, 0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
}

TEST_CASE("softmax and cosine backward agree with finite differences") {
  Rng rng(5);
  Vector z(5), w(5);
  for (double& v : z) v = rng.normal();
  for (double& v : w) v = rng.normal();
  const Vector g = softmax_backward(softmax(z), w);
  const auto num = oracle::numeric_gradient(
      [&](const std::vector<double>& x) {
        const Vector p = softmax(x);
        return dot(p, w);
      },
      z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(g[i] == doctest::Approx(num[i]).epsilon(1e-7));

  Vector a(4), b(4);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();
  Vector ga(4, 0.0), gb(4, 0.0);
  cosine_sim_backward(a, b, 1.5, ga, gb);
  const auto na = oracle::numeric_gradient([&](const std::vector<double>& x) { return 1.5 * cosine_sim(x, b); }, a);
  const auto nb = oracle::numeric_gradient([&](const std::vector<double>& x) { return 1.5 * cosine_sim(a, x); }, b);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ga[i] == doctest::Approx(na[i]).epsilon(1e-7));
    CHECK(gb[i] == doctest::Approx(nb[i]).epsilon(1e-7));
  }
}

TEST_CASE("matmul variants agree") {
  Rng rng(9);
  const Matrix a = test::random_matrix(rng, 3, 4);
  const Matrix b = test::random_matrix(rng, 4, 2);
  const Matrix ab = matmul(a, b);
  const Matrix ab2 = matmul_nt(a, b.transposed());
  const Matrix ab3 = matmul_tn(a.transposed(), b);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    CHECK(ab.values()[i] == doctest::Approx(ab2.values()[i]).epsilon(1e-14));
    CHECK(ab.values()[i] == doctest::Approx(ab3.values()[i]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(matmul(a, a), Error);
}

TEST_CASE("ffn forward special cases") {
  FfnParams zero = init_params(1, FfnShape::mlp({3, 2}));
  for (auto& ref : param_refs(zero))
    for (double& v : ref.values) v = 0.0;
  const Vector y0 = ffn_forward(zero, Vector{1, -2, 3});
  CHECK(y0 == Vector{0, 0});

  const FfnParams id = identity_ffn(3);
  CHECK(ffn_forward(id, Vector{1, -2, 3}) == Vector{1, -2, 3});
}

TEST_CASE("seed-42 single layer matches the affine oracle") {
  const FfnParams net = init_params(42, FfnShape::mlp({3, 2}));
  const Vector x{0.5, -1.0, 2.0};
  const Vector y = ffn_forward(net, x);
  const auto o = oracle::affine(test::weights(net.layers[0]), net.layers[0].bias, x);
  REQUIRE(y.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(y[i] - o[i]) < 1e-15);
}

TEST_CASE("two layer ffn with relu matches the oracle") {
  const FfnParams net = init_params(3, FfnShape::mlp({4, 3, 2}));
  const Vector x{0.1, 0.7, -0.4, 1.2};
  const auto h = oracle::relu(oracle::affine(test::weights(net.layers[0]), net.layers[0].bias, x));
  const auto o = oracle::affine(test::weights(net.layers[1]), net.layers[1].bias, h);
  const Vector y = ffn_forward(net, x);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(y[i] - o[i]) < 1e-15);
}

TEST_CASE("ffn backward matches finite differences") {
  const FfnParams net = init_params(8, FfnShape::mlp({4, 5, 3}));
  Rng rng(2);
  Vector x(4), w(3);
  for (double& v : x) v = rng.normal();
  for (double& v : w) v = rng.normal();
  FfnParams grads = zeros_like(net);
  const Vector dx = ffn_backward(net, x, w, grads);
  const auto nx = oracle::numeric_gradient([&](const std::vector<double>& in) { return dot(ffn_forward(net, in), w); }, x);
  for (std::size_t i = 0; i < 4; ++i) CHECK(dx[i] == doctest::Approx(nx[i]).epsilon(1e-6));

  FfnParams probe = net;
  auto refs = param_refs(probe);
  auto grefs = param_refs(grads);
  for (std::size_t p = 0; p < refs.size(); ++p) {
    std::vector<double> flat(refs[p].values.begin(), refs[p].values.end());
    const auto num = oracle::numeric_gradient(
        [&](const std::vector<double>& values) {
          std::copy(values.begin(), values.end(), refs[p].values.begin());
          const double out = dot(ffn_forward(probe, x), w);
          std::copy(flat.begin(), flat.end(), refs[p].values.begin());
          return out;
        },
        flat);
    for (std::size_t k = 0; k < num.size(); ++k)
      CHECK(grefs[p].values[k] == doctest::Approx(num[k]).epsilon(1e-6));
  }
}

TEST_CASE("init_params determinism and bounds") {
  const auto shape = FfnShape::mlp({4, 6, 2});
  const FfnParams a = init_params(11, shape);
  const FfnParams b = init_params(11, shape);
  const FfnParams c = init_params(12, shape);
  CHECK(a.layers[0].weight == b.layers[0].weight);
  CHECK(a.layers[1].bias == b.layers[1].bias);
  CHECK_FALSE(a.layers[0].weight == c.layers[0].weight);
  for (double w : a.layers[0].weight.values()) {
    CHECK(w >= -0.5);
    CHECK(w <= 0.5);
  }
  CHECK_THROWS_AS(init_params(1, FfnShape::mlp({0, 2})), Error);
}

TEST_CASE("rng streams are portable") {
  // First draws of mt19937_64 with the default seed are fixed by the standard.
  Rng rng(5489);
  CHECK(rng.next() == 14514284786278117030ULL);
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    const std::size_t k = u.index(7);
    CHECK(k < 7);
  }
  Rng s1(4), s2(4);
  std::vector<int> a{1, 2, 3, 4, 5}, b = a;
  s1.shuffle(a);
  s2.shuffle(b);
  CHECK(a == b);
}

TEST_CASE("param enumeration order is stable") {
  FfnParams net = init_params(1, FfnShape::mlp({2, 3, 1}));
  const auto refs = param_refs(net);
  REQUIRE(refs.size() == 4);
  CHECK(refs[0].name == "0.weight");
  CHECK(refs[1].name == "0.bias");
  CHECK(refs[2].name == "1.weight");
  CHECK(refs[0].shape == std::vector<std::size_t>{3, 2});
  CHECK(param_count(net) == 3 * 2 + 3 + 3 + 1);
}
