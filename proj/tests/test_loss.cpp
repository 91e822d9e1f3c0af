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

#include "camoe/loss.hpp"
#include "oracle/fd_oracle.hpp"

using namespace camoe;

namespace {

LossConfig dsl_config(double temp) {
  LossConfig c;
  c.dsl_enabled = true;
  c.temp = temp;
  return c;
}

const Matrix kExample{{0.8, 0.2}, {0.4, 0.6}};

}  // namespace

TEST_CASE("single candidate gives zero loss") {
  const Matrix s{{0.3}};
  const auto ce = symmetric_ce(s, 14.0);
  CHECK(ce.v2t == 0.0);
  CHECK(ce.t2v == 0.0);
  const auto dsl = dsl_loss(s, 14.0, dsl_config(100.0));
  CHECK(dsl.v2t == 0.0);
  CHECK(dsl.t2v == 0.0);
}

TEST_CASE("identity similarity with unit scale") {
  const auto ce = symmetric_ce(Matrix{{1, 0}, {0, 1}}, 1.0);
  const double expect = std::log(1.0 + std::exp(-1.0));
  CHECK(expect == doctest::Approx(0.31326).epsilon(1e-5));
  CHECK(std::abs(ce.v2t - expect) < 1e-15);
  CHECK(std::abs(ce.t2v - expect) < 1e-15);
}

TEST_CASE("all-equal similarity gives log B per direction") {
  for (std::size_t b : {2u, 3u, 7u}) {
    const auto ce = symmetric_ce(Matrix(b, b, 1.0), 3.7);
    CHECK(ce.v2t == doctest::Approx(std::log(static_cast<double>(b))).epsilon(1e-14));
    CHECK(ce.t2v == doctest::Approx(std::log(static_cast<double>(b))).epsilon(1e-14));
  }
}

TEST_CASE("symmetric CE matches the scalar oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 2 + static_cast<std::size_t>(trial % 4);
    Matrix s(b, b);
    for (double& v : s.values()) v = rng.uniform(-1.0, 1.0);
    const double l = rng.uniform(0.5, 20.0);
    const auto ce = symmetric_ce(s, l);
    CHECK(std::abs(ce.v2t - oracle::ce_v2t(test::grid(s), l)) < 1e-12);
    CHECK(std::abs(ce.t2v - oracle::ce_t2v(test::grid(s), l)) < 1e-12);
  }
}

TEST_CASE("priors") {
  const Priors one = dsl_priors(Matrix{{0.4}}, 100.0);
  CHECK(one.v2t == Matrix{{1.0}});
  CHECK(one.t2v == Matrix{{1.0}});

  const Priors p = dsl_priors(kExample, 1.0);
  CHECK(p.v2t(0, 0) == doctest::Approx(0.59869).epsilon(1e-5));
  CHECK(p.v2t(1, 0) == doctest::Approx(0.40131).epsilon(1e-5));
  CHECK(p.v2t(0, 1) == doctest::Approx(0.40131).epsilon(1e-5));
  CHECK(p.v2t(1, 1) == doctest::Approx(0.59869).epsilon(1e-5));
  const auto col = oracle::column_prior(test::grid(kExample), 1.0);
  const auto row = oracle::row_prior(test::grid(kExample), 1.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(std::abs(p.v2t(i, j) - col[i][j]) < 1e-15);
      CHECK(std::abs(p.t2v(i, j) - row[i][j]) < 1e-15);
    }

  const Priors flat = dsl_priors(kExample, 1e-12);
  for (double v : flat.v2t.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-11));
}

TEST_CASE("DSL loss matches the scalar oracle on the 2x2 example") {
  const auto d = dsl_loss(kExample, 1.0, dsl_config(1.0));
  CHECK(std::abs(d.v2t - oracle::dsl_v2t(test::grid(kExample), 1.0, 1.0)) < 1e-14);
  CHECK(std::abs(d.t2v - oracle::dsl_t2v(test::grid(kExample), 1.0, 1.0)) < 1e-14);
  // Frozen from the oracle.
  CHECK(d.v2t == doctest::Approx(0.5561359854174208).epsilon(1e-12));
  CHECK(d.t2v == doctest::Approx(0.5554986731689693).epsilon(1e-12));
}

TEST_CASE("DSL with a vanishing temperature folds into the scale") {
  Rng rng(2);
  Matrix s(4, 4);
  for (double& v : s.values()) v = rng.uniform(-1.0, 1.0);
  const auto d = dsl_loss(s, 10.0, dsl_config(1e-8));
  const auto ce = symmetric_ce(s, 10.0 / 4.0);
  CHECK(std::abs(d.v2t - ce.v2t) < 1e-6);
  CHECK(std::abs(d.t2v - ce.t2v) < 1e-6);
}

TEST_CASE("literal numerator reading is selectable") {
  LossConfig c = dsl_config(1.0);
  c.dsl_literal_numerator = true;
  const auto literal = dsl_loss(kExample, 1.0, c);
  const auto normal = dsl_loss(kExample, 1.0, dsl_config(1.0));
  CHECK(literal.v2t != doctest::Approx(normal.v2t));
  const Priors p = dsl_priors(kExample, 1.0, true);
  CHECK(p.v2t(0, 1) == p.v2t(0, 0));
  c.dsl_backprop_prior = true;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("contrastive gradients match finite differences") {
  Rng rng(3);
  Matrix s(3, 3);
  for (double& v : s.values()) v = rng.uniform(-1.0, 1.0);
  for (bool dsl : {false, true}) {
    LossConfig c = dsl ? dsl_config(4.0) : LossConfig{};
    c.dsl_backprop_prior = dsl;
    const double l = 7.5;
    const auto g = contrastive_loss_with_grad(s, l, c);
    auto value = [&](const Matrix& m, double scale) {
      return dsl ? dsl_loss(m, scale, c).sum() : symmetric_ce(m, scale).sum();
    };
    CHECK(g.value.sum() == doctest::Approx(value(s, l)).epsilon(1e-14));
    const auto num = oracle::numeric_gradient([&](const std::vector<double>& f) { return value(Matrix(3, 3, f), l); },
                                              s.storage());
    for (std::size_t i = 0; i < 9; ++i) CHECK(g.d_sim.values()[i] == doctest::Approx(num[i]).epsilon(1e-7));
    const auto nl = oracle::numeric_gradient([&](const std::vector<double>& x) { return value(s, x[0]); }, {l});
    CHECK(g.d_logit_scale == doctest::Approx(nl[0]).epsilon(1e-7));
  }
}

TEST_CASE("detached priors drop the prior path from the gradient") {
  Rng rng(4);
  Matrix s(3, 3);
  for (double& v : s.values()) v = rng.uniform(-1.0, 1.0);
  const LossConfig detached = dsl_config(4.0);
  const auto g = contrastive_loss_with_grad(s, 5.0, detached);
  const Priors pr = dsl_priors(s, 4.0);
  // With the priors frozen the loss is a plain CE over S ⊙ Pr.
  auto frozen = [&](const std::vector<double>& f) {
    const auto grid = test::grid(Matrix(3, 3, f));
    const auto cp = test::grid(pr.v2t);
    const auto rp = test::grid(pr.t2v);
    return oracle::ce_v2t(grid, 5.0, &cp) + oracle::ce_t2v(grid, 5.0, &rp);
  };
  const auto num = oracle::numeric_gradient(frozen, s.storage());
  for (std::size_t i = 0; i < 9; ++i) CHECK(g.d_sim.values()[i] == doctest::Approx(num[i]).epsilon(1e-7));
}

TEST_CASE("total loss sums weighted task terms") {
  const Matrix s{{0.9, 0.1}, {0.2, 0.7}};
  const double l = 3.0;
  const LossConfig c;
  const auto single = total_loss({{TaskId::Fusion, s}}, l, c);
  CHECK(single.total == doctest::Approx(symmetric_ce(s, l).sum()).epsilon(1e-15));
  CHECK_FALSE(single.per_task[1].has_value());
  const auto all = total_loss({{TaskId::Fusion, s}, {TaskId::Entity, s}, {TaskId::Action, s}}, l, c);
  CHECK(all.total == doctest::Approx(3.0 * single.total).epsilon(1e-14));
  LossConfig w;
  w.task_weights = {1.0, 0.5, 0.0};
  const auto weighted = total_loss({{TaskId::Fusion, s}, {TaskId::Entity, s}, {TaskId::Action, s}}, l, w);
  CHECK(weighted.total == doctest::Approx(1.5 * single.total).epsilon(1e-14));
  CHECK_THROWS_AS(total_loss({{TaskId::Fusion, s}, {TaskId::Entity, Matrix(3, 3)}}, l, c), Error);
}

TEST_CASE("logit scale clamp and default") {
  CHECK(default_log_logit_scale() == doctest::Approx(std::log(1.0 / 0.07)));
  CHECK(logit_scale_from_log(default_log_logit_scale()) == doctest::Approx(1.0 / 0.07).epsilon(1e-14));
  CHECK(logit_scale_from_log(10.0) == 100.0);
}

TEST_CASE("malformed similarity matrices are rejected") {
  CHECK_THROWS_AS(symmetric_ce(Matrix(2, 3), 1.0), Error);
  CHECK_THROWS_AS(symmetric_ce(Matrix{{1.0, std::nan("")}, {0.0, 1.0}}, 1.0), Error);
  LossConfig bad;
  bad.temp = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
