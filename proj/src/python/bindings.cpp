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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "camoe/gradcheck.hpp"
#include "camoe/harness/cli.hpp"
#include "camoe/retrieval.hpp"

namespace py = pybind11;
using namespace camoe;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return Vector(a.data(), a.data() + a.shape(0));
}

Array from_matrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Array from_vector(const Vector& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict metrics_dict(const RankingResult& r) {
  py::dict d;
  d["ranks"] = r.ranks;
  d["r1"] = r.r1;
  d["r5"] = r.r5;
  d["r10"] = r.r10;
  d["median_rank"] = r.median_rank;
  d["mean_rank"] = r.mean_rank;
  return d;
}

LossConfig dsl_config(double temp) {
  LossConfig c;
  c.dsl_enabled = true;
  c.temp = temp;
  return c;
}

}  // namespace

PYBIND11_MODULE(_camoe, m) {
  m.doc() = "Retrieval head kernels: losses, dual softmax reranking and ranking metrics";

  static py::exception<Error> error(m, "CamoeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("version", [] { return std::string(harness::version()); });

  m.def("softmax", [](const Array& x) { return from_vector(softmax(to_vector(x))); }, py::arg("logits"));
  m.def("cosine_sim", [](const Array& a, const Array& b) { return cosine_sim(to_vector(a), to_vector(b)); },
        py::arg("v"), py::arg("s"));
  m.def("aggregate_mean", [](const Array& frames) { return from_vector(aggregate_mean(to_matrix(frames))); },
        py::arg("frames"));

  m.def(
      "symmetric_ce",
      [](const Array& sim, double logit_scale) {
        const auto l = symmetric_ce(to_matrix(sim), logit_scale);
        return py::make_tuple(l.v2t, l.t2v);
      },
      py::arg("sim"), py::arg("logit_scale"), "Mean cross-entropy per direction as (v2t, t2v).");
  m.def(
      "dsl_loss",
      [](const Array& sim, double logit_scale, double temp) {
        const auto l = dsl_loss(to_matrix(sim), logit_scale, dsl_config(temp));
        return py::make_tuple(l.v2t, l.t2v);
      },
      py::arg("sim"), py::arg("logit_scale"), py::arg("temp") = 100.0);
  m.def(
      "dsl_priors",
      [](const Array& sim, double temp) {
        const auto p = dsl_priors(to_matrix(sim), temp);
        return py::make_tuple(from_matrix(p.v2t), from_matrix(p.t2v));
      },
      py::arg("sim"), py::arg("temp") = 100.0);
  m.def(
      "dsl_rerank",
      [](const Array& sim, double temp, const std::string& direction, std::size_t window) {
        return from_matrix(dsl_rerank(to_matrix(sim), temp, direction_from_string(direction), window));
      },
      py::arg("sim"), py::arg("temp") = 100.0, py::arg("direction") = "v2t", py::arg("window") = 0);
  m.def(
      "compute_metrics",
      [](const Array& sim, const std::string& direction) {
        return metrics_dict(compute_metrics(to_matrix(sim), direction_from_string(direction)));
      },
      py::arg("sim"), py::arg("direction") = "t2v");

  m.def(
      "gradcheck",
      [](std::uint64_t seed, std::size_t batch, std::size_t frames, std::size_t dim, bool dsl,
         const std::string& mode) {
        GradCheckCase c;
        c.shape = {batch, frames, dim, 5};
        c.seed = seed;
        c.dsl = dsl;
        c.mode = train_mode_from_string(mode);
        const auto r = run_gradcheck_case(c);
        py::dict d;
        d["checked"] = r.report.checked;
        d["max_rel_err"] = r.report.max_rel_err;
        d["passed"] = r.report.passed();
        return d;
      },
      py::arg("seed") = 0, py::arg("batch") = 2, py::arg("frames") = 1, py::arg("dim") = 4, py::arg("dsl") = false,
      py::arg("mode") = "camoe");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = harness::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
