// Copyright 2026 The AuditVotes Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Python bindings: configuration, the end-to-end pipelines, and the
// certification primitives.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "auditvotes/certify.hpp"
#include "auditvotes/config.hpp"
#include "auditvotes/error.hpp"
#include "auditvotes/graph.hpp"
#include "auditvotes/pipeline.hpp"
#include "auditvotes/smoothing.hpp"
#include "auditvotes/voting.hpp"

namespace py = pybind11;
namespace av = auditvotes;

namespace {

using IntArray = py::array_t<std::int64_t>;

template <class T>
py::array_t<T> ToArray(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

av::VoteTally TallyFrom(const std::vector<std::int64_t>& counts, std::optional<std::int64_t> n_valid,
                        std::optional<std::int64_t> n_total) {
  av::VoteTally t(static_cast<int>(counts.size()));
  t.counts = counts;
  std::int64_t sum = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw av::ConfigError("vote counts must be non-negative");
    sum += c;
  }
  t.n_valid = n_valid.value_or(sum);
  t.n_total = n_total.value_or(t.n_valid);
  if (t.n_valid != sum || t.n_total < t.n_valid) {
    throw av::ConfigError("need sum(counts) == n_valid <= n_total");
  }
  return t;
}

py::array_t<std::int32_t> EdgeArray(std::span<const av::Edge> edges) {
  py::array_t<std::int32_t> out({static_cast<py::ssize_t>(edges.size()), py::ssize_t{2}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    m(i, 0) = edges[i].u;
    m(i, 1) = edges[i].v;
  }
  return out;
}

std::vector<av::Edge> EdgesFrom(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || (a.shape(1) != 2 && a.shape(0) != 0)) {
    throw av::ShapeError("edges must have shape (E, 2)");
  }
  std::vector<av::Edge> edges;
  auto m = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    edges.push_back({static_cast<av::NodeId>(m(i, 0)), static_cast<av::NodeId>(m(i, 1))});
  }
  return edges;
}

py::object ParseJson(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Certified robustness of graph classifiers under randomized smoothing";

  // Translators run newest first, so subclasses register after the base.
  const auto& error = py::register_exception<av::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<av::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<av::ParseError>(m, "ParseError", error.ptr());
  py::register_exception<av::NumericError>(m, "NumericError", error.ptr());
  py::register_exception<av::BoundsError>(m, "BoundsError", error.ptr());
  py::register_exception<av::ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<av::SplitError>(m, "SplitError", error.ptr());

  py::class_<av::ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("load", &av::ExperimentConfig::Load, py::arg("path"))
      .def_static("keys", &av::ExperimentConfig::Keys)
      .def("set", &av::ExperimentConfig::Set, py::arg("key"), py::arg("value"))
      .def("get", &av::ExperimentConfig::Get, py::arg("key"))
      .def("merge_file", &av::ExperimentConfig::MergeFile, py::arg("path"))
      .def("apply_environment", &av::ExperimentConfig::ApplyEnvironment)
      .def("validate", &av::ExperimentConfig::Validate)
      .def("to_ini", &av::ExperimentConfig::ToIni)
      .def("save", &av::ExperimentConfig::Save, py::arg("path"))
      .def("__getitem__", &av::ExperimentConfig::Get)
      .def("__setitem__", [](av::ExperimentConfig& c, const std::string& key, const py::object& value) {
        c.Set(key, py::isinstance<py::bool_>(value) ? (value.cast<bool>() ? "true" : "false")
                                                    : py::str(value).cast<std::string>());
      });

  py::class_<av::RunResult>(m, "RunResult")
      .def_property_readonly("report", [](const av::RunResult& r) { return ParseJson(r.report.ToJson()); })
      .def_property_readonly("nodes", [](const av::RunResult& r) { return ToArray(r.nodes); })
      .def_property_readonly("labels", [](const av::RunResult& r) { return ToArray(r.labels); })
      .def_property_readonly("counts",
                             [](const av::RunResult& r) {
                               const std::size_t c = r.tallies.empty() ? 0 : r.tallies[0].counts.size();
                               IntArray out({static_cast<py::ssize_t>(r.tallies.size()),
                                             static_cast<py::ssize_t>(c)});
                               auto a = out.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < r.tallies.size(); ++i) {
                                 for (std::size_t k = 0; k < c; ++k) a(i, k) = r.tallies[i].counts[k];
                               }
                               return out;
                             })
      .def_property_readonly("n_valid",
                             [](const av::RunResult& r) {
                               std::vector<std::int64_t> v;
                               for (const auto& t : r.tallies) v.push_back(t.n_valid);
                               return ToArray(v);
                             })
      .def_property_readonly("radii", [](const av::RunResult& r) { return ToArray(r.radii); })
      .def_property_readonly("partition_budgets",
                             [](const av::RunResult& r) {
                               std::vector<std::int64_t> v;
                               for (const auto& p : r.partition) v.push_back(p.budget);
                               return ToArray(v);
                             })
      .def("certified_accuracy",
           [](const av::RunResult& r, int r_a, int r_d) { return r.report.CertifiedAccuracy(r_a, r_d); },
           py::arg("r_a"), py::arg("r_d"))
      .def("write", [](const av::RunResult& r, const av::ExperimentConfig& c,
                       const std::string& dir) { av::WriteOutputs(r, c, dir); },
           py::arg("config"), py::arg("directory"));

  m.def("run_randomized_pipeline",
        [](const av::ExperimentConfig& c) { return av::RunRandomizedPipeline(c); },
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("run_gnncert_pipeline", [](const av::ExperimentConfig& c) { return av::RunGnnCertPipeline(c); },
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("run_gaussian_pipeline", [](const av::ExperimentConfig& c) { return av::RunGaussianPipeline(c); },
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("run_empirical_eval",
        [](const av::ExperimentConfig& c, int budget, const std::vector<av::NodeId>& targets) {
          return av::RunEmpiricalEval(c, budget, targets);
        },
        py::arg("config"), py::arg("budget"), py::arg("targets") = std::vector<av::NodeId>{},
        py::call_guard<py::gil_scoped_release>());
  m.def("summarize_report", &av::SummarizeReportJson, py::arg("json_text"));

  m.def("poisson_binomial_pmf",
        [](const std::vector<double>& p) { return ToArray(av::PoissonBinomialPmf(p)); },
        py::arg("probabilities"));
  m.def("region_table",
        [](double p_plus, double p_minus, int r_a, int r_d) {
          const av::RegionTable t = av::BuildRegionTable({p_plus, p_minus, 0}, r_a, r_d);
          py::dict d;
          d["r"] = ToArray(t.r);
          d["r_prime"] = ToArray(t.r_prime);
          d["log_ratios"] = ToArray(t.log_ratios);
          return d;
        },
        py::arg("p_plus"), py::arg("p_minus"), py::arg("r_a"), py::arg("r_d"));
  m.def("worst_case_margin",
        [](double p_plus, double p_minus, int r_a, int r_d, double p_a_lower, double p_b_upper) {
          const av::MarginResult r =
              av::WorstCaseMargin(av::BuildRegionTable({p_plus, p_minus, 0}, r_a, r_d), {p_a_lower, p_b_upper, 0.0});
          return py::make_tuple(r.mu, r.certified);
        },
        py::arg("p_plus"), py::arg("p_minus"), py::arg("r_a"), py::arg("r_d"), py::arg("p_a_lower"),
        py::arg("p_b_upper"));
  m.def("clopper_pearson_bounds",
        [](const std::vector<std::int64_t>& counts, double alpha, bool bonferroni,
           std::optional<std::int64_t> n_total) -> py::object {
          const av::VoteTally t = TallyFrom(counts, std::nullopt, n_total);
          const auto b = av::ClopperPearsonBounds(t, alpha, static_cast<int>(counts.size()), bonferroni);
          if (!b) return py::none();
          return py::make_tuple(b->p_a_lower, b->p_b_upper);
        },
        py::arg("counts"), py::arg("alpha") = 0.001, py::arg("bonferroni") = true,
        py::arg("n_total") = py::none());
  m.def("two_sided_binomial_p_value", &av::TwoSidedBinomialPValue, py::arg("k"), py::arg("n"));
  m.def("certify_node",
        [](const std::vector<std::int64_t>& counts, double p_plus, double p_minus, int r_a, int r_d,
           double alpha, bool bonferroni) {
          const av::NodeCertificate c =
              av::CertifyNode(TallyFrom(counts, std::nullopt, std::nullopt), {p_plus, p_minus, 0},
                              static_cast<int>(counts.size()), r_a, r_d, {alpha, bonferroni});
          return py::make_tuple(std::string(av::ToString(c.status)), c.predicted, c.mu);
        },
        py::arg("counts"), py::arg("p_plus"), py::arg("p_minus"), py::arg("r_a"), py::arg("r_d"),
        py::arg("alpha") = 0.001, py::arg("bonferroni") = true);
  m.def("gaussian_radius",
        [](double p_a_lower, double p_b_upper, double sigma) {
          return av::GaussianRadius({p_a_lower, p_b_upper, 0.0}, sigma);
        },
        py::arg("p_a_lower"), py::arg("p_b_upper"), py::arg("sigma"));
  m.def("gnncert_certify",
        [](const std::vector<std::int64_t>& counts) {
          const av::GnnCertResult r = av::GnnCertCertify(TallyFrom(counts, std::nullopt, std::nullopt));
          return py::make_tuple(r.predicted, r.budget);
        },
        py::arg("counts"));

  m.def("generate_sbm",
        [](int classes, int nodes_per_class, double p_in, double p_out, int feature_dim,
           std::uint64_t seed) {
          av::SbmConfig c;
          c.classes = classes;
          c.nodes_per_class = nodes_per_class;
          c.p_in = p_in;
          c.p_out = p_out;
          c.feature_dim = feature_dim;
          c.seed = seed;
          const av::SparseGraph g = av::GenerateSbm(c);
          py::dict d;
          d["num_nodes"] = g.num_nodes();
          d["edges"] = EdgeArray(g.edges());
          d["labels"] = ToArray(std::vector<int>(g.labels().begin(), g.labels().end()));
          return d;
        },
        py::arg("classes") = 3, py::arg("nodes_per_class") = 100, py::arg("p_in") = 0.05,
        py::arg("p_out") = 0.005, py::arg("feature_dim") = 60, py::arg("seed") = 0);
  m.def("sample_sparse_noise",
        [](const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& edges,
           av::NodeId num_nodes, double p_plus, double p_minus, std::uint64_t seed,
           std::uint64_t index) {
          const av::SparseGraph g(num_nodes, EdgesFrom(edges), nullptr);
          return EdgeArray(av::SampleSparseNoise(g, {p_plus, p_minus, seed}, index).edges());
        },
        py::arg("edges"), py::arg("num_nodes"), py::arg("p_plus"), py::arg("p_minus"),
        py::arg("seed") = 0, py::arg("index") = 0);
  m.def("mean_homophily",
        [](const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& edges,
           const std::vector<int>& labels) {
          const av::SparseGraph g(static_cast<av::NodeId>(labels.size()), EdgesFrom(edges), nullptr);
          return av::MeanHomophily(g, labels);
        },
        py::arg("edges"), py::arg("labels"));
}
