#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "guardnet/bench.hpp"
#include "guardnet/error.hpp"
#include "guardnet/graphlet.hpp"
#include "guardnet/synth.hpp"

namespace py = pybind11;
using namespace guardnet;

namespace {

py::array_t<double> features_array(const SparseGraph& g) {
  if (!g.has_features()) return py::array_t<double>(std::vector<py::ssize_t>{0, 0});
  const Tensor& x = g.features();
  py::array_t<double> out({static_cast<py::ssize_t>(x.rows()), static_cast<py::ssize_t>(x.cols())});
  std::copy(x.data().begin(), x.data().end(), out.mutable_data());
  return out;
}

py::dict cell_dict(const ReportCell& c) {
  py::dict d;
  d["model"] = c.model;
  d["defense"] = c.defense;
  d["attack"] = c.attack;
  d["rate"] = c.rate;
  d["seed"] = c.seed;
  d["clean"] = c.clean;
  d["attacked"] = c.attacked;
  d["defended"] = c.defended;
  d["ok"] = c.ok;
  d["error"] = c.error;
  return d;
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["model"] = s.model;
  d["defense"] = s.defense;
  d["attack"] = s.attack;
  d["rate"] = s.rate;
  d["runs"] = s.runs;
  d["clean_mean"] = s.clean_mean;
  d["clean_std"] = s.clean_std;
  d["attacked_mean"] = s.attacked_mean;
  d["attacked_std"] = s.attacked_std;
  d["defended_mean"] = s.defended_mean;
  d["defended_std"] = s.defended_std;
  return d;
}

}  // namespace

PYBIND11_MODULE(_guardnet, m) {
  m.doc() = "Graph neural network training with edge-pruning defenses and poisoning attacks.";

  // Translators run newest first, so the base class goes in before the subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);

  py::class_<SparseGraph>(m, "Graph")
      .def_static(
          "from_edges",
          [](std::size_t n, const std::vector<Edge>& edges) { return SparseGraph::from_edges(n, edges); },
          py::arg("n_nodes"), py::arg("edges"))
      .def_property_readonly("n_nodes", &SparseGraph::n_nodes)
      .def_property_readonly("n_edges", &SparseGraph::n_edges)
      .def_property_readonly("num_classes", &SparseGraph::num_classes)
      .def("degree", &SparseGraph::degree)
      .def("has_edge", &SparseGraph::has_edge)
      .def("edges", &SparseGraph::edge_list)
      .def("labels",
           [](const SparseGraph& g) {
             return std::vector<std::size_t>(g.labels().begin(), g.labels().end());
           })
      .def("features", &features_array)
      .def("__repr__", [](const SparseGraph& g) {
        return "<Graph n_nodes=" + std::to_string(g.n_nodes()) +
               " n_edges=" + std::to_string(g.n_edges()) + ">";
      });

  py::class_<SbmSpec>(m, "SbmSpec")
      .def(py::init<>())
      .def_readwrite("n_nodes", &SbmSpec::n_nodes)
      .def_readwrite("clusters", &SbmSpec::clusters)
      .def_readwrite("p_in", &SbmSpec::p_in)
      .def_readwrite("p_out", &SbmSpec::p_out)
      .def_readwrite("feature_dim", &SbmSpec::feature_dim)
      .def_readwrite("signal", &SbmSpec::signal)
      .def_readwrite("seed", &SbmSpec::seed);

  py::class_<CycleHouseSpec>(m, "CycleHouseSpec")
      .def(py::init<>())
      .def_readwrite("cycle_length", &CycleHouseSpec::cycle_length)
      .def_readwrite("anchor_spacing", &CycleHouseSpec::anchor_spacing)
      .def_readwrite("seed", &CycleHouseSpec::seed)
      .def_property_readonly("n_nodes", &CycleHouseSpec::n_nodes);

  m.def("gen_sbm", &gen_sbm, py::arg("spec") = SbmSpec{});
  m.def("gen_cycle_house", &gen_cycle_house, py::arg("spec") = CycleHouseSpec{});

  m.def(
      "count_orbits",
      [](const SparseGraph& g) {
        const GdvTable t = count_orbits(g);
        py::array_t<std::uint64_t> out({static_cast<py::ssize_t>(t.n), static_cast<py::ssize_t>(kOrbits)});
        std::copy(t.counts.begin(), t.counts.end(), out.mutable_data());
        return out;
      },
      "n x 15 orbit counts of 2-4 node graphlets.");
  m.def("count_triangles", &count_triangles);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("dataset", &RunConfig::dataset)
      .def_readwrite("seeds", &RunConfig::seeds)
      .def_readwrite("epochs", &RunConfig::epochs)
      .def_readwrite("threads", &RunConfig::threads)
      .def_readwrite("targets", &RunConfig::targets)
      .def_readwrite("rate", &RunConfig::rate)
      .def_readwrite("sbm", &RunConfig::sbm)
      .def_readwrite("cycle_house", &RunConfig::cycle_house)
      .def("validate", &RunConfig::validate)
      .def("serialize", &RunConfig::serialize)
      .def("hash", &RunConfig::hash);

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  m.def(
      "run_experiment",
      [](const RunConfig& config) {
        ExperimentReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(config);
        }
        py::dict out;
        py::list cells, summaries;
        for (const auto& c : r.cells) cells.append(cell_dict(c));
        for (const auto& s : r.summaries) summaries.append(summary_dict(s));
        out["cells"] = cells;
        out["summaries"] = summaries;
        out["config_hash"] = r.config_hash;
        out["wall_seconds"] = r.wall_seconds;
        out["partial"] = r.partial;
        return out;
      },
      py::arg("config"));

  m.def(
      "scaling_bench",
      [](const std::vector<std::size_t>& sizes, std::size_t dim, std::size_t trials, std::uint64_t seed) {
        ScalingReport r;
        {
          py::gil_scoped_release release;
          r = scaling_bench(sizes, dim, trials, seed);
        }
        py::dict out;
        py::list rows;
        for (const auto& row : r.rows)
          rows.append(py::dict(py::arg("edges") = row.edges, py::arg("nodes") = row.nodes,
                               py::arg("seconds") = row.seconds));
        out["rows"] = rows;
        out["slope"] = r.slope;
        out["r2"] = r.r2;
        return out;
      },
      py::arg("sizes"), py::arg("dim") = 16, py::arg("trials") = 3, py::arg("seed") = 0);
}
