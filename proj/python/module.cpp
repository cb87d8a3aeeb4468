#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "epsinas/bench_db.hpp"
#include "epsinas/cli.hpp"
#include "epsinas/data_io.hpp"
#include "epsinas/epsilon.hpp"
#include "epsinas/error.hpp"
#include "epsinas/genotype.hpp"
#include "epsinas/rank_stats.hpp"
#include "epsinas/score_table.hpp"

namespace py = pybind11;
using namespace epsinas;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out(t.shape());
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }

SkeletonConfig skeleton(const Tensor& batch, std::size_t stem, std::size_t cells, std::size_t classes) {
  if (batch.rank() != 4) throw ShapeError("batch must be [N, C, H, W], got " + shape_to_string(batch.shape()));
  SkeletonConfig cfg{stem, cells, classes, {batch.dim(1), batch.dim(2), batch.dim(3)}};
  cfg.validate();
  return cfg;
}

py::dict result_dict(const EpsilonResult& r) {
  py::dict d;
  d["epsilon"] = r.epsilon;
  d["delta"] = r.delta;
  d["mu"] = r.mu;
  d["status"] = std::string(status_name(r.status));
  return d;
}

}  // namespace

PYBIND11_MODULE(_epsinas, m) {
  m.doc() = "Bindings for the epsinas scoring engine";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ValueError>(m, "EpsinasValueError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.attr("SPACE_SIZE") = kSpaceSize;

  m.def("parse_genotype", [](const std::string& text) { return Genotype::parse(text).to_string(); },
        "Validates a genotype string and returns its canonical form");
  m.def("genotype_index", [](const std::string& text) { return Genotype::parse(text).index(); });
  m.def("genotype_from_index", [](std::size_t i) { return Genotype::from_index(i).to_string(); });
  m.def("edit_distance",
        [](const std::string& a, const std::string& b) { return edit_distance(Genotype::parse(a), Genotype::parse(b)); });

  m.def(
      "make_batch",
      [](const std::string& kind, std::size_t batch_size, std::uint64_t seed, std::array<std::size_t, 3> shape) {
        BatchSpec spec;
        spec.kind = batch_kind_from_name(kind);
        spec.batch_size = batch_size;
        spec.seed = seed;
        spec.shape = shape;
        return to_array(make_batch(spec));
      },
      py::arg("kind") = "greyscale", py::arg("batch_size") = 256, py::arg("seed") = 0,
      py::arg("shape") = std::array<std::size_t, 3>{3, 32, 32});

  m.def(
      "score",
      [](const std::string& genotype, const FloatArray& batch, float w1, float w2, std::size_t stem_channels,
         std::size_t cells_per_stack, std::size_t num_classes, const std::string& const_scope) {
        const Tensor t = to_tensor(batch);
        const SkeletonConfig cfg = skeleton(t, stem_channels, cells_per_stack, num_classes);
        const WeightPair w{w1, w2};
        w.validate();
        EpsilonResult r;
        {
          py::gil_scoped_release release;
          r = score_architecture(Genotype::parse(genotype), cfg, t, w, scope_from_name(const_scope));
        }
        return result_dict(r);
      },
      py::arg("genotype"), py::arg("batch"), py::arg("w1") = 1e-7f, py::arg("w2") = 1.0f,
      py::arg("stem_channels") = 16, py::arg("cells_per_stack") = 1, py::arg("num_classes") = 10,
      py::arg("const_scope") = "weights", "Epsilon score of one architecture on a [N, C, H, W] batch");

  m.def(
      "epsilon_from_raw",
      [](const FloatArray& a, const FloatArray& b) {
        return result_dict(epsilon_from_raw({a.data(), static_cast<std::size_t>(a.size())},
                                            {b.data(), static_cast<std::size_t>(b.size())}));
      },
      "Epsilon of two raw output arrays (flattened sample-major)");

  m.def("spearman", [](const DoubleArray& x, const DoubleArray& y) { return spearman(to_vector(x), to_vector(y)); });
  m.def("kendall", [](const DoubleArray& x, const DoubleArray& y) { return kendall(to_vector(x), to_vector(y)); });

  m.def(
      "correlate",
      [](const std::string& scores, const std::string& bench, const std::string& acc) {
        const JoinedSeries s =
            join_tables(ScoreTable::load(scores), BenchTable::load(bench), accuracy_column_from_name(acc));
        return RankReport::compute(s, RankOptions{}).to_json();
      },
      py::arg("scores"), py::arg("bench"), py::arg("acc") = "val", "Rank report JSON for a score CSV and a bench CSV");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs an epsinas subcommand in-process; returns (exit_code, stdout, stderr)");
}
