#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hanslens/cli.hpp"
#include "hanslens/data.hpp"
#include "hanslens/detectors.hpp"
#include "hanslens/error.hpp"
#include "hanslens/eval.hpp"
#include "hanslens/explain.hpp"
#include "hanslens/model_io.hpp"
#include "hanslens/rng.hpp"

namespace py = pybind11;
using namespace hanslens;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

// A batch (N, ...) becomes N tensors of the trailing shape.
std::vector<Tensor> to_batch(const Array& a) {
  if (a.ndim() < 2) throw ShapeError("expected a batch with at least two axes, got " + std::to_string(a.ndim()));
  const Shape item(a.shape() + 1, a.shape() + a.ndim());
  const std::size_t n = static_cast<std::size_t>(a.shape(0)), stride = shape_size(item);
  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(item, std::vector<double>(a.data() + i * stride, a.data() + (i + 1) * stride));
  return out;
}

py::dict split_dict(const std::vector<Sample>& split, const Shape& shape) {
  std::vector<py::ssize_t> dims{static_cast<py::ssize_t>(split.size())};
  dims.insert(dims.end(), shape.begin(), shape.end());
  Array images(dims);
  std::vector<int> labels(split.size());
  py::list ids, masks;
  const std::size_t stride = shape_size(shape);
  for (std::size_t i = 0; i < split.size(); ++i) {
    std::copy(split[i].image.values().begin(), split[i].image.values().end(), images.mutable_data() + i * stride);
    labels[i] = split[i].label;
    ids.append(split[i].id);
    masks.append(split[i].mask ? py::object(to_array(*split[i].mask)) : py::none());
  }
  py::dict d;
  d["ids"] = ids;
  d["images"] = images;
  d["labels"] = py::array_t<int>(static_cast<py::ssize_t>(labels.size()), labels.data());
  d["masks"] = masks;
  return d;
}

py::dict dataset_dict(const Dataset& ds) {
  Shape shape;
  for (const auto* split : {&ds.train, &ds.val, &ds.val_outliers, &ds.test})
    if (!split->empty()) {
      shape = split->front().image.shape();
      break;
    }
  py::dict d;
  d["class"] = ds.class_name;
  d["train"] = split_dict(ds.train, shape);
  d["val"] = split_dict(ds.val, shape);
  d["val_outliers"] = split_dict(ds.val_outliers, shape);
  d["test"] = split_dict(ds.test, shape);
  return d;
}

SynthSpec make_spec(const std::string& kind, std::uint64_t seed, std::size_t height, std::size_t width,
                    std::size_t n_train, std::size_t n_val, std::size_t n_val_outliers, std::size_t n_test) {
  SynthSpec s;
  s.kind = parse_synth_kind(kind);
  s.seed = seed;
  s.height = height;
  s.width = width;
  s.n_train = n_train;
  s.n_val = n_val;
  s.n_val_outliers = n_val_outliers;
  s.n_test = n_test;
  return s;
}

// Python-side handle on any fitted detector.
struct PyDetector {
  Detector model;
};

Shape item_shape(const std::vector<Tensor>& batch) {
  if (batch.empty()) throw DataError("empty training batch");
  return batch.front().shape();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Outlier detectors with pixel-wise explanations";
  m.attr("__version__") = HANSLENS_PY_VERSION;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def(
      "synthesize",
      [](const std::string& kind, std::uint64_t seed, std::size_t height, std::size_t width, std::size_t n_train,
         std::size_t n_val, std::size_t n_val_outliers, std::size_t n_test) {
        return dataset_dict(
            generate_synthetic(make_spec(kind, seed, height, width, n_train, n_val, n_val_outliers, n_test)));
      },
      py::arg("kind"), py::arg("seed") = 0, py::arg("height") = 16, py::arg("width") = 16, py::arg("n_train") = 200,
      py::arg("n_val") = 50, py::arg("n_val_outliers") = 10, py::arg("n_test") = 50,
      "Synthetic class as a dict of splits with images, labels, ids and masks.");
  m.def(
      "write_synthetic",
      [](const std::string& kind, const std::filesystem::path& out, std::uint64_t seed) {
        SynthSpec s;
        s.kind = parse_synth_kind(kind);
        s.seed = seed;
        write_dataset(generate_synthetic(s), out);
        return out / "manifest.json";
      },
      py::arg("kind"), py::arg("out"), py::arg("seed") = 0, "Writes a synthetic class; returns the manifest path.");
  m.def(
      "load_dataset", [](const std::filesystem::path& manifest) { return dataset_dict(load_manifest(manifest)); },
      py::arg("manifest"));

  py::class_<PyDetector>(m, "Detector")
      .def_property_readonly("kind", [](const PyDetector& d) { return detector_kind(d.model); })
      .def_property_readonly("input_shape", [](const PyDetector& d) { return detector_input_shape(d.model); })
      .def(
          "score", [](const PyDetector& d, const Array& x) { return score(d.model, to_tensor(x)); }, py::arg("x"))
      .def(
          "scores",
          [](const PyDetector& d, const Array& batch) {
            std::vector<double> out;
            for (const auto& x : to_batch(batch)) out.push_back(score(d.model, x));
            return out;
          },
          py::arg("batch"))
      .def(
          "explain",
          [](const PyDetector& d, const Array& x, double lrp_gamma) {
            LrpConfig cfg;
            cfg.gamma = lrp_gamma;
            cfg.validate();
            return to_array(explain(d.model, to_tensor(x), cfg).values);
          },
          py::arg("x"), py::arg("lrp_gamma") = LrpConfig{}.gamma)
      .def(
          "save", [](const PyDetector& d, const std::filesystem::path& dir) { save_detector(d.model, dir); },
          py::arg("dir"))
      .def("__repr__", [](const PyDetector& d) {
        return "<hanslens.Detector " + detector_kind(d.model) + " " + shape_str(detector_input_shape(d.model)) + ">";
      });

  m.def(
      "load_detector", [](const std::filesystem::path& dir) { return PyDetector{load_detector(dir)}; },
      py::arg("dir"));

  m.def(
      "fit_kde",
      [](const Array& train, const Array& val, std::optional<std::vector<double>> gamma_grid) {
        const auto tr = to_batch(train), va = to_batch(val);
        const auto grid = gamma_grid ? *gamma_grid : default_gamma_grid(stack_rows(tr));
        return PyDetector{fit_kde(tr, va, grid)};
      },
      py::arg("train"), py::arg("val"), py::arg("gamma_grid") = py::none());
  m.def(
      "fit_autoencoder",
      [](const Array& train, const Array& val, std::size_t epochs, std::size_t bottleneck, double learning_rate,
         std::uint64_t seed) {
        const auto tr = to_batch(train), va = to_batch(val);
        AdamConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.seed = derive_seed(seed, "fit/autoencoder", 0);
        return PyDetector{
            fit_autoencoder(tr, va, AutoencoderArchitecture::standard(shape_size(item_shape(tr)), bottleneck), cfg)};
      },
      py::arg("train"), py::arg("val"), py::arg("epochs") = AdamConfig{}.epochs, py::arg("bottleneck") = 16,
      py::arg("learning_rate") = AdamConfig{}.learning_rate, py::arg("seed") = 0);
  m.def(
      "fit_deep",
      [](const Array& train, const Array& val, const Array& val_outliers, std::vector<std::size_t> backbone_widths,
         std::optional<std::vector<double>> lambda_grid, std::uint64_t seed) {
        const auto tr = to_batch(train), va = to_batch(val), vo = to_batch(val_outliers);
        auto backbone =
            random_backbone(shape_size(item_shape(tr)), backbone_widths, derive_seed(seed, "fit/deep/backbone", 0));
        const std::vector<double> grid = lambda_grid.value_or(std::vector<double>{});
        return PyDetector{fit_deep_one_class(std::move(backbone), tr, va, vo, grid)};
      },
      py::arg("train"), py::arg("val"), py::arg("val_outliers"), py::arg("backbone_widths") = std::vector<std::size_t>{128},
      py::arg("lambda_grid") = py::none(), py::arg("seed") = 0);
  m.def(
      "fit_bag",
      [](const PyDetector& kde, const PyDetector& autoencoder, const PyDetector& deep, const Array& reference) {
        const auto* k = std::get_if<KdeModel>(&kde.model);
        const auto* a = std::get_if<AutoencoderModel>(&autoencoder.model);
        const auto* d = std::get_if<DeepOneClassModel>(&deep.model);
        if (!k || !a || !d) throw ConfigError("fit_bag expects kde, autoencoder and deep detectors in that order");
        return PyDetector{fit_bag(*k, *a, *d, to_batch(reference))};
      },
      py::arg("kde"), py::arg("autoencoder"), py::arg("deep"), py::arg("reference"),
      "Bag of standardized scores; standardizers are fitted on `reference`.");

  m.def(
      "roc_auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) { return roc_auc(scores, labels); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "explanation_accuracy",
      [](const Array& heatmap, const Array& mask) { return explanation_accuracy(to_tensor(heatmap), to_tensor(mask)); },
      py::arg("heatmap"), py::arg("mask"));
  m.def("clever_hans_score", &clever_hans_score, py::arg("detection_accuracy"), py::arg("explanation_accuracy"));

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
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
