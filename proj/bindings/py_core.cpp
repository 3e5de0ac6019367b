// Copyright 2026 the edgesynth authors.
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

// Python bindings over the pipeline commands and a few pure helpers. The
// bindings are path-driven like the CLI: every heavy object (images, nets,
// checkpoints) stays on disk, Python only steers the stages.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "edgesynth/edges.hpp"
#include "edgesynth/errors.hpp"
#include "edgesynth/image.hpp"
#include "edgesynth/labels.hpp"
#include "edgesynth/manifest.hpp"
#include "edgesynth/metrics.hpp"
#include "edgesynth/pipeline.hpp"
#include "edgesynth/pix2pix.hpp"
#include "edgesynth/segnet.hpp"
#include "edgesynth/toygen.hpp"

namespace py = pybind11;
using namespace edgesynth;

namespace {

py::dict report_to_dict(const MetricReport& r) {
  py::dict d;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["iou"] = r.iou;
  d["mean_iou"] = r.mean_iou;
  d["bf"] = r.bf;
  return d;
}

}  // namespace

PYBIND11_MODULE(edgesynth_core, m) {
  m.doc() =
      "Edge-fused label synthesis for segmentation: toy data generation, "
      "Canny/label fusion, conditional GAN synthesis, segmentation training "
      "and evaluation.";
  m.attr("__version__") = "0.1.0";

  const py::object base =
      py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);

  py::class_<GanConfig>(m, "GanConfig")
      .def(py::init<>())
      .def_readwrite("lambda_l1", &GanConfig::lambda_l1)
      .def_readwrite("epochs", &GanConfig::epochs)
      .def_readwrite("batch_size", &GanConfig::batch_size)
      .def_readwrite("image_size", &GanConfig::image_size)
      .def_readwrite("base_width", &GanConfig::base_width)
      .def_readwrite("lr", &GanConfig::lr)
      .def_readwrite("beta1", &GanConfig::beta1)
      .def_readwrite("seed", &GanConfig::seed);

  py::class_<SegConfig>(m, "SegConfig")
      .def(py::init<>())
      .def_readwrite("input_size", &SegConfig::input_size)
      .def_readwrite("depth", &SegConfig::depth)
      .def_readwrite("base_width", &SegConfig::base_width)
      .def_readwrite("epochs", &SegConfig::epochs)
      .def_readwrite("batch_size", &SegConfig::batch_size)
      .def_readwrite("lr", &SegConfig::lr)
      .def_readwrite("class_weights", &SegConfig::class_weights)
      .def_readwrite("seed", &SegConfig::seed);

  m.def(
      "class_weights",
      [](const std::vector<int64_t>& pixel_counts) {
        return class_weights(pixel_counts);
      },
      py::arg("pixel_counts"),
      "Median-frequency balancing weights from per-class pixel counts.");

  m.def(
      "canny_file",
      [](const std::string& image_path, const std::string& out_path,
         double sigma, double high_quantile, double low_ratio) {
        CannyParams p;
        p.sigma = sigma;
        p.high_quantile = high_quantile;
        p.low_ratio = low_ratio;
        const EdgeMap e = canny(to_grayscale(read_pnm(image_path)), p);
        write_pnm(e.to_image(), out_path);
        int64_t count = 0;
        for (uint8_t v : e.v) count += v == 255;
        return count;
      },
      py::arg("image_path"), py::arg("out_path"), py::arg("sigma") = 1.4,
      py::arg("high_quantile") = 0.9, py::arg("low_ratio") = 0.4,
      "Detect edges in a PNM image, write the binary edge map as PGM, and "
      "return the edge pixel count.");

  m.def(
      "toygen",
      [](const std::string& out_dir, int count, int test_count, int size,
         uint64_t seed) {
        ToySpec spec;
        spec.count = count;
        spec.test_count = test_count;
        spec.size = size;
        spec.seed = seed;
        return cmd_toygen(spec, out_dir).samples.size();
      },
      py::arg("out_dir"), py::arg("count") = 12, py::arg("test_count") = 4,
      py::arg("size") = 64, py::arg("seed") = 0,
      "Render toy image/mask pairs plus a manifest; returns the sample "
      "count.");

  m.def(
      "prepare",
      [](const std::string& raw_path, const std::string& out_dir, int block,
         double test_fraction, uint64_t seed) {
        const PrepareResult res =
            cmd_prepare(raw_path, block, out_dir, test_fraction, seed);
        size_t test = 0;
        for (const auto& s : res.manifest.samples) test += s.split == "test";
        py::dict d;
        d["samples"] = res.manifest.samples.size();
        d["test_samples"] = test;
        d["pixel_counts"] = res.pixel_counts;
        d["class_weights"] = res.weights;
        return d;
      },
      py::arg("raw_path"), py::arg("out_dir"), py::arg("block") = 64,
      py::arg("test_fraction") = 0.25, py::arg("seed") = 0,
      "Tile raw pairs into block-size crops and write manifest plus class "
      "stats.");

  m.def(
      "fuse",
      [](const std::string& manifest_path, double sigma, double high_quantile,
         double low_ratio) {
        CannyParams p;
        p.sigma = sigma;
        p.high_quantile = high_quantile;
        p.low_ratio = low_ratio;
        cmd_fuse(manifest_path, p);
      },
      py::arg("manifest_path"), py::arg("sigma") = 1.4,
      py::arg("high_quantile") = 0.9, py::arg("low_ratio") = 0.4,
      "Fuse Canny edges into every real sample's label map.");

  m.def(
      "train_gan",
      [](const std::string& manifest_path, const GanConfig& cfg,
         const std::string& out_dir) {
        cmd_train_gan(manifest_path, cfg, out_dir);
      },
      py::arg("manifest_path"), py::arg("cfg"), py::arg("out_dir"),
      "Train the label-to-image GAN on real train pairs.");

  m.def(
      "synth",
      [](const std::string& manifest_path, const GanConfig& cfg,
         const std::string& out_dir, const std::string& mode, bool edge_to_roi,
         uint64_t seed) {
        cmd_synth(manifest_path, cfg, out_dir, mode, edge_to_roi, seed);
      },
      py::arg("manifest_path"), py::arg("cfg"), py::arg("out_dir"),
      py::arg("mode"), py::arg("edge_to_roi") = false, py::arg("seed") = 0,
      "Synthesize one augmented copy of the train set (mode 'g0' or 'g1').");

  m.def(
      "train_seg",
      [](const std::string& manifest_path, const SegConfig& cfg,
         const std::string& out_dir, const std::string& run_name,
         bool use_class_weights) {
        cmd_train_seg(manifest_path, cfg, out_dir, run_name,
                      use_class_weights);
      },
      py::arg("manifest_path"), py::arg("cfg"), py::arg("out_dir"),
      py::arg("run_name"), py::arg("use_class_weights") = true,
      "Train the toy segmentation U-Net on every train sample.");

  m.def(
      "evaluate",
      [](const std::string& manifest_path, const SegConfig& cfg,
         const std::string& out_dir, const std::string& run_name,
         double bf_tolerance) {
        return report_to_dict(
            cmd_eval(manifest_path, cfg, out_dir, run_name, bf_tolerance));
      },
      py::arg("manifest_path"), py::arg("cfg"), py::arg("out_dir"),
      py::arg("run_name"), py::arg("bf_tolerance") = 0.0,
      "Evaluate a trained run on the test split; returns the metric report.");

  m.def("report", &cmd_report, py::arg("out_dir"),
        "Rebuild the run comparison table from existing reports.");
}
