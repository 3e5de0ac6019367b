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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgesynth/config.hpp"
#include "edgesynth/edges.hpp"
#include "edgesynth/manifest.hpp"
#include "edgesynth/metrics.hpp"
#include "edgesynth/pix2pix.hpp"
#include "edgesynth/segnet.hpp"
#include "edgesynth/toygen.hpp"

namespace edgesynth {

// Pipeline commands behind the CLI subcommands. Artifact layout under the
// output directory:
//   raw images + masks + manifest.jsonl   (toygen output dir)
//   tiles/, fused/, class_stats.csv, manifest.jsonl
//   gan/gan.ckpt, gan/gan_loss.csv, gan/gan_loss_ma.csv
//   synth_g0/, synth_g1/
//   runs/<run>/seg.ckpt, seg_loss.csv, pred_*.pgm, overlay_*.ppm, report.csv
//   runs/comparison.csv

struct PrepareResult {
  DatasetManifest manifest;
  std::vector<int64_t> pixel_counts;  // [background, nuclei]
  ClassWeights weights;
};

// Renders spec.count train + spec.test_count test pairs into out_dir and
// writes out_dir/manifest.jsonl with the split already assigned.
DatasetManifest cmd_toygen(const ToySpec& spec, const std::string& out_dir);

// raw_path is either a manifest file (its split assignments carry over to
// the tiles) or a directory of <stem>.ppm / <stem>_mask.pgm pairs (tiles are
// split by split_train_test with test_fraction and seed). Tiles land in
// out_dir/tiles, the manifest in out_dir/manifest.jsonl, per-class pixel
// counts and weights in out_dir/class_stats.csv.
PrepareResult cmd_prepare(const std::string& raw_path, int block,
                          const std::string& out_dir, double test_fraction,
                          uint64_t seed);

// Grayscale -> canny -> fuse for every origin==real sample; fused maps land
// in <manifest dir>/fused and the manifest is rewritten in place.
void cmd_fuse(const std::string& manifest_path, const CannyParams& params);

// Trains the translation GAN on (fused, image) pairs from origin==real train
// samples. Checkpoint and loss CSVs land under out_dir/gan.
void cmd_train_gan(const std::string& manifest_path, const GanConfig& cfg,
                   const std::string& out_dir);

// mode "g0" replays the original fused labels, "g1" shape-transforms them
// first. Appends one train sample per real train source; rerunning a mode is
// rejected. Synthesized pairs land under out_dir/synth_<mode>.
void cmd_synth(const std::string& manifest_path, const GanConfig& cfg,
               const std::string& out_dir, const std::string& mode,
               bool edge_to_roi, uint64_t seed);

// Trains on every split==train sample in the manifest (real and synthetic).
// With use_class_weights, weights come from the train-set pixel counts.
void cmd_train_seg(const std::string& manifest_path, SegConfig cfg,
                   const std::string& out_dir, const std::string& run_name,
                   bool use_class_weights);

// Evaluates runs/<run>/seg.ckpt on the real test split: micro-averaged
// confusion metrics plus per-image-mean BF. Writes predictions, overlays and
// report.csv, then refreshes runs/comparison.csv when at least two run
// reports exist. bf_tolerance 0 selects bf_default_tolerance.
MetricReport cmd_eval(const std::string& manifest_path, const SegConfig& cfg,
                      const std::string& out_dir, const std::string& run_name,
                      double bf_tolerance);

// Rebuilds runs/comparison.csv from every runs/*/report.csv.
void cmd_report(const std::string& out_dir);

// report.csv round trip (key,value lines).
std::string report_to_csv(const MetricReport& report, double bf_tolerance,
                          size_t test_count);
MetricReport report_from_csv(const std::string& path);

// Stage seeds derived from the top-level seed so every stage draws from an
// independent stream.
GanConfig gan_config(const PipelineConfig& cfg);
SegConfig seg_config(const PipelineConfig& cfg);
ToySpec toy_spec(const PipelineConfig& cfg);
CannyParams canny_params(const PipelineConfig& cfg);

}  // namespace edgesynth
