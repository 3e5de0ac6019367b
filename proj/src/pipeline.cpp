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

#include "edgesynth/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "edgesynth/augment.hpp"
#include "edgesynth/errors.hpp"
#include "edgesynth/rng.hpp"

namespace fs = std::filesystem;

namespace edgesynth {

namespace {

constexpr char kVersion[] = "edgesynth 0.1.0";
constexpr char kArchitecture[] = "toy-unet";

// Stage stream indices mixed into the top-level seed.
constexpr uint64_t kStreamGan = 3;
constexpr uint64_t kStreamSynthG1 = 4;
constexpr uint64_t kStreamSeg = 5;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string zero_pad(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw IoError("cannot write " + path);
}

std::string rel_to_dir(const fs::path& target, const fs::path& dir) {
  const fs::path rel = fs::weakly_canonical(target)
                           .lexically_relative(fs::weakly_canonical(dir));
  if (rel.empty()) return target.string();
  return rel.generic_string();
}

// Rethrows module errors with the sample id prepended.
template <typename Fn>
auto with_sample_context(const std::string& id, Fn&& fn) {
  const std::string prefix = "sample " + id + ": ";
  try {
    return fn();
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const LabelRangeError& e) {
    throw LabelRangeError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  }
}

ImageBuffer resize_if_needed(const ImageBuffer& img, int size,
                             ResizeMethod method) {
  if (img.width == size && img.height == size) return img;
  return resize(img, size, size, method);
}

FusedLabel resize_fused(const FusedLabel& fused, int size) {
  if (fused.width == size && fused.height == size) return fused;
  return FusedLabel::from_image(
      resize(fused.to_image(), size, size, ResizeMethod::Nearest));
}

LabelMask resize_mask(const LabelMask& mask, int w, int h) {
  if (mask.width == w && mask.height == h) return mask;
  return LabelMask::from_image(
      resize(mask.to_image(), w, h, ResizeMethod::Nearest));
}

void count_mask_pixels(const LabelMask& mask, std::vector<int64_t>& counts) {
  for (uint8_t v : mask.v) {
    if (v == 0) {
      ++counts[0];
    } else {
      ++counts[1];
    }
  }
}

std::string class_stats_csv(const std::vector<int64_t>& counts,
                            const ClassWeights& weights) {
  std::ostringstream out;
  out << "class,pixels,weight\n";
  out << "background," << counts[0] << "," << fmt_double(weights[0]) << "\n";
  out << "nuclei," << counts[1] << "," << fmt_double(weights[1]) << "\n";
  return out.str();
}

// Run reports ordered initial-first, then lexicographically.
std::vector<std::pair<std::string, MetricReport>> collect_run_reports(
    const fs::path& runs_dir) {
  std::vector<std::string> names;
  if (fs::exists(runs_dir)) {
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
      if (!entry.is_directory()) continue;
      if (fs::exists(entry.path() / "report.csv")) {
        names.push_back(entry.path().filename().string());
      }
    }
  }
  std::sort(names.begin(), names.end());
  auto it = std::find(names.begin(), names.end(), "initial");
  if (it != names.end()) {
    names.erase(it);
    names.insert(names.begin(), "initial");
  }
  std::vector<std::pair<std::string, MetricReport>> reports;
  reports.reserve(names.size());
  for (const std::string& name : names) {
    reports.emplace_back(name,
                         report_from_csv((runs_dir / name / "report.csv").string()));
  }
  return reports;
}

void refresh_comparison(const fs::path& runs_dir) {
  const auto reports = collect_run_reports(runs_dir);
  if (reports.size() < 2) return;
  write_text_file((runs_dir / "comparison.csv").string(),
                  compare_runs(kArchitecture, reports));
}

}  // namespace

ToySpec toy_spec(const PipelineConfig& cfg) {
  ToySpec spec;
  spec.count = cfg.get_int("toygen.count");
  spec.test_count = cfg.get_int("toygen.test_count");
  spec.size = cfg.get_int("toygen.size");
  spec.min_nuclei = cfg.get_int("toygen.min_nuclei");
  spec.max_nuclei = cfg.get_int("toygen.max_nuclei");
  spec.min_radius = cfg.get_double("toygen.min_radius");
  spec.max_radius = cfg.get_double("toygen.max_radius");
  spec.seed = cfg.get_u64("seed");
  return spec;
}

CannyParams canny_params(const PipelineConfig& cfg) {
  CannyParams params;
  params.sigma = cfg.get_double("canny.sigma");
  params.high_quantile = cfg.get_double("canny.high_quantile");
  params.low_ratio = cfg.get_double("canny.low_ratio");
  return params;
}

GanConfig gan_config(const PipelineConfig& cfg) {
  GanConfig gan;
  gan.lambda_l1 = cfg.get_double("gan.lambda_l1");
  gan.epochs = cfg.get_int("gan.epochs");
  gan.batch_size = cfg.get_int("gan.batch_size");
  gan.image_size = cfg.get_int("gan.image_size");
  gan.base_width = cfg.get_int("gan.base_width");
  gan.lr = cfg.get_double("gan.lr");
  gan.beta1 = cfg.get_double("gan.beta1");
  gan.seed = Rng::mix(cfg.get_u64("seed"), kStreamGan);
  return gan;
}

SegConfig seg_config(const PipelineConfig& cfg) {
  SegConfig seg;
  seg.input_size = cfg.get_int("seg.input_size");
  seg.depth = cfg.get_int("seg.depth");
  seg.base_width = cfg.get_int("seg.base_width");
  seg.epochs = cfg.get_int("seg.epochs");
  seg.batch_size = cfg.get_int("seg.batch_size");
  seg.lr = cfg.get_double("seg.lr");
  seg.seed = Rng::mix(cfg.get_u64("seed"), kStreamSeg);
  return seg;
}

DatasetManifest cmd_toygen(const ToySpec& spec, const std::string& out_dir) {
  if (spec.count < 1) throw ConfigError("toygen.count must be positive");
  if (spec.test_count < 0) {
    throw ConfigError("toygen.test_count must be non-negative");
  }
  fs::create_directories(out_dir);

  DatasetManifest m;
  m.block_size = spec.size;
  m.seed = spec.seed;
  m.created_by_version = kVersion;
  m.base_dir = out_dir;

  const int total = spec.count + spec.test_count;
  for (int i = 0; i < total; ++i) {
    const std::string id = "img_" + zero_pad(i, 4);
    auto [img, mask] = render_toy_sample(spec, static_cast<uint64_t>(i));
    SampleRecord rec;
    rec.id = id;
    rec.image = id + ".ppm";
    rec.label = id + "_mask.pgm";
    rec.split = i < spec.count ? "train" : "test";
    rec.origin = "real";
    write_pnm(img, m.resolve(rec.image));
    write_pnm(mask.to_image(), m.resolve(rec.label));
    m.samples.push_back(std::move(rec));
  }

  const std::string manifest_path =
      (fs::path(out_dir) / "manifest.jsonl").string();
  validate_manifest(m);
  save_manifest(m, manifest_path);
  return m;
}

PrepareResult cmd_prepare(const std::string& raw_path, int block,
                          const std::string& out_dir, double test_fraction,
                          uint64_t seed) {
  if (block < 1) throw ConfigError("prepare.block must be positive");

  // Raw pairs: (id, image path, label path, split or "" for unassigned).
  struct RawPair {
    std::string id;
    std::string image;
    std::string label;
    std::string split;
  };
  std::vector<RawPair> raws;
  bool split_assigned = false;

  fs::path manifest_file;
  if (fs::is_directory(raw_path)) {
    manifest_file = fs::path(raw_path) / "manifest.jsonl";
    if (!fs::exists(manifest_file)) manifest_file.clear();
  } else {
    manifest_file = raw_path;
  }

  if (!manifest_file.empty()) {
    const DatasetManifest raw = load_manifest(manifest_file.string());
    for (const SampleRecord& rec : raw.samples) {
      raws.push_back({rec.id, raw.resolve(rec.image), raw.resolve(rec.label),
                      rec.split});
    }
    split_assigned = true;
  } else {
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(raw_path)) {
      if (entry.path().extension() == ".ppm") images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    for (const fs::path& img : images) {
      fs::path mask = img.parent_path() / (img.stem().string() + "_mask.pgm");
      if (!fs::exists(mask)) {
        throw IoError("no mask " + mask.string() + " for image " +
                      img.string());
      }
      raws.push_back({img.stem().string(), img.string(), mask.string(), ""});
    }
  }
  if (raws.empty()) throw EmptyDatasetError("no raw image pairs under " + raw_path);

  fs::create_directories(fs::path(out_dir) / "tiles");
  DatasetManifest m;
  m.block_size = block;
  m.seed = seed;
  m.created_by_version = kVersion;
  m.base_dir = out_dir;

  std::vector<int64_t> counts(2, 0);
  for (const RawPair& raw : raws) {
    const ImageBuffer img = read_pnm(raw.image);
    const LabelMask mask = with_sample_context(raw.id, [&] {
      return LabelMask::from_image(read_pnm(raw.label));
    });
    if (img.width != mask.width || img.height != mask.height) {
      throw ShapeError("image and mask extents differ for " + raw.image);
    }
    if (img.width % block != 0 || img.height % block != 0) {
      throw NonDivisibleError(raw.image + ": " + std::to_string(img.width) +
                              "x" + std::to_string(img.height) +
                              " does not divide into " +
                              std::to_string(block) + "-px blocks");
    }
    count_mask_pixels(mask, counts);

    const TileGrid img_tiles = tile(img, block, raw.id);
    const TileGrid mask_tiles = tile(mask.to_image(), block, raw.id);
    for (int r = 0; r < img_tiles.rows; ++r) {
      for (int c = 0; c < img_tiles.cols; ++c) {
        const std::string id = tile_name(raw.id, r, c);
        SampleRecord rec;
        rec.id = id;
        rec.image = "tiles/" + id + ".ppm";
        rec.label = "tiles/" + id + "_mask.pgm";
        rec.split = split_assigned ? raw.split : "train";
        rec.origin = "real";
        const size_t flat = static_cast<size_t>(r) * img_tiles.cols + c;
        write_pnm(img_tiles.tiles[flat], m.resolve(rec.image));
        write_pnm(mask_tiles.tiles[flat], m.resolve(rec.label));
        m.samples.push_back(std::move(rec));
      }
    }
  }

  if (!split_assigned) {
    const auto [train_idx, test_idx] = split_train_test(m, test_fraction, seed);
    (void)train_idx;
    for (size_t i : test_idx) m.samples[i].split = "test";
  }

  const ClassWeights weights = class_weights(counts);
  write_text_file((fs::path(out_dir) / "class_stats.csv").string(),
                  class_stats_csv(counts, weights));
  validate_manifest(m);
  save_manifest(m, (fs::path(out_dir) / "manifest.jsonl").string());
  return {std::move(m), std::move(counts), weights};
}

void cmd_fuse(const std::string& manifest_path, const CannyParams& params) {
  DatasetManifest m = load_manifest(manifest_path);
  fs::create_directories(fs::path(m.base_dir) / "fused");
  for (SampleRecord& rec : m.samples) {
    if (rec.origin != "real") continue;
    with_sample_context(rec.id, [&] {
      const ImageBuffer img = read_pnm(m.resolve(rec.image));
      const LabelMask mask = LabelMask::from_image(read_pnm(m.resolve(rec.label)));
      const EdgeMap edges = canny(to_grayscale(img), params);
      const FusedLabel fused = fuse(mask, edges);
      rec.fused = "fused/" + rec.id + "_fused.pgm";
      write_pnm(fused.to_image(), m.resolve(rec.fused));
    });
  }
  validate_manifest(m);
  save_manifest(m, manifest_path);
}

void cmd_train_gan(const std::string& manifest_path, const GanConfig& cfg,
                   const std::string& out_dir) {
  const DatasetManifest m = load_manifest(manifest_path);
  std::vector<std::pair<FusedLabel, ImageBuffer>> dataset;
  for (const SampleRecord& rec : m.samples) {
    if (rec.split != "train" || rec.origin != "real") continue;
    if (rec.fused.empty()) {
      throw ConfigError("sample " + rec.id +
                        " has no fused label; run fuse first");
    }
    with_sample_context(rec.id, [&] {
      FusedLabel fused = resize_fused(
          FusedLabel::from_image(read_pnm(m.resolve(rec.fused))),
          cfg.image_size);
      ImageBuffer img = resize_if_needed(read_pnm(m.resolve(rec.image)),
                                         cfg.image_size,
                                         ResizeMethod::Bilinear);
      dataset.emplace_back(std::move(fused), std::move(img));
    });
  }

  const fs::path gan_dir = fs::path(out_dir) / "gan";
  fs::create_directories(gan_dir);
  auto [g, log] = train_gan(dataset, cfg, (gan_dir / "gan.ckpt").string());
  write_text_file((gan_dir / "gan_loss.csv").string(), loss_csv(log));
  write_text_file((gan_dir / "gan_loss_ma.csv").string(),
                  loss_csv_smoothed(log, 50));
}

void cmd_synth(const std::string& manifest_path, const GanConfig& cfg,
               const std::string& out_dir, const std::string& mode,
               bool edge_to_roi, uint64_t seed) {
  if (mode != "g0" && mode != "g1") {
    throw ConfigError("synth mode must be g0 or g1, got '" + mode + "'");
  }
  DatasetManifest m = load_manifest(manifest_path);

  std::vector<size_t> sources;
  for (size_t i = 0; i < m.samples.size(); ++i) {
    const SampleRecord& rec = m.samples[i];
    if (rec.split != "train" || rec.origin != "real") continue;
    if (rec.fused.empty()) {
      throw ConfigError("sample " + rec.id +
                        " has no fused label; run fuse first");
    }
    if (rec.origin == mode) continue;  // unreachable; kept for clarity
    sources.push_back(i);
  }
  if (sources.empty()) {
    throw EmptyDatasetError("no real train samples to synthesize from");
  }
  for (const SampleRecord& rec : m.samples) {
    if (rec.origin == mode) {
      throw ConfigError("manifest already holds " + mode +
                        " samples; synth " + mode + " was applied before");
    }
  }

  GeneratorNet g = load_generator(
      (fs::path(out_dir) / "gan" / "gan.ckpt").string(), cfg);

  const fs::path synth_dir = fs::path(out_dir) / ("synth_" + mode);
  fs::create_directories(synth_dir);
  const fs::path manifest_dir = m.base_dir;
  const uint64_t stage_seed = Rng::mix(seed, kStreamSynthG1);

  std::vector<FusedLabel> block_labels;   // conditioning labels at block size
  std::vector<FusedLabel> gan_labels;     // same labels at the GAN size
  block_labels.reserve(sources.size());
  gan_labels.reserve(sources.size());
  for (size_t k = 0; k < sources.size(); ++k) {
    const SampleRecord& rec = m.samples[sources[k]];
    FusedLabel fused = with_sample_context(rec.id, [&] {
      return FusedLabel::from_image(read_pnm(m.resolve(rec.fused)));
    });
    if (mode == "g1") {
      Rng rng(Rng::mix(stage_seed, k));
      const ShapeTransform t = sample_transform(rng, fused.width);
      fused = apply_transform(fused, t, fused.width);
    }
    gan_labels.push_back(resize_fused(fused, cfg.image_size));
    block_labels.push_back(std::move(fused));
  }

  const std::vector<ImageBuffer> outputs = synthesize(g, gan_labels);

  for (size_t k = 0; k < sources.size(); ++k) {
    const SampleRecord& src = m.samples[sources[k]];
    const std::string id = src.id + "_" + mode;
    const FusedLabel& fused = block_labels[k];
    const ImageBuffer img =
        resize_if_needed(outputs[k], fused.width, ResizeMethod::Bilinear);
    const LabelMask mask = derive_mask(fused, edge_to_roi);

    SampleRecord rec;
    rec.id = id;
    rec.image = rel_to_dir(synth_dir / (id + ".ppm"), manifest_dir);
    rec.label = rel_to_dir(synth_dir / (id + "_mask.pgm"), manifest_dir);
    rec.fused = rel_to_dir(synth_dir / (id + "_fused.pgm"), manifest_dir);
    rec.split = "train";
    rec.origin = mode;
    write_pnm(img, m.resolve(rec.image));
    write_pnm(mask.to_image(), m.resolve(rec.label));
    write_pnm(fused.to_image(), m.resolve(rec.fused));
    m.samples.push_back(std::move(rec));
  }

  validate_manifest(m);
  save_manifest(m, manifest_path);
}

void cmd_train_seg(const std::string& manifest_path, SegConfig cfg,
                   const std::string& out_dir, const std::string& run_name,
                   bool use_class_weights) {
  if (run_name.empty()) throw ConfigError("run name must not be empty");
  const DatasetManifest m = load_manifest(manifest_path);

  std::vector<std::pair<ImageBuffer, LabelMask>> dataset;
  std::vector<int64_t> counts(2, 0);
  for (const SampleRecord& rec : m.samples) {
    if (rec.split != "train") continue;
    with_sample_context(rec.id, [&] {
      ImageBuffer img = resize_if_needed(read_pnm(m.resolve(rec.image)),
                                         cfg.input_size,
                                         ResizeMethod::Bilinear);
      LabelMask mask =
          resize_mask(LabelMask::from_image(read_pnm(m.resolve(rec.label))),
                      cfg.input_size, cfg.input_size);
      count_mask_pixels(mask, counts);
      dataset.emplace_back(std::move(img), std::move(mask));
    });
  }
  if (dataset.empty()) throw EmptyDatasetError("manifest has no train samples");

  if (use_class_weights) {
    cfg.class_weights = class_weights(counts);
  }

  const fs::path run_dir = fs::path(out_dir) / "runs" / run_name;
  fs::create_directories(run_dir);
  auto [net, log] = train_seg(dataset, cfg, (run_dir / "seg.ckpt").string());
  write_text_file((run_dir / "seg_loss.csv").string(), seg_loss_csv(log));
}

std::string report_to_csv(const MetricReport& report, double bf_tolerance,
                          size_t test_count) {
  std::ostringstream out;
  out << "key,value\n";
  for (int k = 0; k < 2; ++k) {
    out << "precision_" << k << "," << fmt_double(report.precision[k]) << "\n";
  }
  for (int k = 0; k < 2; ++k) {
    out << "recall_" << k << "," << fmt_double(report.recall[k]) << "\n";
  }
  for (int k = 0; k < 2; ++k) {
    out << "f1_" << k << "," << fmt_double(report.f1[k]) << "\n";
  }
  for (int k = 0; k < 2; ++k) {
    out << "iou_" << k << "," << fmt_double(report.iou[k]) << "\n";
  }
  out << "mean_iou," << fmt_double(report.mean_iou) << "\n";
  for (int k = 0; k < 2; ++k) {
    out << "bf_" << k << "," << fmt_double(report.bf[k]) << "\n";
  }
  out << "bf_tolerance," << fmt_double(bf_tolerance) << "\n";
  out << "test_count," << test_count << "\n";
  return out.str();
}

MetricReport report_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path);
  std::map<std::string, double> kv;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("malformed report line '" + line + "' in " + path);
    }
    kv[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
  }
  const auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw ConfigError("report " + path + " is missing key " + key);
    }
    return it->second;
  };
  MetricReport r;
  for (int k = 0; k < 2; ++k) {
    const std::string s = std::to_string(k);
    r.precision.push_back(need("precision_" + s));
    r.recall.push_back(need("recall_" + s));
    r.f1.push_back(need("f1_" + s));
    r.iou.push_back(need("iou_" + s));
    r.bf.push_back(need("bf_" + s));
  }
  r.mean_iou = need("mean_iou");
  return r;
}

MetricReport cmd_eval(const std::string& manifest_path, const SegConfig& cfg,
                      const std::string& out_dir, const std::string& run_name,
                      double bf_tolerance) {
  const DatasetManifest m = load_manifest(manifest_path);
  std::vector<size_t> test_idx;
  for (size_t i = 0; i < m.samples.size(); ++i) {
    if (m.samples[i].split == "test") test_idx.push_back(i);
  }
  if (test_idx.empty()) {
    throw SplitError("manifest has no test split to evaluate on");
  }

  const fs::path run_dir = fs::path(out_dir) / "runs" / run_name;
  SegNetToy net = load_segnet((run_dir / "seg.ckpt").string(), cfg);

  ConfusionMatrix total(SegNetToy::kClasses);
  std::vector<double> bf_sum(SegNetToy::kClasses, 0.0);
  for (size_t i : test_idx) {
    const SampleRecord& rec = m.samples[i];
    with_sample_context(rec.id, [&] {
      const ImageBuffer img = read_pnm(m.resolve(rec.image));
      const LabelMask gt = LabelMask::from_image(read_pnm(m.resolve(rec.label)));
      const ImageBuffer input =
          resize_if_needed(img, cfg.input_size, ResizeMethod::Bilinear);
      LabelMask pred = predict(net, input);
      pred = resize_mask(pred, gt.width, gt.height);

      const std::vector<int> gt_enc = encode_classes(gt);
      const std::vector<int> pred_enc = encode_classes(pred);
      total += confusion(gt_enc, pred_enc, SegNetToy::kClasses);
      const double tol = bf_tolerance > 0.0
                             ? bf_tolerance
                             : bf_default_tolerance(gt.width, gt.height);
      for (int k = 0; k < SegNetToy::kClasses; ++k) {
        bf_sum[k] += bf_score(gt_enc, pred_enc, gt.width, gt.height, k, tol);
      }
      write_pnm(pred.to_image(), (run_dir / ("pred_" + rec.id + ".pgm")).string());
      write_pnm(overlay(gt, pred),
                (run_dir / ("overlay_" + rec.id + ".ppm")).string());
    });
  }

  MetricReport report = metrics(total);
  for (int k = 0; k < SegNetToy::kClasses; ++k) {
    report.bf[k] = bf_sum[k] / static_cast<double>(test_idx.size());
  }
  write_text_file((run_dir / "report.csv").string(),
                  report_to_csv(report, bf_tolerance, test_idx.size()));
  refresh_comparison(fs::path(out_dir) / "runs");
  return report;
}

void cmd_report(const std::string& out_dir) {
  const fs::path runs_dir = fs::path(out_dir) / "runs";
  const auto reports = collect_run_reports(runs_dir);
  if (reports.size() < 2) {
    throw ConfigError("comparison needs at least two run reports under " +
                      runs_dir.string());
  }
  write_text_file((runs_dir / "comparison.csv").string(),
                  compare_runs(kArchitecture, reports));
}

}  // namespace edgesynth
