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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "edgesynth/errors.hpp"
#include "edgesynth/pipeline.hpp"

using namespace edgesynth;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  REQUIRE(out.good());
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(EDGESYNTH_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config registry rejects unknown keys and bad values") {
  PipelineConfig cfg;
  CHECK(cfg.get_int("toygen.count") == 12);
  CHECK(cfg.get_double("gan.lambda_l1") == 100.0);
  CHECK(cfg.get_bool("seg.use_class_weights"));
  CHECK_FALSE(cfg.get_bool("augment.edge_to_roi"));

  cfg.set("seed", "42");
  CHECK(cfg.get_u64("seed") == 42);
  CHECK_THROWS_AS(cfg.set("gan.lamda_l1", "1"), ConfigError);  // typo
  CHECK_THROWS_AS(cfg.get("no.such.key"), ConfigError);

  cfg.set("gan.lr", "fast");
  CHECK_THROWS_AS(cfg.get_double("gan.lr"), ConfigError);
  cfg.set("seg.epochs", "3.5");
  CHECK_THROWS_AS(cfg.get_int("seg.epochs"), ConfigError);
  cfg.set("seg.use_class_weights", "maybe");
  CHECK_THROWS_AS(cfg.get_bool("seg.use_class_weights"), ConfigError);
}

TEST_CASE("load_config parses key = value lines with comments") {
  const fs::path dir = fresh_dir("edgesynth_cfg");
  const fs::path path = dir / "a.cfg";
  spit(path, "# header comment\n"
             "seed = 9\n"
             "\n"
             "gan.epochs=7   # trailing comment\n"
             "  canny.sigma =  2.5\n");
  const PipelineConfig cfg = load_config(path.string());
  CHECK(cfg.get_u64("seed") == 9);
  CHECK(cfg.get_int("gan.epochs") == 7);
  CHECK(cfg.get_double("canny.sigma") == 2.5);
  CHECK(cfg.get_int("toygen.count") == 12);  // untouched default

  spit(path, "gan.epochs 7\n");
  CHECK_THROWS_AS(load_config(path.string()), ConfigError);
  spit(path, "not.a.key = 1\n");
  CHECK_THROWS_WITH_AS(load_config(path.string()),
                       doctest::Contains("a.cfg:1"), ConfigError);
  CHECK_THROWS_AS(load_config((dir / "missing.cfg").string()), IoError);
}

TEST_CASE("toy renderer is deterministic and self-consistent") {
  ToySpec spec;
  spec.size = 64;
  spec.seed = 3;
  auto [img, mask] = render_toy_sample(spec, 0);
  auto [img2, mask2] = render_toy_sample(spec, 0);
  CHECK(img.pixels == img2.pixels);
  CHECK(mask.v == mask2.v);

  auto [img3, mask3] = render_toy_sample(spec, 1);
  CHECK(img.pixels != img3.pixels);

  int64_t fg = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (mask.at(y, x) == 255) {
        ++fg;
        CHECK(img.at(y, x, 2) < 180);  // nucleus blue-violet, not pink
      } else {
        CHECK(img.at(y, x, 0) > 200);  // pink background stays bright
      }
    }
  }
  const double frac = double(fg) / (64.0 * 64.0);
  CHECK(frac >= 0.10);
  CHECK(frac <= 0.45);

  ToySpec bad = spec;
  bad.min_nuclei = 5;
  bad.max_nuclei = 2;
  CHECK_THROWS_AS(render_toy_sample(bad, 0), ConfigError);
  bad = spec;
  bad.max_radius = 0.5;
  CHECK_THROWS_AS(render_toy_sample(bad, 0), ConfigError);
}

TEST_CASE("toygen and prepare keep the declared split") {
  const fs::path dir = fresh_dir("edgesynth_prep");
  ToySpec spec;
  spec.count = 3;
  spec.test_count = 1;
  spec.size = 64;
  spec.seed = 8;
  const DatasetManifest raw = cmd_toygen(spec, (dir / "raw").string());
  REQUIRE(raw.samples.size() == 4);
  CHECK(raw.samples[0].split == "train");
  CHECK(raw.samples[3].split == "test");
  CHECK(fs::exists(dir / "raw" / "img_0003_mask.pgm"));

  const PrepareResult res = cmd_prepare((dir / "raw" / "manifest.jsonl").string(),
                                        64, (dir / "work").string(), 0.25, 1);
  REQUIRE(res.manifest.samples.size() == 4);
  CHECK(res.manifest.samples[0].id == "img_0000_r0c0");
  CHECK(res.manifest.samples[0].split == "train");
  CHECK(res.manifest.samples[3].split == "test");
  CHECK(res.pixel_counts[0] + res.pixel_counts[1] == 4 * 64 * 64);
  CHECK(res.weights.size() == 2);
  CHECK(fs::exists(dir / "work" / "class_stats.csv"));
  validate_manifest(load_manifest((dir / "work" / "manifest.jsonl").string()));

  SUBCASE("indivisible block names the offending file") {
    CHECK_THROWS_WITH_AS(
        cmd_prepare((dir / "raw" / "manifest.jsonl").string(), 48,
                    (dir / "work48").string(), 0.25, 1),
        doctest::Contains("img_0000.ppm"), NonDivisibleError);
  }
}

TEST_CASE("prepare tiles a bare directory and splits by fraction") {
  const fs::path dir = fresh_dir("edgesynth_prep_dir");
  fs::create_directories(dir / "raw");
  ToySpec spec;
  spec.size = 128;
  spec.seed = 12;
  for (int i = 0; i < 2; ++i) {
    auto [img, mask] = render_toy_sample(spec, uint64_t(i));
    write_pnm(img, (dir / "raw" / ("crop" + std::to_string(i) + ".ppm")).string());
    write_pnm(mask.to_image(),
              (dir / "raw" / ("crop" + std::to_string(i) + "_mask.pgm")).string());
  }

  const PrepareResult res = cmd_prepare((dir / "raw").string(), 64,
                                        (dir / "work").string(), 0.25, 77);
  REQUIRE(res.manifest.samples.size() == 8);
  int test_count = 0;
  for (const auto& s : res.manifest.samples) {
    if (s.split == "test") ++test_count;
  }
  CHECK(test_count == 2);  // round(0.25 * 8)

  SUBCASE("an empty directory is rejected") {
    fs::create_directories(dir / "empty");
    CHECK_THROWS_AS(cmd_prepare((dir / "empty").string(), 64,
                                (dir / "w2").string(), 0.25, 1),
                    EmptyDatasetError);
  }
  SUBCASE("a missing mask is an IO error") {
    write_pnm(ImageBuffer(64, 64, 3), (dir / "raw" / "lonely.ppm").string());
    CHECK_THROWS_WITH_AS(cmd_prepare((dir / "raw").string(), 64,
                                     (dir / "w3").string(), 0.25, 1),
                         doctest::Contains("lonely"), IoError);
  }
}

TEST_CASE("manifest io round trips and validates") {
  const fs::path dir = fresh_dir("edgesynth_manifest");
  DatasetManifest m;
  m.block_size = 32;
  m.seed = 5;
  m.created_by_version = "test 1";
  SampleRecord a{"a", "a.ppm", "a.pgm", "a_f.pgm", "train", "real"};
  SampleRecord b{"b", "b.ppm", "b.pgm", "", "test", "real"};
  m.samples = {a, b};
  const std::string path = (dir / "m.jsonl").string();
  save_manifest(m, path);

  const DatasetManifest r = load_manifest(path);
  CHECK(r.block_size == 32);
  CHECK(r.seed == 5);
  CHECK(r.created_by_version == "test 1");
  REQUIRE(r.samples.size() == 2);
  CHECK(r.samples[0].fused == "a_f.pgm");
  CHECK(r.samples[1].fused.empty());
  CHECK(r.samples[1].split == "test");
  CHECK(r.base_dir == dir.string());
  CHECK(r.resolve("x.pgm") == (dir / "x.pgm").string());

  SUBCASE("a record line before the meta line is rejected") {
    spit(dir / "bad.jsonl",
         R"({"id":"a","image":"a.ppm","label":"a.pgm"})" "\n");
    CHECK_THROWS_AS(load_manifest((dir / "bad.jsonl").string()), ConfigError);
  }
  SUBCASE("duplicate ids are rejected") {
    DatasetManifest dup = r;
    dup.samples.push_back(dup.samples[0]);
    CHECK_THROWS_AS(validate_manifest(dup), ConfigError);
  }
  SUBCASE("synthetic test samples are rejected") {
    DatasetManifest bad = r;
    bad.samples[1].origin = "g0";
    CHECK_THROWS_AS(validate_manifest(bad), ConfigError);
  }
  SUBCASE("a dangling path is an IO error") {
    // ids/splits legal, but none of the files exist under dir
    CHECK_THROWS_AS(validate_manifest(r), IoError);
  }
}

TEST_CASE("fuse writes three-valued labels and is idempotent") {
  const fs::path dir = fresh_dir("edgesynth_fuse");
  ToySpec spec;
  spec.count = 2;
  spec.test_count = 0;
  spec.size = 64;
  spec.seed = 21;
  cmd_toygen(spec, (dir / "raw").string());
  cmd_prepare((dir / "raw" / "manifest.jsonl").string(), 64,
              (dir / "work").string(), 0.25, 1);
  const std::string manifest = (dir / "work" / "manifest.jsonl").string();

  CannyParams params;
  params.sigma = 1.4;
  cmd_fuse(manifest, params);
  const DatasetManifest m = load_manifest(manifest);
  REQUIRE(m.samples.size() == 2);
  for (const auto& s : m.samples) {
    REQUIRE_FALSE(s.fused.empty());
    const ImageBuffer f = read_pnm(m.resolve(s.fused));
    for (uint8_t v : f.pixels) CHECK((v == 0 || v == 128 || v == 255));
  }

  SUBCASE("rerun reproduces identical bytes") {
    const std::string before = slurp(m.resolve(m.samples[0].fused));
    cmd_fuse(manifest, params);
    CHECK(slurp(m.resolve(m.samples[0].fused)) == before);
  }

  SUBCASE("a constant image fuses to the mask alone") {
    // overwrite one tile with a flat color: no gradient, no edges
    const ImageBuffer flat(64, 64, 3, 180);
    write_pnm(flat, m.resolve(m.samples[0].image));
    cmd_fuse(manifest, params);
    const ImageBuffer f = read_pnm(m.resolve(m.samples[0].fused));
    const ImageBuffer mask = read_pnm(m.resolve(m.samples[0].label));
    for (size_t i = 0; i < f.pixels.size(); ++i) {
      CHECK(f.pixels[i] == (mask.pixels[i] == 255 ? 128 : 0));
    }
  }

  SUBCASE("label errors carry the sample id") {
    ImageBuffer junk(64, 64, 1, 7);  // 7 is not a legal mask value
    write_pnm(junk, m.resolve(m.samples[1].label));
    CHECK_THROWS_WITH_AS(cmd_fuse(manifest, params),
                         doctest::Contains(m.samples[1].id.c_str()),
                         LabelRangeError);
  }
}

TEST_CASE("metric reports survive the CSV round trip") {
  MetricReport r;
  r.precision = {0.25, 0.75};
  r.recall = {0.5, 0.125};
  r.f1 = {1.0 / 3.0, 0.2142857};
  r.iou = {0.2, 0.12};
  r.mean_iou = 0.16;
  r.bf = {0.9, 0.7};

  const fs::path dir = fresh_dir("edgesynth_report");
  const fs::path path = dir / "report.csv";
  spit(path, report_to_csv(r, 2.0, 4));
  const MetricReport back = report_from_csv(path.string());
  for (int k = 0; k < 2; ++k) {
    CHECK(back.precision[k] == r.precision[k]);
    CHECK(back.recall[k] == r.recall[k]);
    CHECK(back.f1[k] == r.f1[k]);
    CHECK(back.iou[k] == r.iou[k]);
    CHECK(back.bf[k] == r.bf[k]);
  }
  CHECK(back.mean_iou == r.mean_iou);

  SUBCASE("missing keys are flagged") {
    spit(path, "key,value\nprecision_0,0.5\n");
    CHECK_THROWS_AS(report_from_csv(path.string()), ConfigError);
  }
  SUBCASE("report aggregation needs two runs") {
    CHECK_THROWS_AS(cmd_report(dir.string()), ConfigError);
  }
}

TEST_CASE("the cli maps success and error classes to exit codes") {
  const fs::path dir = fresh_dir("edgesynth_cli");

  SUBCASE("clean toygen exits 0") {
    spit(dir / "ok.cfg", "toygen.count = 1\ntoygen.test_count = 0\n");
    CHECK(run_cli("toygen --config " + (dir / "ok.cfg").string() + " --out " +
                  (dir / "raw").string()) == 0);
    CHECK(fs::exists(dir / "raw" / "img_0000.ppm"));
  }

  SUBCASE("validation problems exit 1") {
    CHECK(run_cli("fuse --manifest " + (dir / "absent.jsonl").string()) == 1);
    CHECK(run_cli("toygen") == 1);           // missing --out
    CHECK(run_cli("frobnicate --out x") == 1);  // unknown subcommand
  }

  SUBCASE("a non-finite training loss exits 2 and leaves a checkpoint") {
    spit(dir / "boom.cfg",
         "seed = 1\n"
         "toygen.count = 2\n"
         "toygen.test_count = 0\n"
         "gan.epochs = 1\n"
         "gan.base_width = 4\n"
         "gan.lambda_l1 = 1e309\n");  // parses to +inf
    const std::string cfg = " --config " + (dir / "boom.cfg").string();
    REQUIRE(run_cli("toygen" + cfg + " --out " + (dir / "raw2").string()) == 0);
    REQUIRE(run_cli("prepare" + cfg + " --manifest " +
                    (dir / "raw2" / "manifest.jsonl").string() + " --out " +
                    (dir / "work").string()) == 0);
    const std::string manifest = (dir / "work" / "manifest.jsonl").string();
    REQUIRE(run_cli("fuse" + cfg + " --manifest " + manifest) == 0);
    CHECK(run_cli("train-gan" + cfg + " --manifest " + manifest + " --out " +
                  (dir / "work").string()) == 2);
    CHECK(fs::exists(dir / "work" / "gan" / "gan.ckpt"));
  }
}
