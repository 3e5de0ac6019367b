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

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "edgesynth/errors.hpp"
#include "edgesynth/pipeline.hpp"
#include "edgesynth/rng.hpp"

namespace {

using namespace edgesynth;

struct CliArgs {
  std::string config;
  std::string manifest;
  std::string out;
  std::string mode;
  std::string run;
  uint64_t seed = 0;
  bool seed_set = false;
};

void add_common_flags(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config, "config file (key = value lines)");
  cmd->add_option("--manifest", args.manifest, "dataset manifest path");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--mode", args.mode, "synthesis mode: g0 or g1");
  cmd->add_option("--run", args.run, "experiment run name");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw ConfigError(std::string("missing required flag ") + flag);
  }
  return value;
}

int dispatch(const std::string& command, const CliArgs& args) {
  PipelineConfig cfg =
      args.config.empty() ? PipelineConfig() : load_config(args.config);
  if (args.seed_set) cfg.set("seed", std::to_string(args.seed));
  const uint64_t seed = cfg.get_u64("seed");

  if (command == "toygen") {
    const DatasetManifest m = cmd_toygen(toy_spec(cfg), require(args.out, "--out"));
    std::printf("wrote %zu toy samples to %s\n", m.samples.size(),
                args.out.c_str());
  } else if (command == "prepare") {
    const PrepareResult res = cmd_prepare(
        require(args.manifest, "--manifest"), cfg.get_int("prepare.block"),
        require(args.out, "--out"), cfg.get_double("split.test_fraction"),
        Rng::mix(seed, 2));
    std::printf("tiles: %zu  pixels: background=%lld nuclei=%lld  "
                "weights: background=%.3f nuclei=%.3f\n",
                res.manifest.samples.size(),
                static_cast<long long>(res.pixel_counts[0]),
                static_cast<long long>(res.pixel_counts[1]), res.weights[0],
                res.weights[1]);
  } else if (command == "fuse") {
    cmd_fuse(require(args.manifest, "--manifest"), canny_params(cfg));
    std::printf("fused labels written next to %s\n", args.manifest.c_str());
  } else if (command == "train-gan") {
    cmd_train_gan(require(args.manifest, "--manifest"), gan_config(cfg),
                  require(args.out, "--out"));
    std::printf("generator checkpoint and loss logs under %s/gan\n",
                args.out.c_str());
  } else if (command == "synth") {
    cmd_synth(require(args.manifest, "--manifest"), gan_config(cfg),
              require(args.out, "--out"), require(args.mode, "--mode"),
              cfg.get_bool("augment.edge_to_roi"), seed);
    std::printf("synthesized %s pairs under %s/synth_%s\n", args.mode.c_str(),
                args.out.c_str(), args.mode.c_str());
  } else if (command == "train-seg") {
    cmd_train_seg(require(args.manifest, "--manifest"), seg_config(cfg),
                  require(args.out, "--out"), require(args.run, "--run"),
                  cfg.get_bool("seg.use_class_weights"));
    std::printf("run %s trained under %s/runs\n", args.run.c_str(),
                args.out.c_str());
  } else if (command == "eval") {
    const MetricReport r = cmd_eval(
        require(args.manifest, "--manifest"), seg_config(cfg),
        require(args.out, "--out"), require(args.run, "--run"),
        cfg.get_double("eval.bf_tolerance"));
    std::printf("run %s: mean IoU %.4f  ROI IoU %.4f  ROI F1 %.4f  "
                "ROI BF %.4f\n",
                args.run.c_str(), r.mean_iou, r.iou[1], r.f1[1], r.bf[1]);
  } else if (command == "report") {
    cmd_report(require(args.out, "--out"));
    std::printf("comparison table at %s/runs/comparison.csv\n",
                args.out.c_str());
  } else {
    throw ConfigError("unknown command " + command);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-fused label-to-image synthesis and segmentation "
               "evaluation pipeline"};
  app.require_subcommand(1);

  CliArgs args;
  const char* commands[] = {"toygen", "prepare", "fuse", "train-gan",
                            "synth", "train-seg", "eval", "report"};
  const char* descriptions[] = {
      "render a toy stained-tissue dataset",
      "tile raw pairs into blocks and split train/test",
      "derive edge-fused labels for every real sample",
      "train the label-to-image translation GAN",
      "synthesize augmentation pairs (g0 replica, g1 shape)",
      "train a segmentation run on the manifest's train split",
      "evaluate a trained run on the real test split",
      "rebuild the run comparison table"};
  for (size_t i = 0; i < sizeof(commands) / sizeof(commands[0]); ++i) {
    add_common_flags(app.add_subcommand(commands[i], descriptions[i]), args);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return dispatch(app.get_subcommands().front()->get_name(), args);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
