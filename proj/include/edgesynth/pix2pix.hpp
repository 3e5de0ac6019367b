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

#include <string>
#include <vector>

#include "edgesynth/image.hpp"
#include "edgesynth/labels.hpp"
#include "edgesynth/nn.hpp"

namespace edgesynth {

struct GanConfig {
  double lambda_l1 = 100.0;
  int epochs = 200;
  int batch_size = 1;
  int image_size = 64;  // one of {64, 128, 256}
  int base_width = 16;  // generator base channel count; widths cap at 8x
  double lr = 2e-4;
  double beta1 = 0.5;
  uint64_t seed = 0;
};

// U-Net generator: log2(image_size) stride-2 conv blocks down, mirrored
// transposed-conv blocks up, skip concatenation at every resolution. No
// batch norm on the first block, the 1x1 bottleneck, or the output block.
struct GeneratorNet {
  int image_size = 0;
  int depth = 0;
  std::vector<Conv2dLayer> enc;
  std::vector<BatchNorm2dLayer> enc_bn;  // for enc blocks 1 .. depth-2
  std::vector<ConvTranspose2dLayer> dec;
  std::vector<BatchNorm2dLayer> dec_bn;  // for dec blocks 0 .. depth-2

  GeneratorNet() = default;
  GeneratorNet(const GanConfig& cfg, Rng& rng);
  // x: [N,3,S,S] in [-1,1]; returns [N,3,S,S] in (-1,1) via tanh.
  Tensor forward(const Tensor& x, BnMode mode);
  std::vector<Parameter*> params();
};

// Patch discriminator: three stride-2 conv blocks then a stride-1 logit
// head. Input is the 3-channel label one-hot concatenated with the
// 3-channel image, so each logit judges a local receptive field well under
// the full image extent.
struct DiscriminatorNet {
  std::vector<Conv2dLayer> conv;
  std::vector<BatchNorm2dLayer> bn;  // for conv blocks 1 .. 2

  DiscriminatorNet() = default;
  DiscriminatorNet(const GanConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& label_and_image, BnMode mode);
  std::vector<Parameter*> params();
};

struct LossLog {
  std::vector<double> gen_total;
  std::vector<double> gen_adv;
  std::vector<double> gen_l1;
  std::vector<double> disc;
  size_t size() const { return gen_total.size(); }
};

struct GanLosses {
  Tensor gen_total;
  Tensor gen_adv;
  Tensor gen_l1;
  Tensor disc;
};

// One-hot {background, ROI, edge} scaled to [-1,1] as 2v-1: [1,3,S,S].
Tensor label_to_input(const FusedLabel& fused);

// RGB image scaled to [-1,1] as v/127.5 - 1: [1,3,S,S].
Tensor image_to_target(const ImageBuffer& img);

// Decode one [N,3,S,S] sample (index n) to 8-bit: round(127.5*(v+1)),
// clamped to [0,255].
ImageBuffer tensor_to_image(const Tensor& t, int64_t n = 0);

// disc = 0.5*[BCE(d_real,1) + BCE(d_fake,0)]; gen_adv = BCE(d_fake,1);
// gen_l1 = mean |fake - target|; gen_total = gen_adv + lambda_l1*gen_l1,
// built as add(gen_adv, scale(gen_l1, lambda)) so the logged decomposition
// identity is exact in double arithmetic.
GanLosses gan_losses(const Tensor& d_real_logits, const Tensor& d_fake_logits,
                     const Tensor& fake, const Tensor& target,
                     double lambda_l1);

// Alternating per-batch updates: discriminator step, then generator step,
// one LossLog row per iteration. Batch order reshuffles each epoch from the
// config seed. A non-finite logged loss raises NumericalError naming the
// iteration. When checkpoint_path is non-empty the final generator and
// discriminator states (weights plus batch-norm running stats) are written
// there.
std::pair<GeneratorNet, LossLog> train_gan(
    const std::vector<std::pair<FusedLabel, ImageBuffer>>& dataset,
    const GanConfig& cfg, const std::string& checkpoint_path = "");

// Eval-mode generator pass per label, decoded to 8-bit; deterministic.
std::vector<ImageBuffer> synthesize(GeneratorNet& g,
                                    const std::vector<FusedLabel>& labels);

// Element i = mean of the last min(i+1, window) values.
std::vector<double> moving_average(const std::vector<double>& values,
                                   int window);

// CSV export: header `iter,gen_total,gen_adv,gen_l1,disc`, one row per
// iteration; the smoothed variant applies moving_average per column.
std::string loss_csv(const LossLog& log);
std::string loss_csv_smoothed(const LossLog& log, int window = 50);

// Checkpoint I/O for both nets; loading rebuilds the architecture from the
// config and fails with CheckpointError on any missing or mismatched record.
void save_gan(const std::string& path, GeneratorNet& g, DiscriminatorNet& d);
GeneratorNet load_generator(const std::string& path, const GanConfig& cfg);

}  // namespace edgesynth
