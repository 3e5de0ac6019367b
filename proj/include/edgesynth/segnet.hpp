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
#include <utility>
#include <vector>

#include "edgesynth/image.hpp"
#include "edgesynth/labels.hpp"
#include "edgesynth/nn.hpp"

namespace edgesynth {

struct SegConfig {
  int input_size = 64;
  int depth = 3;       // pooling stages; input_size must divide by 2^depth
  int base_width = 16;
  int epochs = 300;
  int batch_size = 4;
  double lr = 1e-3;
  ClassWeights class_weights;  // empty = uniform over the 2 classes
  uint64_t seed = 0;
};

// Small U-Net for the 2-class task: conv-bn-relu blocks with max-pool
// downs, nearest-upsample + skip-concat ups, 1x1 logit head.
struct SegNetToy {
  static constexpr int kClasses = 2;

  int input_size = 0;
  int depth = 0;
  std::vector<Conv2dLayer> enc;
  std::vector<BatchNorm2dLayer> enc_bn;
  Conv2dLayer mid;
  BatchNorm2dLayer mid_bn;
  std::vector<Conv2dLayer> dec;
  std::vector<BatchNorm2dLayer> dec_bn;
  Conv2dLayer head;

  SegNetToy() = default;
  SegNetToy(const SegConfig& cfg, Rng& rng);
  // x: [N,3,S,S] in [-1,1]; returns logits [N,2,S,S].
  Tensor forward(const Tensor& x, BnMode mode);
  std::vector<Parameter*> params();
};

// Per-iteration weighted cross-entropy values.
using SegLossLog = std::vector<double>;

// [N,3,S,S] slab in [-1,1] from 3-channel images (batch helper shared with
// predict).
Tensor seg_inputs(const std::vector<const ImageBuffer*>& imgs, int size);

// Minimizes weighted_softmax_ce over shuffled batches; deterministic under
// cfg.seed. A non-finite loss raises NumericalError naming the iteration.
// Non-empty checkpoint_path receives the final weights and batch-norm
// running stats.
std::pair<SegNetToy, SegLossLog> train_seg(
    const std::vector<std::pair<ImageBuffer, LabelMask>>& dataset,
    const SegConfig& cfg, const std::string& checkpoint_path = "");

// Eval-mode forward, per-pixel argmax; ties resolve to the lower class id.
LabelMask predict(SegNetToy& net, const ImageBuffer& image);

// CSV with header `iter,loss`.
std::string seg_loss_csv(const SegLossLog& log);

void save_segnet(const std::string& path, SegNetToy& net);
SegNetToy load_segnet(const std::string& path, const SegConfig& cfg);

}  // namespace edgesynth
