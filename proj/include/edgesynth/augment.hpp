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

#include <vector>

#include "edgesynth/labels.hpp"
#include "edgesynth/rng.hpp"

namespace edgesynth {

// One sampled shape augmentation: rotate (clockwise), reflect along x
// (left-right flip), upscale by a nearest-neighbor resize, then crop back to
// block x block.
struct ShapeTransform {
  int rotation = 0;        // degrees, one of {0, 90, 180, 270}
  bool reflect_x = false;
  double upscale = 1.0;    // in [1.0, 1.25]
  int crop_row = 0;        // top-left of the crop window in the upscaled map
  int crop_col = 0;
};

// Replica augmentation (G0): the labels pass through unchanged, image
// synthesis happens downstream in the GAN.
std::vector<FusedLabel> replica_g0(const std::vector<FusedLabel>& fused_labels);

// rotation uniform over {0,90,180,270}; reflect_x fair coin; upscale uniform
// in [1.0, 1.25]; crop origin uniform over positions where a block x block
// window fits inside the upscaled map.
ShapeTransform sample_transform(Rng& rng, int block);

// rotate -> reflect -> upscale (nearest) -> crop. Nearest-neighbor keeps the
// output closed over {0,128,255}.
FusedLabel apply_transform(const FusedLabel& label, const ShapeTransform& t,
                           int block);

// ROI(128) -> 255; edge(255) and background -> 0. With edge_to_roi, edge
// pixels count as ROI instead.
LabelMask derive_mask(const FusedLabel& fused, bool edge_to_roi = false);

}  // namespace edgesynth
