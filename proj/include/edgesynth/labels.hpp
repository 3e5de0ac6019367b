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
#include <vector>

#include "edgesynth/edges.hpp"
#include "edgesynth/image.hpp"

namespace edgesynth {

// 2-class label raster: 0 = background, 255 = nuclei ROI.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> v;

  LabelMask() = default;
  LabelMask(int w, int h)
      : width(w), height(h), v(static_cast<size_t>(w) * h, 0) {}
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * width + x]; }
  ImageBuffer to_image() const;
  static LabelMask from_image(const ImageBuffer& img);  // values must be {0,255}
};

// 3-class label raster: 0 = background, 128 = ROI, 255 = structure edge.
struct FusedLabel {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> v;

  FusedLabel() = default;
  FusedLabel(int w, int h)
      : width(w), height(h), v(static_cast<size_t>(w) * h, 0) {}
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * width + x]; }
  ImageBuffer to_image() const;
  static FusedLabel from_image(const ImageBuffer& img);  // values {0,128,255}
};

// Per-class positive weights indexed by class id.
using ClassWeights = std::vector<double>;

// Per pixel: edge 255 wins, else ROI mask 255 becomes 128, else background.
FusedLabel fuse(const LabelMask& mask, const EdgeMap& edges);

// weight_k = median(counts) / counts_k; the median of an even-length list is
// the mean of its two middle values. A zero count has no defined weight.
ClassWeights class_weights(const std::vector<int64_t>& pixel_counts);

// {0,255} -> {0,1} and {0,128,255} -> {0,1,2}, with exact inverses.
std::vector<int> encode_classes(const LabelMask& mask);
std::vector<int> encode_classes(const FusedLabel& fused);
LabelMask decode_mask(const std::vector<int>& classes, int width, int height);
FusedLabel decode_fused(const std::vector<int>& classes, int width, int height);

// Exact per-class counts summed over the list.
std::vector<int64_t> count_pixels(const std::vector<std::vector<int>>& maps,
                                  int num_classes);

}  // namespace edgesynth
