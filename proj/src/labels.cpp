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

#include "edgesynth/labels.hpp"

#include <algorithm>

namespace edgesynth {

ImageBuffer LabelMask::to_image() const {
  ImageBuffer img(width, height, 1);
  img.pixels.assign(v.begin(), v.end());
  return img;
}

LabelMask LabelMask::from_image(const ImageBuffer& img) {
  if (img.channels != 1) throw ShapeError("label mask must be single-channel");
  LabelMask m(img.width, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const uint8_t p = img.pixels[i];
    if (p != 0 && p != 255) {
      throw LabelRangeError("mask pixel value " + std::to_string(p) +
                            " not in {0,255}");
    }
    m.v[i] = p;
  }
  return m;
}

ImageBuffer FusedLabel::to_image() const {
  ImageBuffer img(width, height, 1);
  img.pixels.assign(v.begin(), v.end());
  return img;
}

FusedLabel FusedLabel::from_image(const ImageBuffer& img) {
  if (img.channels != 1) throw ShapeError("fused label must be single-channel");
  FusedLabel f(img.width, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const uint8_t p = img.pixels[i];
    if (p != 0 && p != 128 && p != 255) {
      throw LabelRangeError("fused label value " + std::to_string(p) +
                            " not in {0,128,255}");
    }
    f.v[i] = p;
  }
  return f;
}

FusedLabel fuse(const LabelMask& mask, const EdgeMap& edges) {
  if (mask.width != edges.width || mask.height != edges.height) {
    throw ShapeError("fuse: mask and edge extents differ");
  }
  FusedLabel out(mask.width, mask.height);
  for (size_t i = 0; i < out.v.size(); ++i) {
    if (edges.v[i] == 255) {
      out.v[i] = 255;
    } else if (mask.v[i] == 255) {
      out.v[i] = 128;
    } else {
      out.v[i] = 0;
    }
  }
  return out;
}

ClassWeights class_weights(const std::vector<int64_t>& pixel_counts) {
  if (pixel_counts.empty()) throw ZeroClassError("no classes given");
  for (size_t k = 0; k < pixel_counts.size(); ++k) {
    if (pixel_counts[k] <= 0) {
      throw ZeroClassError("class " + std::to_string(k) +
                           " has no pixels; weight undefined");
    }
  }
  std::vector<int64_t> sorted = pixel_counts;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  double median;
  if (n % 2 == 1) {
    median = static_cast<double>(sorted[n / 2]);
  } else {
    median = 0.5 * (static_cast<double>(sorted[n / 2 - 1]) +
                    static_cast<double>(sorted[n / 2]));
  }
  ClassWeights w(n);
  for (size_t k = 0; k < n; ++k) {
    w[k] = median / static_cast<double>(pixel_counts[k]);
  }
  return w;
}

std::vector<int> encode_classes(const LabelMask& mask) {
  std::vector<int> out(mask.v.size());
  for (size_t i = 0; i < mask.v.size(); ++i) {
    switch (mask.v[i]) {
      case 0: out[i] = 0; break;
      case 255: out[i] = 1; break;
      default:
        throw LabelRangeError("mask value " + std::to_string(mask.v[i]) +
                              " not in {0,255}");
    }
  }
  return out;
}

std::vector<int> encode_classes(const FusedLabel& fused) {
  std::vector<int> out(fused.v.size());
  for (size_t i = 0; i < fused.v.size(); ++i) {
    switch (fused.v[i]) {
      case 0: out[i] = 0; break;
      case 128: out[i] = 1; break;
      case 255: out[i] = 2; break;
      default:
        throw LabelRangeError("fused value " + std::to_string(fused.v[i]) +
                              " not in {0,128,255}");
    }
  }
  return out;
}

LabelMask decode_mask(const std::vector<int>& classes, int width, int height) {
  if (classes.size() != static_cast<size_t>(width) * height) {
    throw ShapeError("class map size does not match extents");
  }
  LabelMask m(width, height);
  for (size_t i = 0; i < classes.size(); ++i) {
    switch (classes[i]) {
      case 0: m.v[i] = 0; break;
      case 1: m.v[i] = 255; break;
      default:
        throw LabelRangeError("class id " + std::to_string(classes[i]) +
                              " not in {0,1}");
    }
  }
  return m;
}

FusedLabel decode_fused(const std::vector<int>& classes, int width, int height) {
  if (classes.size() != static_cast<size_t>(width) * height) {
    throw ShapeError("class map size does not match extents");
  }
  FusedLabel f(width, height);
  for (size_t i = 0; i < classes.size(); ++i) {
    switch (classes[i]) {
      case 0: f.v[i] = 0; break;
      case 1: f.v[i] = 128; break;
      case 2: f.v[i] = 255; break;
      default:
        throw LabelRangeError("class id " + std::to_string(classes[i]) +
                              " not in {0,1,2}");
    }
  }
  return f;
}

std::vector<int64_t> count_pixels(const std::vector<std::vector<int>>& maps,
                                  int num_classes) {
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  std::vector<int64_t> counts(static_cast<size_t>(num_classes), 0);
  for (const auto& m : maps) {
    for (int c : m) {
      if (c < 0 || c >= num_classes) {
        throw LabelRangeError("class id " + std::to_string(c) +
                              " outside [0," + std::to_string(num_classes) +
                              ")");
      }
      ++counts[static_cast<size_t>(c)];
    }
  }
  return counts;
}

}  // namespace edgesynth
