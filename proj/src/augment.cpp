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

#include "edgesynth/augment.hpp"

#include <cmath>

namespace edgesynth {

std::vector<FusedLabel> replica_g0(const std::vector<FusedLabel>& fused_labels) {
  if (fused_labels.empty()) {
    throw EmptyDatasetError("replica augmentation over an empty label set");
  }
  return fused_labels;
}

ShapeTransform sample_transform(Rng& rng, int block) {
  if (block < 1) throw ConfigError("block must be positive");
  ShapeTransform t;
  t.rotation = static_cast<int>(rng.uniform_int(0, 3)) * 90;
  t.reflect_x = rng.coin();
  t.upscale = rng.uniform(1.0, 1.25);
  // Upscaled extent before cropping; rotation keeps the map square.
  const int up = static_cast<int>(
      std::floor(static_cast<double>(block) * t.upscale));
  const int slack = up - block;
  t.crop_row = slack > 0 ? static_cast<int>(rng.uniform_int(0, slack)) : 0;
  t.crop_col = slack > 0 ? static_cast<int>(rng.uniform_int(0, slack)) : 0;
  return t;
}

namespace {

// Clockwise rotation by 90-degree steps: out(r,c) = in(N-1-c, r) per step.
FusedLabel rotate_cw(const FusedLabel& in, int steps) {
  FusedLabel cur = in;
  for (int s = 0; s < steps; ++s) {
    FusedLabel next(cur.height, cur.width);
    for (int r = 0; r < next.height; ++r) {
      for (int c = 0; c < next.width; ++c) {
        next.at(r, c) = cur.at(cur.height - 1 - c, r);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

FusedLabel reflect_lr(const FusedLabel& in) {
  FusedLabel out(in.width, in.height);
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      out.at(r, c) = in.at(r, in.width - 1 - c);
    }
  }
  return out;
}

}  // namespace

FusedLabel apply_transform(const FusedLabel& label, const ShapeTransform& t,
                           int block) {
  if (label.width != block || label.height != block) {
    throw ShapeError("apply_transform expects a block x block label");
  }
  if (t.rotation % 90 != 0 || t.rotation < 0 || t.rotation >= 360) {
    throw ConfigError("rotation must be one of {0,90,180,270}");
  }
  if (t.upscale < 1.0 || t.upscale > 1.5) {
    throw ConfigError("upscale must lie in [1.0, 1.5]");
  }

  FusedLabel cur = rotate_cw(label, t.rotation / 90);
  if (t.reflect_x) cur = reflect_lr(cur);

  const int up = static_cast<int>(
      std::floor(static_cast<double>(block) * t.upscale));
  if (up != block) {
    const ImageBuffer big =
        resize(cur.to_image(), up, up, ResizeMethod::Nearest);
    cur = FusedLabel::from_image(big);
  }
  if (t.crop_row < 0 || t.crop_col < 0 || t.crop_row + block > cur.height ||
      t.crop_col + block > cur.width) {
    throw ShapeError("crop window does not fit in the upscaled label");
  }
  FusedLabel out(block, block);
  for (int r = 0; r < block; ++r) {
    for (int c = 0; c < block; ++c) {
      out.at(r, c) = cur.at(t.crop_row + r, t.crop_col + c);
    }
  }
  return out;
}

LabelMask derive_mask(const FusedLabel& fused, bool edge_to_roi) {
  LabelMask m(fused.width, fused.height);
  for (size_t i = 0; i < fused.v.size(); ++i) {
    const uint8_t p = fused.v[i];
    if (p == 128 || (edge_to_roi && p == 255)) {
      m.v[i] = 255;
    } else {
      m.v[i] = 0;
    }
  }
  return m;
}

}  // namespace edgesynth
