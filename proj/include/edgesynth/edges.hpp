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

#include "edgesynth/image.hpp"

namespace edgesynth {

// Dense H x W map of doubles used between Canny stages.
struct FloatMap {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  FloatMap() = default;
  FloatMap(int w, int h, double fill = 0.0)
      : width(w), height(h),
        v(static_cast<size_t>(w) * h, fill) {}
  double at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
  double& at(int y, int x) { return v[static_cast<size_t>(y) * width + x]; }
};

struct GradientField {
  FloatMap gx;
  FloatMap gy;
  FloatMap magnitude;  // sqrt(gx^2 + gy^2)
  FloatMap direction;  // atan2(gy, gx), radians in (-pi, pi]
};

// Binary edge raster, values 0 or 255.
struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> v;

  EdgeMap() = default;
  EdgeMap(int w, int h)
      : width(w), height(h), v(static_cast<size_t>(w) * h, 0) {}
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * width + x]; }
  ImageBuffer to_image() const;
  static EdgeMap from_image(const ImageBuffer& img);  // values must be {0,255}
};

struct CannyParams {
  double sigma = 1.0;
  double high_quantile = 0.90;  // of nonzero NMS magnitudes
  double low_ratio = 0.4;       // low = low_ratio * high
};

enum class GradOp { Sobel, Prewitt, Roberts };

// Separable Gaussian, kernel radius ceil(3*sigma), weights normalized to sum
// 1, reflect-101 borders.
FloatMap gaussian_blur(const ImageBuffer& gray, double sigma);
FloatMap gaussian_blur(const FloatMap& src, double sigma);

// Kernel weights (for tests and documentation): one row of the normalized
// blur kernel, length 2*ceil(3*sigma)+1.
std::vector<double> gaussian_kernel(double sigma);

// Standard 3x3 Sobel/Prewitt or 2x2 Roberts kernels, reflect-101 borders.
GradientField gradient(const FloatMap& smoothed, GradOp op);

// Direction quantized to 4 bins (0, 45, 90, 135 degrees); a pixel survives
// iff its magnitude is >= both neighbors along the bin direction.
FloatMap non_max_suppression(const GradientField& field);

// Pixels >= high are strong; pixels in [low, high) survive iff 8-connected
// (transitively) to a strong pixel.
EdgeMap hysteresis(const FloatMap& nms, double high, double low);

// blur -> gradient(sobel) -> nms -> hysteresis with the high threshold at
// the given empirical quantile of nonzero NMS magnitudes. An image with no
// nonzero gradient yields an empty map.
EdgeMap canny(const ImageBuffer& gray, const CannyParams& params);

}  // namespace edgesynth
