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

#include "edgesynth/edges.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace edgesynth {

ImageBuffer EdgeMap::to_image() const {
  ImageBuffer img(width, height, 1);
  img.pixels.assign(v.begin(), v.end());
  return img;
}

EdgeMap EdgeMap::from_image(const ImageBuffer& img) {
  if (img.channels != 1) throw ShapeError("edge map must be single-channel");
  EdgeMap e(img.width, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const uint8_t p = img.pixels[i];
    if (p != 0 && p != 255) {
      throw LabelRangeError("edge map pixel value " + std::to_string(p) +
                            " not in {0,255}");
    }
    e.v[i] = p;
  }
  return e;
}

namespace {

// reflect-101 index: ...3 2 1 | 0 1 2 3 | 2 1 0...
inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

FloatMap convolve_rows(const FloatMap& src, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  FloatMap out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) {
        acc += k[static_cast<size_t>(t + r)] *
               src.at(y, reflect101(x + t, src.width));
      }
      out.at(y, x) = acc;
    }
  }
  return out;
}

FloatMap convolve_cols(const FloatMap& src, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  FloatMap out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) {
        acc += k[static_cast<size_t>(t + r)] *
               src.at(reflect101(y + t, src.height), x);
      }
      out.at(y, x) = acc;
    }
  }
  return out;
}

// 3x3 correlation with reflect-101 borders.
FloatMap correlate3(const FloatMap& src, const double k[3][3]) {
  FloatMap out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = reflect101(y + dy, src.height);
        for (int dx = -1; dx <= 1; ++dx) {
          acc += k[dy + 1][dx + 1] * src.at(yy, reflect101(x + dx, src.width));
        }
      }
      out.at(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<size_t>(2 * r + 1));
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) {
    const double v = std::exp(-(t * t) / (2.0 * sigma * sigma));
    k[static_cast<size_t>(t + r)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

FloatMap gaussian_blur(const FloatMap& src, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  return convolve_cols(convolve_rows(src, k), k);
}

FloatMap gaussian_blur(const ImageBuffer& gray, double sigma) {
  if (gray.channels != 1) {
    throw ShapeError("gaussian_blur expects a single-channel image");
  }
  FloatMap src(gray.width, gray.height);
  for (size_t i = 0; i < gray.pixels.size(); ++i) {
    src.v[i] = static_cast<double>(gray.pixels[i]);
  }
  return gaussian_blur(src, sigma);
}

GradientField gradient(const FloatMap& smoothed, GradOp op) {
  if (smoothed.width < 2 || smoothed.height < 2) {
    throw ShapeError("gradient needs at least a 2x2 image");
  }
  GradientField f;
  if (op == GradOp::Roberts) {
    // 2x2 kernels anchored at (y,x): gx = I(y,x) - I(y+1,x+1),
    // gy = I(y,x+1) - I(y+1,x); reflect-101 past the bottom/right edge.
    f.gx = FloatMap(smoothed.width, smoothed.height);
    f.gy = FloatMap(smoothed.width, smoothed.height);
    for (int y = 0; y < smoothed.height; ++y) {
      const int y1 = reflect101(y + 1, smoothed.height);
      for (int x = 0; x < smoothed.width; ++x) {
        const int x1 = reflect101(x + 1, smoothed.width);
        f.gx.at(y, x) = smoothed.at(y, x) - smoothed.at(y1, x1);
        f.gy.at(y, x) = smoothed.at(y, x1) - smoothed.at(y1, x);
      }
    }
  } else {
    static const double sobel_x[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static const double sobel_y[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    static const double prewitt_x[3][3] = {{-1, 0, 1}, {-1, 0, 1}, {-1, 0, 1}};
    static const double prewitt_y[3][3] = {{-1, -1, -1}, {0, 0, 0}, {1, 1, 1}};
    const bool sob = op == GradOp::Sobel;
    f.gx = correlate3(smoothed, sob ? sobel_x : prewitt_x);
    f.gy = correlate3(smoothed, sob ? sobel_y : prewitt_y);
  }
  f.magnitude = FloatMap(smoothed.width, smoothed.height);
  f.direction = FloatMap(smoothed.width, smoothed.height);
  for (size_t i = 0; i < f.magnitude.v.size(); ++i) {
    f.magnitude.v[i] = std::hypot(f.gx.v[i], f.gy.v[i]);
    f.direction.v[i] = std::atan2(f.gy.v[i], f.gx.v[i]);
  }
  return f;
}

FloatMap non_max_suppression(const GradientField& field) {
  const int W = field.magnitude.width, H = field.magnitude.height;
  FloatMap out(W, H);
  auto mag_at = [&](int y, int x) -> double {
    if (y < 0 || y >= H || x < 0 || x >= W) return 0.0;
    return field.magnitude.at(y, x);
  };
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double m = field.magnitude.at(y, x);
      if (m == 0.0) continue;
      // Quantize direction (mod 180 deg) into 4 bins.
      double deg = field.direction.at(y, x) * 180.0 / M_PI;
      if (deg < 0.0) deg += 180.0;
      int dy1, dx1, dy2, dx2;
      if (deg < 22.5 || deg >= 157.5) {  // 0 deg: gradient along x
        dy1 = 0; dx1 = 1; dy2 = 0; dx2 = -1;
      } else if (deg < 67.5) {  // 45 deg: gradient down-right (y axis down)
        dy1 = 1; dx1 = 1; dy2 = -1; dx2 = -1;
      } else if (deg < 112.5) {  // 90 deg: gradient along y
        dy1 = 1; dx1 = 0; dy2 = -1; dx2 = 0;
      } else {  // 135 deg: gradient down-left
        dy1 = 1; dx1 = -1; dy2 = -1; dx2 = 1;
      }
      if (m >= mag_at(y + dy1, x + dx1) && m >= mag_at(y + dy2, x + dx2)) {
        out.at(y, x) = m;
      }
    }
  }
  return out;
}

EdgeMap hysteresis(const FloatMap& nms, double high, double low) {
  if (!(low >= 0.0) || !(low < high)) {
    throw ConfigError("hysteresis needs 0 <= low < high");
  }
  const int W = nms.width, H = nms.height;
  EdgeMap out(W, H);
  std::deque<std::pair<int, int>> frontier;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (nms.at(y, x) >= high) {
        out.at(y, x) = 255;
        frontier.emplace_back(y, x);
      }
    }
  }
  while (!frontier.empty()) {
    const auto [y, x] = frontier.front();
    frontier.pop_front();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dy == 0 && dx == 0) continue;
        const int yy = y + dy, xx = x + dx;
        if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
        if (out.at(yy, xx) == 255) continue;
        if (nms.at(yy, xx) >= low) {
          out.at(yy, xx) = 255;
          frontier.emplace_back(yy, xx);
        }
      }
    }
  }
  return out;
}

EdgeMap canny(const ImageBuffer& gray, const CannyParams& params) {
  if (!(params.sigma > 0.0) || !(params.high_quantile > 0.0) ||
      !(params.high_quantile < 1.0) || !(params.low_ratio > 0.0) ||
      !(params.low_ratio < 1.0)) {
    throw ConfigError("invalid canny parameters");
  }
  const FloatMap smoothed = gaussian_blur(gray, params.sigma);
  const GradientField field = gradient(smoothed, GradOp::Sobel);
  const FloatMap nms = non_max_suppression(field);

  // Float residue from the separable blur leaves ~1e-15 magnitudes in flat
  // regions; counting those as "nonzero" would drag the quantile into noise.
  // The relative floor handles images with real structure; the absolute
  // floor handles fully flat images, where the peak itself is residue. Any
  // genuine gradient of 8-bit input is far above 1e-6.
  double peak = 0.0;
  for (double m : nms.v) peak = std::max(peak, m);
  const double floor_mag = std::max(peak * 1e-9, 1e-6);
  std::vector<double> nz;
  nz.reserve(nms.v.size());
  for (double m : nms.v) {
    if (m > floor_mag) nz.push_back(m);
  }
  if (nz.empty()) return EdgeMap(gray.width, gray.height);
  std::sort(nz.begin(), nz.end());
  // Nearest-rank quantile: smallest value with at least q*n values <= it.
  const size_t n = nz.size();
  size_t rank = static_cast<size_t>(
      std::ceil(params.high_quantile * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  const double high = nz[rank - 1];
  const double low = params.low_ratio * high;
  return hysteresis(nms, high, low);
}

}  // namespace edgesynth
