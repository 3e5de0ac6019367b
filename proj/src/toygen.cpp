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

#include "edgesynth/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "edgesynth/errors.hpp"
#include "edgesynth/rng.hpp"

namespace edgesynth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinFg = 0.10;
constexpr double kMaxFg = 0.45;
constexpr int kMaxRedraws = 1000;

struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;   // semi-major axis
  double b = 1.0;   // semi-minor axis
  double cos_t = 1.0;
  double sin_t = 0.0;
  int shade = 0;    // per-nucleus brightness offset

  bool contains(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = (dx * cos_t + dy * sin_t) / a;
    const double v = (-dx * sin_t + dy * cos_t) / b;
    return u * u + v * v <= 1.0;
  }
};

uint8_t clamp_u8(int v) {
  return static_cast<uint8_t>(std::clamp(v, 0, 255));
}

std::vector<Ellipse> draw_scene(const ToySpec& spec, Rng& rng) {
  const int n = static_cast<int>(
      rng.uniform_int(spec.min_nuclei, spec.max_nuclei));
  std::vector<Ellipse> scene(static_cast<size_t>(n));
  for (Ellipse& e : scene) {
    e.cx = rng.uniform(0.0, static_cast<double>(spec.size - 1));
    e.cy = rng.uniform(0.0, static_cast<double>(spec.size - 1));
    e.a = rng.uniform(spec.min_radius, spec.max_radius);
    e.b = e.a * rng.uniform(0.6, 1.0);
    const double theta = rng.uniform(0.0, kPi);
    e.cos_t = std::cos(theta);
    e.sin_t = std::sin(theta);
    e.shade = static_cast<int>(rng.uniform_int(-25, 25));
  }
  return scene;
}

double fg_fraction(const ToySpec& spec, const std::vector<Ellipse>& scene) {
  int64_t fg = 0;
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      for (const Ellipse& e : scene) {
        if (e.contains(x, y)) {
          ++fg;
          break;
        }
      }
    }
  }
  return static_cast<double>(fg) /
         (static_cast<double>(spec.size) * spec.size);
}

}  // namespace

std::pair<ImageBuffer, LabelMask> render_toy_sample(const ToySpec& spec,
                                                    uint64_t sample_index) {
  if (spec.size < 2) throw ConfigError("toy image size must be at least 2");
  if (spec.min_nuclei < 1 || spec.max_nuclei < spec.min_nuclei) {
    throw ConfigError("toy nuclei count range is empty");
  }
  if (spec.min_radius <= 0.0 || spec.max_radius < spec.min_radius) {
    throw ConfigError("toy radius range is empty");
  }

  Rng rng(Rng::mix(spec.seed, sample_index));
  std::vector<Ellipse> scene;
  bool accepted = false;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    scene = draw_scene(spec, rng);
    const double fg = fg_fraction(spec, scene);
    if (fg >= kMinFg && fg <= kMaxFg) {
      accepted = true;
      break;
    }
  }
  if (!accepted) {
    throw ConfigError(
        "toy scene never reached a foreground fraction inside [0.10, 0.45]; "
        "check the nuclei and radius ranges against the image size");
  }

  ImageBuffer img(spec.size, spec.size, 3);
  LabelMask mask(spec.size, spec.size);
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      const Ellipse* hit = nullptr;
      for (const Ellipse& e : scene) {
        if (e.contains(x, y)) {
          hit = &e;
          break;
        }
      }
      const int noise = static_cast<int>(rng.uniform_int(-8, 8));
      if (hit != nullptr) {
        mask.at(y, x) = 255;
        img.at(y, x, 0) = clamp_u8(90 + hit->shade + noise);
        img.at(y, x, 1) = clamp_u8(60 + hit->shade + noise);
        img.at(y, x, 2) = clamp_u8(140 + hit->shade + noise);
      } else {
        img.at(y, x, 0) = clamp_u8(230 + noise);
        img.at(y, x, 1) = clamp_u8(205 + noise);
        img.at(y, x, 2) = clamp_u8(215 + noise);
      }
    }
  }
  return {std::move(img), std::move(mask)};
}

}  // namespace edgesynth
