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
#include <utility>

#include "edgesynth/image.hpp"
#include "edgesynth/labels.hpp"

namespace edgesynth {

// Desk-scale stand-in for stained tissue crops: noisy pink background with
// dark blue-violet elliptical nuclei, plus the exact matching mask.
struct ToySpec {
  int count = 12;       // training images
  int test_count = 4;   // held-out test images
  int size = 64;
  int min_nuclei = 3;
  int max_nuclei = 8;
  double min_radius = 5.0;
  double max_radius = 12.0;
  uint64_t seed = 0;
};

// Renders one image/mask pair. The mask marks exactly the pixels whose
// centers fall inside the union of the drawn ellipses, and the nuclei
// foreground fraction is kept inside [0.10, 0.45] by redrawing the scene.
std::pair<ImageBuffer, LabelMask> render_toy_sample(const ToySpec& spec,
                                                    uint64_t sample_index);

}  // namespace edgesynth
