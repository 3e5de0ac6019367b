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
#include <string>
#include <utility>
#include <vector>

#include "edgesynth/labels.hpp"

namespace edgesynth {

// K x K pixel counts; entry (g, p) counts ground-truth class g predicted as
// class p. Accumulation across images is entrywise addition.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<int64_t> counts;  // row-major [g * K + p]

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int k)
      : num_classes(k),
        counts(static_cast<size_t>(k) * static_cast<size_t>(k), 0) {}
  int64_t at(int g, int p) const {
    return counts[static_cast<size_t>(g) * num_classes + p];
  }
  int64_t& at(int g, int p) {
    return counts[static_cast<size_t>(g) * num_classes + p];
  }
  int64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
};

ConfusionMatrix confusion(const std::vector<int>& gt,
                          const std::vector<int>& pred, int num_classes);

// Everything in [0,1]. 0/0 ratios resolve to 0 (except BF's both-empty
// convention, handled in bf_score). bf is filled by callers that have the
// per-image rasters; metrics() leaves it sized K and zeroed.
struct MetricReport {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<double> iou;
  double mean_iou = 0.0;
  std::vector<double> bf;
};

MetricReport metrics(const ConfusionMatrix& cm);

// Default matching tolerance: 0.75% of the image diagonal, rounded up, at
// least one pixel.
double bf_default_tolerance(int width, int height);

// Boundary F1 for one class on one image pair. Boundary pixels are class-k
// pixels 4-adjacent to another class or to the image border. Both boundaries
// empty -> 1.0; exactly one empty -> 0.0.
double bf_score(const std::vector<int>& gt, const std::vector<int>& pred,
                int width, int height, int cls, double tolerance);

// Confusion overlay, foreground = ROI: TP white, FP green (over
// precision), FN magenta (less recall), TN black.
ImageBuffer overlay(const LabelMask& gt, const LabelMask& pred);

// Run comparison CSV: one row per run plus per-column delta rows against
// the mandatory `initial` run. Columns: architecture, augmented dataset,
// then precision/recall/F1-score/IoU per class (ROI first, then backgrd),
// then mean IoU.
std::string compare_runs(
    const std::string& architecture,
    const std::vector<std::pair<std::string, MetricReport>>& reports);

}  // namespace edgesynth
