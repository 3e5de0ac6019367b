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

#include "edgesynth/metrics.hpp"

#include <cmath>
#include <sstream>

namespace edgesynth {

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t c : counts) t += c;
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  if (num_classes != o.num_classes) {
    throw ShapeError("confusion matrices have different class counts");
  }
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  return *this;
}

ConfusionMatrix confusion(const std::vector<int>& gt,
                          const std::vector<int>& pred, int num_classes) {
  if (gt.size() != pred.size()) {
    throw ShapeError("ground truth and prediction sizes differ");
  }
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  ConfusionMatrix cm(num_classes);
  for (size_t i = 0; i < gt.size(); ++i) {
    const int g = gt[i], p = pred[i];
    if (g < 0 || g >= num_classes || p < 0 || p >= num_classes) {
      throw LabelRangeError("class id outside [0," +
                            std::to_string(num_classes) + ")");
    }
    ++cm.at(g, p);
  }
  return cm;
}

namespace {

inline double ratio(int64_t num, int64_t den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

MetricReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw ShapeError("confusion matrix is empty");
  const int K = cm.num_classes;
  MetricReport r;
  r.precision.resize(K);
  r.recall.resize(K);
  r.f1.resize(K);
  r.iou.resize(K);
  r.bf.assign(static_cast<size_t>(K), 0.0);
  double iou_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const int64_t tp = cm.at(k, k);
    int64_t rowsum = 0, colsum = 0;
    for (int j = 0; j < K; ++j) {
      rowsum += cm.at(k, j);
      colsum += cm.at(j, k);
    }
    const int64_t fp = colsum - tp;
    const int64_t fn = rowsum - tp;
    const double p = ratio(tp, tp + fp);
    const double rc = ratio(tp, tp + fn);
    r.precision[k] = p;
    r.recall[k] = rc;
    r.f1[k] = (p + rc) > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
    r.iou[k] = ratio(tp, tp + fp + fn);
    iou_sum += r.iou[k];
  }
  r.mean_iou = iou_sum / static_cast<double>(K);
  return r;
}

double bf_default_tolerance(int width, int height) {
  const double diag = std::sqrt(static_cast<double>(width) * width +
                                static_cast<double>(height) * height);
  return std::max(1.0, std::ceil(0.0075 * diag));
}

namespace {

std::vector<uint8_t> boundary_raster(const std::vector<int>& lab, int w, int h,
                                     int cls) {
  std::vector<uint8_t> b(static_cast<size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (lab[i] != cls) continue;
      const bool border = y == 0 || y == h - 1 || x == 0 || x == w - 1;
      if (border || lab[i - w] != cls || lab[i + w] != cls || lab[i - 1] != cls ||
          lab[i + 1] != cls) {
        b[i] = 1;
      }
    }
  }
  return b;
}

// Fraction of marked pixels in `from` within Euclidean distance `tol` of a
// marked pixel in `to`; scans a (2t+1)^2 window per pixel.
double matched_fraction(const std::vector<uint8_t>& from,
                        const std::vector<uint8_t>& to, int w, int h,
                        double tol) {
  const int t = static_cast<int>(std::floor(tol));
  const double tol2 = tol * tol;
  int64_t total = 0, hit = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!from[static_cast<size_t>(y) * w + x]) continue;
      ++total;
      bool found = false;
      for (int dy = -t; dy <= t && !found; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -t; dx <= t; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          if (static_cast<double>(dy) * dy + static_cast<double>(dx) * dx >
              tol2) {
            continue;
          }
          if (to[static_cast<size_t>(yy) * w + xx]) {
            found = true;
            break;
          }
        }
      }
      if (found) ++hit;
    }
  }
  return total > 0 ? static_cast<double>(hit) / static_cast<double>(total)
                   : -1.0;  // -1 marks an empty boundary
}

}  // namespace

double bf_score(const std::vector<int>& gt, const std::vector<int>& pred,
                int width, int height, int cls, double tolerance) {
  if (gt.size() != pred.size() ||
      gt.size() != static_cast<size_t>(width) * height) {
    throw ShapeError("bf_score inputs disagree on extents");
  }
  const auto bg = boundary_raster(gt, width, height, cls);
  const auto bp = boundary_raster(pred, width, height, cls);
  const double prec = matched_fraction(bp, bg, width, height, tolerance);
  const double rec = matched_fraction(bg, bp, width, height, tolerance);
  if (prec < 0.0 && rec < 0.0) return 1.0;  // both boundaries empty
  if (prec < 0.0 || rec < 0.0) return 0.0;  // exactly one empty
  if (prec + rec == 0.0) return 0.0;
  return 2.0 * prec * rec / (prec + rec);
}

ImageBuffer overlay(const LabelMask& gt, const LabelMask& pred) {
  if (gt.width != pred.width || gt.height != pred.height) {
    throw ShapeError("overlay extents differ");
  }
  ImageBuffer out(gt.width, gt.height, 3);
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      const bool g = gt.at(y, x) == 255;
      const bool p = pred.at(y, x) == 255;
      uint8_t r, gr, b;
      if (g && p) {        // true positive
        r = gr = b = 255;
      } else if (!g && p) {  // false positive: over precision
        r = 0; gr = 255; b = 0;
      } else if (g && !p) {  // false negative: less recall
        r = 255; gr = 0; b = 255;
      } else {
        r = gr = b = 0;
      }
      out.at(y, x, 0) = r;
      out.at(y, x, 1) = gr;
      out.at(y, x, 2) = b;
    }
  }
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string compare_runs(
    const std::string& architecture,
    const std::vector<std::pair<std::string, MetricReport>>& reports) {
  if (reports.size() < 2) {
    throw ConfigError("compare_runs needs at least two runs");
  }
  const MetricReport* initial = nullptr;
  for (const auto& [name, rep] : reports) {
    if (name == "initial") initial = &rep;
  }
  if (!initial) {
    throw ConfigError("compare_runs requires a run named 'initial'");
  }
  const int K = static_cast<int>(initial->precision.size());
  if (K != 2) {
    throw ConfigError("comparison table expects the 2-class task");
  }
  // Class order follows the table: ROI (class 1) first, then backgrd (0).
  const int order[2] = {1, 0};
  const char* cls_name[2] = {"ROI", "backgrd"};

  std::ostringstream os;
  os << "architecture,augmented dataset";
  for (const char* m : {"precision", "recall", "F1-score", "IoU"}) {
    for (int c = 0; c < 2; ++c) os << "," << m << " " << cls_name[c];
  }
  os << ",mean IoU\n";

  auto values = [&](const MetricReport& r) {
    std::vector<double> v;
    for (const auto* field : {&r.precision, &r.recall, &r.f1, &r.iou}) {
      for (int c = 0; c < 2; ++c) v.push_back((*field)[order[c]]);
    }
    v.push_back(r.mean_iou);
    return v;
  };

  for (const auto& [name, rep] : reports) {
    os << architecture << "," << name;
    for (double v : values(rep)) os << "," << fmt(v);
    os << "\n";
  }
  const std::vector<double> base = values(*initial);
  for (const auto& [name, rep] : reports) {
    if (name == "initial") continue;
    os << architecture << ",delta(" << name << ")";
    const std::vector<double> v = values(rep);
    for (size_t i = 0; i < v.size(); ++i) os << "," << fmt(v[i] - base[i]);
    os << "\n";
  }
  return os.str();
}

}  // namespace edgesynth
