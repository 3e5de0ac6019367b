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

#include "edgesynth/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "edgesynth/checkpoint.hpp"
#include "edgesynth/errors.hpp"

namespace edgesynth {

namespace {

void check_config(const SegConfig& cfg) {
  if (cfg.depth < 1) throw ConfigError("seg depth must be >= 1");
  if (cfg.base_width < 1) throw ConfigError("seg base_width must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("seg epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("seg batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("seg lr must be > 0");
  if (cfg.input_size < (1 << cfg.depth) ||
      cfg.input_size % (1 << cfg.depth) != 0) {
    throw ConfigError("seg input_size must be a positive multiple of 2^depth");
  }
  if (!cfg.class_weights.empty() &&
      cfg.class_weights.size() != SegNetToy::kClasses) {
    throw ConfigError("seg class_weights must have one entry per class");
  }
}

ClassWeights effective_weights(const SegConfig& cfg) {
  if (!cfg.class_weights.empty()) return cfg.class_weights;
  return ClassWeights(SegNetToy::kClasses, 1.0);
}

std::vector<CheckpointRecord> net_records(SegNetToy& net) {
  std::vector<CheckpointRecord> recs;
  for (Parameter* p : net.params()) {
    const double* d0 = p->value.data();
    recs.push_back({p->name, p->value.shape(),
                    std::vector<double>(d0, d0 + p->value.numel())});
  }
  auto push_stats = [&recs](BatchNorm2dLayer& l) {
    if (!l.stats.initialized) return;
    const std::string base =
        l.gamma.name.substr(0, l.gamma.name.size() - 6);  // strip ".gamma"
    const int64_t c = static_cast<int64_t>(l.stats.mean.size());
    recs.push_back({base + ".running_mean", {c}, l.stats.mean});
    recs.push_back({base + ".running_var", {c}, l.stats.var});
  };
  for (auto& l : net.enc_bn) push_stats(l);
  push_stats(net.mid_bn);
  for (auto& l : net.dec_bn) push_stats(l);
  return recs;
}

}  // namespace

SegNetToy::SegNetToy(const SegConfig& cfg, Rng& rng) {
  check_config(cfg);
  input_size = cfg.input_size;
  depth = cfg.depth;
  const int64_t base = cfg.base_width;

  int64_t in_ch = 3;
  for (int i = 0; i < depth; ++i) {
    const int64_t out = base << i;
    enc.emplace_back("seg.enc" + std::to_string(i), in_ch, out, 3, 1, 1, rng);
    enc_bn.emplace_back("seg.enc_bn" + std::to_string(i), out);
    in_ch = out;
  }
  mid = Conv2dLayer("seg.mid", in_ch, in_ch, 3, 1, 1, rng);
  mid_bn = BatchNorm2dLayer("seg.mid_bn", in_ch);
  for (int j = depth - 1; j >= 0; --j) {
    const int64_t skip = base << j;
    const int64_t out = std::max<int64_t>(base, skip / 2);
    dec.emplace_back("seg.dec" + std::to_string(j), in_ch + skip, out, 3, 1, 1,
                     rng);
    dec_bn.emplace_back("seg.dec_bn" + std::to_string(j), out);
    in_ch = out;
  }
  head = Conv2dLayer("seg.head", in_ch, kClasses, 1, 1, 0, rng);
}

Tensor SegNetToy::forward(const Tensor& x, BnMode mode) {
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != input_size ||
      x.dim(3) != input_size) {
    throw ShapeError("segnet expects [N,3," + std::to_string(input_size) +
                     "," + std::to_string(input_size) + "], got " +
                     shape_str(x.shape()));
  }
  std::vector<Tensor> skips;
  Tensor h = x;
  for (int i = 0; i < depth; ++i) {
    h = enc[static_cast<size_t>(i)].forward(h);
    h = enc_bn[static_cast<size_t>(i)].forward(h, mode);
    h = relu(h);
    skips.push_back(h);
    h = max_pool2d(h, 2, 2);
  }
  h = mid.forward(h);
  h = mid_bn.forward(h, mode);
  h = relu(h);
  for (int k = 0; k < depth; ++k) {
    h = upsample_nearest(h, 2);
    h = concat_channels({h, skips[static_cast<size_t>(depth - 1 - k)]});
    h = dec[static_cast<size_t>(k)].forward(h);
    h = dec_bn[static_cast<size_t>(k)].forward(h, mode);
    h = relu(h);
  }
  return head.forward(h);
}

std::vector<Parameter*> SegNetToy::params() {
  std::vector<Parameter*> out;
  for (auto& l : enc) l.collect(out);
  for (auto& l : enc_bn) l.collect(out);
  mid.collect(out);
  mid_bn.collect(out);
  for (auto& l : dec) l.collect(out);
  for (auto& l : dec_bn) l.collect(out);
  head.collect(out);
  return out;
}

Tensor seg_inputs(const std::vector<const ImageBuffer*>& imgs, int size) {
  const int64_t B = static_cast<int64_t>(imgs.size());
  const int64_t S = size;
  std::vector<double> data(static_cast<size_t>(B) * 3 * S * S);
  for (int64_t n = 0; n < B; ++n) {
    const ImageBuffer& img = *imgs[static_cast<size_t>(n)];
    if (img.width != size || img.height != size || img.channels != 3) {
      throw ShapeError("seg inputs must be 3-channel " + std::to_string(size) +
                       "x" + std::to_string(size));
    }
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t y = 0; y < S; ++y)
        for (int64_t x = 0; x < S; ++x)
          data[static_cast<size_t>(((n * 3 + c) * S + y) * S + x)] =
              img.at(int(y), int(x), int(c)) / 127.5 - 1.0;
  }
  return Tensor::from_data({B, 3, S, S}, std::move(data));
}

std::pair<SegNetToy, SegLossLog> train_seg(
    const std::vector<std::pair<ImageBuffer, LabelMask>>& dataset,
    const SegConfig& cfg, const std::string& checkpoint_path) {
  check_config(cfg);
  if (dataset.empty()) throw EmptyDatasetError("seg training set is empty");
  const int S = cfg.input_size;
  for (const auto& [img, mask] : dataset) {
    if (img.width != S || img.height != S || img.channels != 3 ||
        mask.width != S || mask.height != S) {
      throw ShapeError("seg training pairs must be 3-channel " +
                       std::to_string(S) + "x" + std::to_string(S));
    }
  }
  const ClassWeights weights = effective_weights(cfg);

  Rng rng(cfg.seed);
  SegNetToy net(cfg, rng);
  auto params = net.params();

  SegLossLog log;
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), size_t{0});

  int64_t iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(0, int64_t(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (size_t start = 0; start < order.size();
         start += size_t(cfg.batch_size)) {
      const size_t stop = std::min(order.size(), start + size_t(cfg.batch_size));
      std::vector<const ImageBuffer*> imgs;
      std::vector<int> labels;
      for (size_t k = start; k < stop; ++k) {
        const auto& [img, mask] = dataset[order[k]];
        imgs.push_back(&img);
        const auto enc = encode_classes(mask);
        labels.insert(labels.end(), enc.begin(), enc.end());
      }
      const Tensor x = seg_inputs(imgs, S);
      Tensor logits = net.forward(x, BnMode::Train);
      Tensor loss = weighted_softmax_ce(logits, labels, weights);
      const double v = loss.item();
      if (!std::isfinite(v)) {
        // Weights still hold the last finite-loss update; keep them.
        if (!checkpoint_path.empty()) save_segnet(checkpoint_path, net);
        throw NumericalError("non-finite seg loss at iteration " +
                             std::to_string(iteration));
      }
      zero_grads(params);
      backward(loss);
      adam_step(params, cfg.lr, 0.9, 0.999, 1e-8);
      log.push_back(v);
      ++iteration;
    }
  }

  if (!checkpoint_path.empty()) save_segnet(checkpoint_path, net);
  return {std::move(net), std::move(log)};
}

LabelMask predict(SegNetToy& net, const ImageBuffer& image) {
  if (image.width != net.input_size || image.height != net.input_size ||
      image.channels != 3) {
    throw ShapeError("predict expects a 3-channel " +
                     std::to_string(net.input_size) + "x" +
                     std::to_string(net.input_size) + " image");
  }
  NoGradGuard guard;
  const Tensor x = seg_inputs({&image}, net.input_size);
  const Tensor logits = net.forward(x, BnMode::Eval);
  const int S = net.input_size;
  const double* d = logits.data();
  std::vector<int> cls(static_cast<size_t>(S) * S, 0);
  for (int64_t i = 0; i < int64_t(S) * S; ++i) {
    int best = 0;
    double best_v = d[i];
    for (int k = 1; k < SegNetToy::kClasses; ++k) {
      const double v = d[k * int64_t(S) * S + i];
      if (v > best_v) {
        best = k;
        best_v = v;
      }
    }
    cls[static_cast<size_t>(i)] = best;
  }
  return decode_mask(cls, S, S);
}

std::string seg_loss_csv(const SegLossLog& log) {
  std::string out = "iter,loss\n";
  char buf[64];
  for (size_t i = 0; i < log.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, log[i]);
    out += buf;
  }
  return out;
}

void save_segnet(const std::string& path, SegNetToy& net) {
  save_checkpoint(path, net_records(net));
}

SegNetToy load_segnet(const std::string& path, const SegConfig& cfg) {
  const auto records = load_checkpoint(path);
  std::map<std::string, const CheckpointRecord*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;

  Rng rng(cfg.seed);
  SegNetToy net(cfg, rng);
  for (Parameter* p : net.params()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw CheckpointError("checkpoint is missing record " + p->name);
    }
    if (it->second->shape != p->value.shape()) {
      throw CheckpointError("checkpoint record " + p->name +
                            " has mismatched shape");
    }
    std::copy(it->second->data.begin(), it->second->data.end(),
              p->value.data());
  }
  auto pull_stats = [&by_name](BatchNorm2dLayer& l) {
    const std::string base =
        l.gamma.name.substr(0, l.gamma.name.size() - 6);
    auto m = by_name.find(base + ".running_mean");
    auto v = by_name.find(base + ".running_var");
    if (m == by_name.end() || v == by_name.end()) return;
    if (m->second->data.size() != l.stats.mean.size() ||
        v->second->data.size() != l.stats.var.size()) {
      throw CheckpointError("checkpoint record " + base +
                            " has mismatched batch-norm width");
    }
    l.stats.mean = m->second->data;
    l.stats.var = v->second->data;
    l.stats.initialized = true;
  };
  for (auto& l : net.enc_bn) pull_stats(l);
  pull_stats(net.mid_bn);
  for (auto& l : net.dec_bn) pull_stats(l);
  return net;
}

}  // namespace edgesynth
