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

#include "edgesynth/pix2pix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "edgesynth/checkpoint.hpp"
#include "edgesynth/errors.hpp"

namespace edgesynth {

namespace {

int size_to_depth(int image_size) {
  switch (image_size) {
    case 64: return 6;
    case 128: return 7;
    case 256: return 8;
    default:
      throw ConfigError("gan image_size must be 64, 128 or 256, got " +
                        std::to_string(image_size));
  }
}

void check_config(const GanConfig& cfg) {
  size_to_depth(cfg.image_size);
  if (cfg.lambda_l1 < 0.0) throw ConfigError("lambda_l1 must be >= 0");
  if (cfg.epochs < 1) throw ConfigError("gan epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("gan batch_size must be >= 1");
  if (cfg.base_width < 1) throw ConfigError("gan base_width must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("gan lr must be > 0");
  if (!(cfg.beta1 >= 0.0) || !(cfg.beta1 < 1.0)) {
    throw ConfigError("gan beta1 must be in [0,1)");
  }
}

std::vector<int64_t> gen_widths(const GanConfig& cfg, int depth) {
  std::vector<int64_t> ch(depth);
  for (int i = 0; i < depth; ++i) {
    ch[i] = std::min<int64_t>(int64_t(cfg.base_width) << i,
                              int64_t(cfg.base_width) * 8);
  }
  return ch;
}

Tensor ones_like(const Tensor& t) { return Tensor::full(t.shape(), 1.0); }
Tensor zeros_like(const Tensor& t) { return Tensor::zeros(t.shape()); }

// Planar [-1,1] slab for a batch of labels (one-hot) or images (scaled).
Tensor batch_inputs(const std::vector<const FusedLabel*>& labels, int S) {
  const int64_t B = static_cast<int64_t>(labels.size());
  std::vector<double> data(static_cast<size_t>(B) * 3 * S * S, -1.0);
  for (int64_t n = 0; n < B; ++n) {
    const FusedLabel& f = *labels[static_cast<size_t>(n)];
    for (int64_t i = 0; i < int64_t(S) * S; ++i) {
      const uint8_t v = f.v[static_cast<size_t>(i)];
      const int64_t ch = v == 0 ? 0 : (v == 128 ? 1 : 2);
      data[static_cast<size_t>(((n * 3 + ch) * S * S) + i)] = 1.0;
    }
  }
  return Tensor::from_data({B, 3, S, S}, std::move(data));
}

Tensor batch_targets(const std::vector<const ImageBuffer*>& imgs, int S) {
  const int64_t B = static_cast<int64_t>(imgs.size());
  std::vector<double> data(static_cast<size_t>(B) * 3 * S * S);
  for (int64_t n = 0; n < B; ++n) {
    const ImageBuffer& img = *imgs[static_cast<size_t>(n)];
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t y = 0; y < S; ++y)
        for (int64_t x = 0; x < S; ++x)
          data[static_cast<size_t>(((n * 3 + c) * S + y) * S + x)] =
              img.at(int(y), int(x), int(c)) / 127.5 - 1.0;
  }
  return Tensor::from_data({B, 3, S, S}, std::move(data));
}

std::string strip_suffix(const std::string& s, const std::string& suffix) {
  return s.substr(0, s.size() - suffix.size());
}

void append_bn_records(std::vector<CheckpointRecord>& out,
                       std::vector<BatchNorm2dLayer>& layers) {
  for (auto& l : layers) {
    if (!l.stats.initialized) continue;
    const std::string base = strip_suffix(l.gamma.name, ".gamma");
    const int64_t c = static_cast<int64_t>(l.stats.mean.size());
    out.push_back({base + ".running_mean", {c}, l.stats.mean});
    out.push_back({base + ".running_var", {c}, l.stats.var});
  }
}

using RecordMap = std::map<std::string, const CheckpointRecord*>;

void restore_param(Parameter& p, const RecordMap& recs) {
  auto it = recs.find(p.name);
  if (it == recs.end()) {
    throw CheckpointError("checkpoint is missing record " + p.name);
  }
  if (it->second->shape != p.value.shape()) {
    throw CheckpointError("checkpoint record " + p.name +
                          " has mismatched shape");
  }
  std::copy(it->second->data.begin(), it->second->data.end(), p.value.data());
}

void restore_bn_stats(std::vector<BatchNorm2dLayer>& layers,
                      const RecordMap& recs) {
  for (auto& l : layers) {
    const std::string base = strip_suffix(l.gamma.name, ".gamma");
    auto m = recs.find(base + ".running_mean");
    auto v = recs.find(base + ".running_var");
    if (m == recs.end() || v == recs.end()) continue;
    if (m->second->data.size() != l.stats.mean.size() ||
        v->second->data.size() != l.stats.var.size()) {
      throw CheckpointError("checkpoint record " + base +
                            " has mismatched batch-norm width");
    }
    l.stats.mean = m->second->data;
    l.stats.var = v->second->data;
    l.stats.initialized = true;
  }
}

}  // namespace

GeneratorNet::GeneratorNet(const GanConfig& cfg, Rng& rng) {
  check_config(cfg);
  image_size = cfg.image_size;
  depth = size_to_depth(cfg.image_size);
  const auto ch = gen_widths(cfg, depth);

  int64_t in_ch = 3;
  for (int i = 0; i < depth; ++i) {
    enc.emplace_back("gen.enc" + std::to_string(i), in_ch, ch[i], 4, 2, 1,
                     rng);
    if (i >= 1 && i <= depth - 2) {
      enc_bn.emplace_back("gen.enc_bn" + std::to_string(i), ch[i]);
    }
    in_ch = ch[i];
  }
  for (int j = 0; j < depth; ++j) {
    const int64_t in = j == 0 ? ch[depth - 1] : 2 * ch[depth - 1 - j];
    const int64_t out = j == depth - 1 ? 3 : ch[depth - 2 - j];
    dec.emplace_back("gen.dec" + std::to_string(j), in, out, 4, 2, 1, rng);
    if (j <= depth - 2) {
      dec_bn.emplace_back("gen.dec_bn" + std::to_string(j), out);
    }
  }
}

Tensor GeneratorNet::forward(const Tensor& x, BnMode mode) {
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != image_size ||
      x.dim(3) != image_size) {
    throw ShapeError("generator expects [N,3," + std::to_string(image_size) +
                     "," + std::to_string(image_size) + "], got " +
                     shape_str(x.shape()));
  }
  std::vector<Tensor> skips;
  Tensor h = x;
  for (int i = 0; i < depth; ++i) {
    h = enc[static_cast<size_t>(i)].forward(h);
    if (i >= 1 && i <= depth - 2) {
      h = enc_bn[static_cast<size_t>(i - 1)].forward(h, mode);
    }
    h = leaky_relu(h, 0.2);
    if (i <= depth - 2) skips.push_back(h);
  }
  for (int j = 0; j < depth; ++j) {
    h = dec[static_cast<size_t>(j)].forward(h);
    if (j <= depth - 2) {
      h = dec_bn[static_cast<size_t>(j)].forward(h, mode);
      h = relu(h);
      h = concat_channels({h, skips[static_cast<size_t>(depth - 2 - j)]});
    } else {
      h = tanh_act(h);
    }
  }
  return h;
}

std::vector<Parameter*> GeneratorNet::params() {
  std::vector<Parameter*> out;
  for (auto& l : enc) l.collect(out);
  for (auto& l : enc_bn) l.collect(out);
  for (auto& l : dec) l.collect(out);
  for (auto& l : dec_bn) l.collect(out);
  return out;
}

DiscriminatorNet::DiscriminatorNet(const GanConfig& cfg, Rng& rng) {
  check_config(cfg);
  const int64_t b = cfg.base_width;
  conv.emplace_back("disc.conv0", 6, b, 4, 2, 1, rng);
  conv.emplace_back("disc.conv1", b, 2 * b, 4, 2, 1, rng);
  bn.emplace_back("disc.bn1", 2 * b);
  conv.emplace_back("disc.conv2", 2 * b, 4 * b, 4, 2, 1, rng);
  bn.emplace_back("disc.bn2", 4 * b);
  conv.emplace_back("disc.head", 4 * b, 1, 4, 1, 1, rng);
}

Tensor DiscriminatorNet::forward(const Tensor& label_and_image, BnMode mode) {
  if (label_and_image.rank() != 4 || label_and_image.dim(1) != 6) {
    throw ShapeError("discriminator expects [N,6,S,S], got " +
                     shape_str(label_and_image.shape()));
  }
  Tensor h = conv[0].forward(label_and_image);
  h = leaky_relu(h, 0.2);
  h = conv[1].forward(h);
  h = bn[0].forward(h, mode);
  h = leaky_relu(h, 0.2);
  h = conv[2].forward(h);
  h = bn[1].forward(h, mode);
  h = leaky_relu(h, 0.2);
  return conv[3].forward(h);
}

std::vector<Parameter*> DiscriminatorNet::params() {
  std::vector<Parameter*> out;
  for (auto& l : conv) l.collect(out);
  for (auto& l : bn) l.collect(out);
  return out;
}

Tensor label_to_input(const FusedLabel& fused) {
  return batch_inputs({&fused}, fused.width);
}

Tensor image_to_target(const ImageBuffer& img) {
  if (img.channels != 3) {
    throw ShapeError("gan target images must be 3-channel");
  }
  if (img.width != img.height) {
    throw ShapeError("gan target images must be square");
  }
  return batch_targets({&img}, img.width);
}

ImageBuffer tensor_to_image(const Tensor& t, int64_t n) {
  if (t.rank() != 4 || t.dim(1) != 3) {
    throw ShapeError("expected [N,3,H,W] tensor, got " + shape_str(t.shape()));
  }
  if (n < 0 || n >= t.dim(0)) throw ShapeError("sample index out of range");
  const int64_t H = t.dim(2), W = t.dim(3);
  ImageBuffer img(int(W), int(H), 3);
  const auto& d = t.data();
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W; ++x) {
        const double v = d[static_cast<size_t>(((n * 3 + c) * H + y) * W + x)];
        const long q = std::lround(127.5 * (v + 1.0));
        img.at(int(y), int(x), int(c)) =
            static_cast<uint8_t>(std::clamp(q, 0L, 255L));
      }
  return img;
}

GanLosses gan_losses(const Tensor& d_real_logits, const Tensor& d_fake_logits,
                     const Tensor& fake, const Tensor& target,
                     double lambda_l1) {
  GanLosses out;
  out.gen_adv = bce_with_logits(d_fake_logits, ones_like(d_fake_logits));
  out.gen_l1 = l1_loss(fake, target);
  out.gen_total = add(out.gen_adv, scale(out.gen_l1, lambda_l1));
  out.disc =
      scale(add(bce_with_logits(d_real_logits, ones_like(d_real_logits)),
                bce_with_logits(d_fake_logits, zeros_like(d_fake_logits))),
            0.5);
  return out;
}

std::pair<GeneratorNet, LossLog> train_gan(
    const std::vector<std::pair<FusedLabel, ImageBuffer>>& dataset,
    const GanConfig& cfg, const std::string& checkpoint_path) {
  check_config(cfg);
  if (dataset.empty()) throw EmptyDatasetError("gan training set is empty");
  const int S = cfg.image_size;
  for (const auto& [label, img] : dataset) {
    if (label.width != S || label.height != S || img.width != S ||
        img.height != S || img.channels != 3) {
      throw ShapeError("gan training pairs must be 3-channel " +
                       std::to_string(S) + "x" + std::to_string(S));
    }
  }

  Rng rng(cfg.seed);
  GeneratorNet g(cfg, rng);
  DiscriminatorNet d(cfg, rng);
  auto gp = g.params();
  auto dp = d.params();
  std::vector<Parameter*> all = gp;
  all.insert(all.end(), dp.begin(), dp.end());

  LossLog log;
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), size_t{0});

  int64_t iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j =
          static_cast<size_t>(rng.uniform_int(0, int64_t(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (size_t start = 0; start < order.size(); start += size_t(cfg.batch_size)) {
      const size_t stop =
          std::min(order.size(), start + size_t(cfg.batch_size));
      std::vector<const FusedLabel*> labels;
      std::vector<const ImageBuffer*> images;
      for (size_t k = start; k < stop; ++k) {
        labels.push_back(&dataset[order[k]].first);
        images.push_back(&dataset[order[k]].second);
      }
      const Tensor x = batch_inputs(labels, S);
      const Tensor t = batch_targets(images, S);

      // Weights are still those of the last finite-loss update when a
      // non-finite loss is detected, so checkpoint before aborting.
      auto abort_non_finite = [&] {
        if (!checkpoint_path.empty()) save_gan(checkpoint_path, g, d);
        throw NumericalError("non-finite GAN loss at iteration " +
                             std::to_string(iteration));
      };

      // Discriminator step on a detached fake so its tape never touches the
      // generator graph (grads on shared intermediates persist per tape).
      Tensor fake = g.forward(x, BnMode::Train);
      Tensor fake_frozen = fake.detach();
      Tensor d_real = d.forward(concat_channels({x, t}), BnMode::Train);
      Tensor d_fake = d.forward(concat_channels({x, fake_frozen}),
                                BnMode::Train);
      GanLosses dl = gan_losses(d_real, d_fake, fake_frozen, t, cfg.lambda_l1);
      const double v_disc = dl.disc.item();
      if (!std::isfinite(v_disc)) abort_non_finite();
      zero_grads(all);
      backward(dl.disc);
      adam_step(dp, cfg.lr, cfg.beta1, 0.999, 1e-8);

      // Generator step against the just-updated discriminator.
      Tensor d_fake_g = d.forward(concat_channels({x, fake}), BnMode::Train);
      GanLosses gl = gan_losses(d_real, d_fake_g, fake, t, cfg.lambda_l1);
      const double v_total = gl.gen_total.item();
      const double v_adv = gl.gen_adv.item();
      const double v_l1 = gl.gen_l1.item();
      if (!std::isfinite(v_total) || !std::isfinite(v_adv) ||
          !std::isfinite(v_l1)) {
        abort_non_finite();
      }
      zero_grads(all);
      backward(gl.gen_total);
      adam_step(gp, cfg.lr, cfg.beta1, 0.999, 1e-8);

      log.gen_total.push_back(v_total);
      log.gen_adv.push_back(v_adv);
      log.gen_l1.push_back(v_l1);
      log.disc.push_back(v_disc);
      ++iteration;
    }
  }

  if (!checkpoint_path.empty()) save_gan(checkpoint_path, g, d);
  return {std::move(g), std::move(log)};
}

std::vector<ImageBuffer> synthesize(GeneratorNet& g,
                                    const std::vector<FusedLabel>& labels) {
  NoGradGuard guard;
  std::vector<ImageBuffer> out;
  out.reserve(labels.size());
  for (const auto& label : labels) {
    const Tensor x = label_to_input(label);
    const Tensor y = g.forward(x, BnMode::Eval);
    out.push_back(tensor_to_image(y));
  }
  return out;
}

std::vector<double> moving_average(const std::vector<double>& values,
                                   int window) {
  if (window < 1) throw ConfigError("moving average window must be >= 1");
  std::vector<double> out;
  out.reserve(values.size());
  double acc = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= static_cast<size_t>(window)) acc -= values[i - size_t(window)];
    const size_t n = std::min(i + 1, static_cast<size_t>(window));
    out.push_back(acc / static_cast<double>(n));
  }
  return out;
}

namespace {

std::string csv_rows(const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<double>& c,
                     const std::vector<double>& d) {
  std::string out = "iter,gen_total,gen_adv,gen_l1,disc\n";
  char buf[128];
  for (size_t i = 0; i < a.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", i, a[i],
                  b[i], c[i], d[i]);
    out += buf;
  }
  return out;
}

}  // namespace

std::string loss_csv(const LossLog& log) {
  return csv_rows(log.gen_total, log.gen_adv, log.gen_l1, log.disc);
}

std::string loss_csv_smoothed(const LossLog& log, int window) {
  return csv_rows(moving_average(log.gen_total, window),
                  moving_average(log.gen_adv, window),
                  moving_average(log.gen_l1, window),
                  moving_average(log.disc, window));
}

void save_gan(const std::string& path, GeneratorNet& g, DiscriminatorNet& d) {
  std::vector<CheckpointRecord> recs;
  auto push = [&recs](Parameter* p) {
    const double* d0 = p->value.data();
    recs.push_back({p->name, p->value.shape(),
                    std::vector<double>(d0, d0 + p->value.numel())});
  };
  for (Parameter* p : g.params()) push(p);
  for (Parameter* p : d.params()) push(p);
  append_bn_records(recs, g.enc_bn);
  append_bn_records(recs, g.dec_bn);
  append_bn_records(recs, d.bn);
  save_checkpoint(path, recs);
}

GeneratorNet load_generator(const std::string& path, const GanConfig& cfg) {
  const auto records = load_checkpoint(path);
  RecordMap by_name;
  for (const auto& r : records) by_name[r.name] = &r;

  Rng rng(cfg.seed);
  GeneratorNet g(cfg, rng);
  for (Parameter* p : g.params()) restore_param(*p, by_name);
  restore_bn_stats(g.enc_bn, by_name);
  restore_bn_stats(g.dec_bn, by_name);
  return g;
}

}  // namespace edgesynth
