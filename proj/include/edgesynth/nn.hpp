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
#include <vector>

#include "edgesynth/rng.hpp"
#include "edgesynth/tensor.hpp"

namespace edgesynth {

// ---------------------------------------------------------------------------
// Elementwise / reduction plumbing
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// ---------------------------------------------------------------------------
// Activations. The ReLU subgradient at exactly 0 is 0; leaky ReLU uses alpha
// there. Finite-difference checks must sample away from the kink.
// ---------------------------------------------------------------------------

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double alpha);
Tensor tanh_act(const Tensor& x);
Tensor sigmoid_act(const Tensor& x);

enum class Act { Relu, LeakyRelu, Tanh, Sigmoid };
Tensor activation(const Tensor& x, Act kind, double alpha = 0.2);

// ---------------------------------------------------------------------------
// Spatial ops on NCHW tensors
// ---------------------------------------------------------------------------

// input [N,Cin,H,W], weight [Cout,Cin,k,k], bias [Cout] (undefined = none).
// Output spatial extent: (H + 2*pad - k) / stride + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad);

// input [N,Cin,H,W], weight [Cin,Cout,k,k], bias [Cout]. Adjoint of conv2d:
// with shared weight W, <conv2d(x,W), y> == <x, conv_transpose2d(y,W)>.
// Output spatial extent: (H - 1)*stride - 2*pad + k.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight,
                        const Tensor& bias, int stride, int pad);

enum class BnMode { Train, Eval };

// Running statistics for batch norm; `var` holds the unbiased estimate.
struct BnStats {
  std::vector<double> mean;
  std::vector<double> var;
  bool initialized = false;
};

// Train mode normalizes with batch statistics and folds them into `stats`
// with the given momentum; eval mode normalizes with `stats` as constants.
Tensor batch_norm2d(const Tensor& input, const Tensor& gamma,
                    const Tensor& beta, BnStats& stats, BnMode mode,
                    double epsilon = 1e-5, double momentum = 0.1);

Tensor max_pool2d(const Tensor& input, int k, int stride);
Tensor upsample_nearest(const Tensor& input, int factor);
Tensor concat_channels(const std::vector<Tensor>& inputs);

// ---------------------------------------------------------------------------
// Losses (all mean-reduced scalars)
// ---------------------------------------------------------------------------

Tensor bce_with_logits(const Tensor& logits, const Tensor& target);
Tensor l1_loss(const Tensor& pred, const Tensor& target);

// logits [N,K,H,W], labels row-major N*H*W with values in [0,K). The total is
// divided by the sum of the applied per-pixel weights.
Tensor weighted_softmax_ce(const Tensor& logits, const std::vector<int>& labels,
                           const std::vector<double>& class_weights);

// ---------------------------------------------------------------------------
// Parameters and the optimizer
// ---------------------------------------------------------------------------

struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string n, Tensor t);
};

// Bias-corrected Adam, in place. Missing gradients count as zero; a NaN/Inf
// gradient raises NumericalError before anything is touched.
void adam_step(const std::vector<Parameter*>& params, double lr, double beta1,
               double beta2, double epsilon);

void zero_grads(const std::vector<Parameter*>& params);

// ---------------------------------------------------------------------------
// Layer wrappers used by the GAN and segmentation nets
// ---------------------------------------------------------------------------

struct Conv2dLayer {
  Parameter weight;
  Parameter bias;
  int stride = 1;
  int pad = 0;

  Conv2dLayer() = default;
  Conv2dLayer(const std::string& name, int64_t cin, int64_t cout, int k,
              int stride, int pad, Rng& rng, double init_std = 0.02);
  Tensor forward(const Tensor& x) const;
  void collect(std::vector<Parameter*>& out);
};

struct ConvTranspose2dLayer {
  Parameter weight;  // [cin, cout, k, k]
  Parameter bias;
  int stride = 1;
  int pad = 0;

  ConvTranspose2dLayer() = default;
  ConvTranspose2dLayer(const std::string& name, int64_t cin, int64_t cout,
                       int k, int stride, int pad, Rng& rng,
                       double init_std = 0.02);
  Tensor forward(const Tensor& x) const;
  void collect(std::vector<Parameter*>& out);
};

struct BatchNorm2dLayer {
  Parameter gamma;
  Parameter beta;
  BnStats stats;
  double epsilon = 1e-5;
  double momentum = 0.1;

  BatchNorm2dLayer() = default;
  BatchNorm2dLayer(const std::string& name, int64_t channels);
  Tensor forward(const Tensor& x, BnMode mode);
  void collect(std::vector<Parameter*>& out);
};

}  // namespace edgesynth
