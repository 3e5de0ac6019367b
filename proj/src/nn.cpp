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

#include "edgesynth/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

namespace edgesynth {

namespace {

using detail::Node;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Valid output-column range for a fixed kernel column: all ox with
// 0 <= ox*stride + kx - pad < W.
inline void ox_range(int64_t W, int64_t Wo, int stride, int kx, int pad,
                     int64_t& lo, int64_t& hi) {
  int64_t num = pad - kx;
  lo = num <= 0 ? 0 : (num + stride - 1) / stride;
  int64_t top = W - 1 - kx + pad;
  hi = top < 0 ? -1 : std::min<int64_t>(Wo - 1, top / stride);
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise / reductions
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const double* ad = a.data();
  const double* bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const double* ad = a.data();
  const double* bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const double* ad = a.data();
  const double* bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        an->grad[i] += self.grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        bn->grad[i] += self.grad[i] * an->data[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  const double* ad = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * c;
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a}, [an, c](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i] * c;
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  const double* ad = a.data();
  for (int64_t i = 0; i < a.numel(); ++i) acc += ad[i];
  auto an = a.node();
  return make_op({1}, {acc}, {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const double g = self.grad[0];
    for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
  });
}

Tensor mean(const Tensor& a) {
  const int64_t n = a.numel();
  if (n == 0) throw ShapeError("mean of empty tensor");
  double acc = 0.0;
  const double* ad = a.data();
  for (int64_t i = 0; i < n; ++i) acc += ad[i];
  acc /= static_cast<double>(n);
  auto an = a.node();
  return make_op({1}, {acc}, {a}, [an, n](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const double g = self.grad[0] / static_cast<double>(n);
    for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
  });
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  const double* xd = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > 0.0 ? xd[i] : 0.0;
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {x}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (xn->data[i] > 0.0) xn->grad[i] += self.grad[i];
    }
  });
}

Tensor leaky_relu(const Tensor& x, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("leaky_relu alpha must be in (0,1), got " +
                      std::to_string(alpha));
  }
  std::vector<double> out(x.numel());
  const double* xd = x.data();
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = xd[i] > 0.0 ? xd[i] : alpha * xd[i];
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {x}, [xn, alpha](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      xn->grad[i] += self.grad[i] * (xn->data[i] > 0.0 ? 1.0 : alpha);
    }
  });
}

Tensor tanh_act(const Tensor& x) {
  std::vector<double> out(x.numel());
  const double* xd = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xd[i]);
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {x}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.data[i];
      xn->grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor sigmoid_act(const Tensor& x) {
  std::vector<double> out(x.numel());
  const double* xd = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(xd[i]);
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {x}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.data[i];
      xn->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor activation(const Tensor& x, Act kind, double alpha) {
  switch (kind) {
    case Act::Relu:
      return relu(x);
    case Act::LeakyRelu:
      return leaky_relu(x, alpha);
    case Act::Tanh:
      return tanh_act(x);
    case Act::Sigmoid:
      return sigmoid_act(x);
  }
  throw ConfigError("unknown activation kind");
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

namespace {

struct ConvDims {
  int64_t N, Ci, H, W, Co, K, Ho, Wo;
};

ConvDims conv_check(const Tensor& x, const Tensor& w, const Tensor& b,
                    int stride, int pad, bool transpose) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (pad < 0) throw ConfigError("pad must be >= 0");
  if (!x.defined() || x.rank() != 4)
    throw ShapeError("conv input must be rank-4 NCHW");
  if (!w.defined() || w.rank() != 4)
    throw ShapeError("conv weight must be rank 4");
  if (w.dim(2) != w.dim(3)) throw ShapeError("conv kernel must be square");
  ConvDims d{};
  d.N = x.dim(0);
  d.Ci = x.dim(1);
  d.H = x.dim(2);
  d.W = x.dim(3);
  d.K = w.dim(2);
  if (!transpose) {
    if (w.dim(1) != d.Ci) {
      throw ShapeError("conv2d weight in-channels " + std::to_string(w.dim(1)) +
                       " != input channels " + std::to_string(d.Ci));
    }
    d.Co = w.dim(0);
    if (d.H + 2 * pad < d.K || d.W + 2 * pad < d.K) {
      throw ShapeError("conv2d kernel larger than padded input");
    }
    d.Ho = (d.H + 2 * pad - d.K) / stride + 1;
    d.Wo = (d.W + 2 * pad - d.K) / stride + 1;
  } else {
    if (w.dim(0) != d.Ci) {
      throw ShapeError("conv_transpose2d weight in-channels " +
                       std::to_string(w.dim(0)) + " != input channels " +
                       std::to_string(d.Ci));
    }
    d.Co = w.dim(1);
    d.Ho = (d.H - 1) * stride - 2 * pad + d.K;
    d.Wo = (d.W - 1) * stride - 2 * pad + d.K;
    if (d.Ho < 1 || d.Wo < 1) {
      throw ShapeError("conv_transpose2d output would be empty");
    }
  }
  if (b.defined() && (b.rank() != 1 || b.dim(0) != d.Co)) {
    throw ShapeError("conv bias must have shape [" + std::to_string(d.Co) +
                     "]");
  }
  return d;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  const ConvDims d = conv_check(x, w, b, stride, pad, false);
  std::vector<double> out(static_cast<size_t>(d.N * d.Co * d.Ho * d.Wo), 0.0);
  const double* xd = x.data();
  const double* wd = w.data();

  for (int64_t n = 0; n < d.N; ++n) {
    for (int64_t co = 0; co < d.Co; ++co) {
      double* op = &out[((n * d.Co + co) * d.Ho) * d.Wo];
      if (b.defined()) {
        const double bv = b.data()[co];
        std::fill(op, op + d.Ho * d.Wo, bv);
      }
      for (int64_t ci = 0; ci < d.Ci; ++ci) {
        const double* xp = &xd[((n * d.Ci + ci) * d.H) * d.W];
        const double* wp = &wd[((co * d.Ci + ci) * d.K) * d.K];
        for (int64_t ky = 0; ky < d.K; ++ky) {
          for (int64_t kx = 0; kx < d.K; ++kx) {
            const double wv = wp[ky * d.K + kx];
            int64_t xlo, xhi;
            ox_range(d.W, d.Wo, stride, static_cast<int>(kx), pad, xlo, xhi);
            for (int64_t oy = 0; oy < d.Ho; ++oy) {
              const int64_t iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= d.H) continue;
              const double* xrow = xp + iy * d.W + (kx - pad);
              double* orow = op + oy * d.Wo;
              for (int64_t ox = xlo; ox <= xhi; ++ox) {
                orow[ox] += wv * xrow[ox * stride];
              }
            }
          }
        }
      }
    }
  }

  auto xn = x.node();
  auto wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  return make_op(
      {d.N, d.Co, d.Ho, d.Wo}, std::move(out), {x, w, b},
      [xn, wn, bn, d, stride, pad](Node& self) {
        const double* g = self.grad.data();
        if (bn && bn->requires_grad) {
          bn->ensure_grad();
          for (int64_t n = 0; n < d.N; ++n) {
            for (int64_t co = 0; co < d.Co; ++co) {
              const double* gp = &g[((n * d.Co + co) * d.Ho) * d.Wo];
              double acc = 0.0;
              for (int64_t i = 0; i < d.Ho * d.Wo; ++i) acc += gp[i];
              bn->grad[co] += acc;
            }
          }
        }
        const bool need_x = xn->requires_grad;
        const bool need_w = wn->requires_grad;
        if (!need_x && !need_w) return;
        if (need_x) xn->ensure_grad();
        if (need_w) wn->ensure_grad();
        for (int64_t n = 0; n < d.N; ++n) {
          for (int64_t co = 0; co < d.Co; ++co) {
            const double* gp = &g[((n * d.Co + co) * d.Ho) * d.Wo];
            for (int64_t ci = 0; ci < d.Ci; ++ci) {
              const double* xp = &xn->data[((n * d.Ci + ci) * d.H) * d.W];
              double* gxp =
                  need_x ? &xn->grad[((n * d.Ci + ci) * d.H) * d.W] : nullptr;
              const double* wp = &wn->data[((co * d.Ci + ci) * d.K) * d.K];
              double* gwp =
                  need_w ? &wn->grad[((co * d.Ci + ci) * d.K) * d.K] : nullptr;
              for (int64_t ky = 0; ky < d.K; ++ky) {
                for (int64_t kx = 0; kx < d.K; ++kx) {
                  int64_t xlo, xhi;
                  ox_range(d.W, d.Wo, stride, static_cast<int>(kx), pad, xlo,
                           xhi);
                  double wacc = 0.0;
                  const double wv = wp[ky * d.K + kx];
                  for (int64_t oy = 0; oy < d.Ho; ++oy) {
                    const int64_t iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= d.H) continue;
                    const double* grow = gp + oy * d.Wo;
                    const int64_t base = iy * d.W + (kx - pad);
                    if (need_w) {
                      const double* xrow = xp + base;
                      for (int64_t ox = xlo; ox <= xhi; ++ox)
                        wacc += grow[ox] * xrow[ox * stride];
                    }
                    if (need_x) {
                      double* gxrow = gxp + base;
                      for (int64_t ox = xlo; ox <= xhi; ++ox)
                        gxrow[ox * stride] += grow[ox] * wv;
                    }
                  }
                  if (need_w) gwp[ky * d.K + kx] += wacc;
                }
              }
            }
          }
        }
      });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad) {
  const ConvDims d = conv_check(x, w, b, stride, pad, true);
  std::vector<double> out(static_cast<size_t>(d.N * d.Co * d.Ho * d.Wo), 0.0);
  const double* xd = x.data();
  const double* wd = w.data();

  for (int64_t n = 0; n < d.N; ++n) {
    for (int64_t co = 0; co < d.Co; ++co) {
      double* op = &out[((n * d.Co + co) * d.Ho) * d.Wo];
      if (b.defined()) {
        const double bv = b.data()[co];
        std::fill(op, op + d.Ho * d.Wo, bv);
      }
      for (int64_t ci = 0; ci < d.Ci; ++ci) {
        const double* xp = &xd[((n * d.Ci + ci) * d.H) * d.W];
        const double* wp = &wd[((ci * d.Co + co) * d.K) * d.K];
        for (int64_t iy = 0; iy < d.H; ++iy) {
          for (int64_t ky = 0; ky < d.K; ++ky) {
            const int64_t oy = iy * stride + ky - pad;
            if (oy < 0 || oy >= d.Ho) continue;
            const double* wrow = wp + ky * d.K;
            double* orow = op + oy * d.Wo;
            const double* xrow = xp + iy * d.W;
            for (int64_t ix = 0; ix < d.W; ++ix) {
              const double xv = xrow[ix];
              const int64_t ox0 = ix * stride - pad;
              const int64_t klo = std::max<int64_t>(0, -ox0);
              const int64_t khi = std::min<int64_t>(d.K - 1, d.Wo - 1 - ox0);
              for (int64_t kx = klo; kx <= khi; ++kx) {
                orow[ox0 + kx] += xv * wrow[kx];
              }
            }
          }
        }
      }
    }
  }

  auto xn = x.node();
  auto wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  return make_op(
      {d.N, d.Co, d.Ho, d.Wo}, std::move(out), {x, w, b},
      [xn, wn, bn, d, stride, pad](Node& self) {
        const double* g = self.grad.data();
        if (bn && bn->requires_grad) {
          bn->ensure_grad();
          for (int64_t n = 0; n < d.N; ++n) {
            for (int64_t co = 0; co < d.Co; ++co) {
              const double* gp = &g[((n * d.Co + co) * d.Ho) * d.Wo];
              double acc = 0.0;
              for (int64_t i = 0; i < d.Ho * d.Wo; ++i) acc += gp[i];
              bn->grad[co] += acc;
            }
          }
        }
        const bool need_x = xn->requires_grad;
        const bool need_w = wn->requires_grad;
        if (!need_x && !need_w) return;
        if (need_x) xn->ensure_grad();
        if (need_w) wn->ensure_grad();
        for (int64_t n = 0; n < d.N; ++n) {
          for (int64_t co = 0; co < d.Co; ++co) {
            const double* gp = &g[((n * d.Co + co) * d.Ho) * d.Wo];
            for (int64_t ci = 0; ci < d.Ci; ++ci) {
              const double* xp = &xn->data[((n * d.Ci + ci) * d.H) * d.W];
              double* gxp =
                  need_x ? &xn->grad[((n * d.Ci + ci) * d.H) * d.W] : nullptr;
              const double* wp = &wn->data[((ci * d.Co + co) * d.K) * d.K];
              double* gwp =
                  need_w ? &wn->grad[((ci * d.Co + co) * d.K) * d.K] : nullptr;
              for (int64_t iy = 0; iy < d.H; ++iy) {
                for (int64_t ky = 0; ky < d.K; ++ky) {
                  const int64_t oy = iy * stride + ky - pad;
                  if (oy < 0 || oy >= d.Ho) continue;
                  const double* wrow = wp + ky * d.K;
                  double* gwrow = need_w ? gwp + ky * d.K : nullptr;
                  const double* grow = gp + oy * d.Wo;
                  const double* xrow = xp + iy * d.W;
                  double* gxrow = need_x ? gxp + iy * d.W : nullptr;
                  for (int64_t ix = 0; ix < d.W; ++ix) {
                    const int64_t ox0 = ix * stride - pad;
                    const int64_t klo = std::max<int64_t>(0, -ox0);
                    const int64_t khi =
                        std::min<int64_t>(d.K - 1, d.Wo - 1 - ox0);
                    if (need_x) {
                      double acc = 0.0;
                      for (int64_t kx = klo; kx <= khi; ++kx)
                        acc += grow[ox0 + kx] * wrow[kx];
                      gxrow[ix] += acc;
                    }
                    if (need_w) {
                      const double xv = xrow[ix];
                      for (int64_t kx = klo; kx <= khi; ++kx)
                        gwrow[kx] += grow[ox0 + kx] * xv;
                    }
                  }
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// batch norm
// ---------------------------------------------------------------------------

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    BnStats& stats, BnMode mode, double epsilon,
                    double momentum) {
  if (!x.defined() || x.rank() != 4)
    throw ShapeError("batch_norm2d input must be rank-4 NCHW");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 ||
      beta.dim(0) != C) {
    throw ShapeError("batch_norm2d gamma/beta must have shape [C]");
  }
  if (stats.mean.empty()) stats.mean.assign(static_cast<size_t>(C), 0.0);
  if (stats.var.empty()) stats.var.assign(static_cast<size_t>(C), 1.0);
  const int64_t m = N * H * W;

  std::vector<double> mu(C), invstd(C);
  if (mode == BnMode::Train) {
    if (m <= 1) {
      throw DegenerateBatchError(
          "batch_norm2d train mode needs more than one value per channel");
    }
    const double* xd = x.data();
    for (int64_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (int64_t n = 0; n < N; ++n) {
        const double* p = &xd[((n * C + c) * H) * W];
        for (int64_t i = 0; i < H * W; ++i) s += p[i];
      }
      const double mean_c = s / static_cast<double>(m);
      double v = 0.0;
      for (int64_t n = 0; n < N; ++n) {
        const double* p = &xd[((n * C + c) * H) * W];
        for (int64_t i = 0; i < H * W; ++i) {
          const double dlt = p[i] - mean_c;
          v += dlt * dlt;
        }
      }
      const double var_c = v / static_cast<double>(m);
      mu[c] = mean_c;
      invstd[c] = 1.0 / std::sqrt(var_c + epsilon);
      const double var_unbiased = v / static_cast<double>(m - 1);
      stats.mean[c] = (1.0 - momentum) * stats.mean[c] + momentum * mean_c;
      stats.var[c] = (1.0 - momentum) * stats.var[c] + momentum * var_unbiased;
    }
    stats.initialized = true;
  } else {
    if (!stats.initialized) {
      throw ConfigError(
          "batch_norm2d eval mode before running stats were populated");
    }
    for (int64_t c = 0; c < C; ++c) {
      mu[c] = stats.mean[c];
      invstd[c] = 1.0 / std::sqrt(stats.var[c] + epsilon);
    }
  }

  std::vector<double> out(static_cast<size_t>(N * C * H * W));
  const double* xd = x.data();
  const double* gd = gamma.data();
  const double* bd = beta.data();
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* p = &xd[((n * C + c) * H) * W];
      double* op = &out[((n * C + c) * H) * W];
      const double a = gd[c] * invstd[c];
      const double sh = bd[c] - a * mu[c];
      for (int64_t i = 0; i < H * W; ++i) op[i] = a * p[i] + sh;
    }
  }

  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  const bool train = mode == BnMode::Train;
  return make_op(
      x.shape(), std::move(out), {x, gamma, beta},
      [xn, gn, bn, mu, invstd, N, C, H, W, train](Node& self) {
        const int64_t m = N * H * W;
        const double* g = self.grad.data();
        for (int64_t c = 0; c < C; ++c) {
          // Per-channel reductions over all samples and positions.
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int64_t n = 0; n < N; ++n) {
            const double* gp = &g[((n * C + c) * H) * W];
            const double* xp = &xn->data[((n * C + c) * H) * W];
            for (int64_t i = 0; i < H * W; ++i) {
              const double xhat = (xp[i] - mu[c]) * invstd[c];
              sum_dy += gp[i];
              sum_dy_xhat += gp[i] * xhat;
            }
          }
          if (gn->requires_grad) {
            gn->ensure_grad();
            gn->grad[c] += sum_dy_xhat;
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            bn->grad[c] += sum_dy;
          }
          if (xn->requires_grad) {
            xn->ensure_grad();
            const double gamma_c = gn->data[c];
            if (train) {
              const double k = gamma_c * invstd[c] / static_cast<double>(m);
              for (int64_t n = 0; n < N; ++n) {
                const double* gp = &g[((n * C + c) * H) * W];
                const double* xp = &xn->data[((n * C + c) * H) * W];
                double* gxp = &xn->grad[((n * C + c) * H) * W];
                for (int64_t i = 0; i < H * W; ++i) {
                  const double xhat = (xp[i] - mu[c]) * invstd[c];
                  gxp[i] += k * (static_cast<double>(m) * gp[i] - sum_dy -
                                 xhat * sum_dy_xhat);
                }
              }
            } else {
              const double k = gamma_c * invstd[c];
              for (int64_t n = 0; n < N; ++n) {
                const double* gp = &g[((n * C + c) * H) * W];
                double* gxp = &xn->grad[((n * C + c) * H) * W];
                for (int64_t i = 0; i < H * W; ++i) gxp[i] += k * gp[i];
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// pooling / upsample / concat
// ---------------------------------------------------------------------------

Tensor max_pool2d(const Tensor& x, int k, int stride) {
  if (k < 1 || stride < 1) throw ConfigError("max_pool2d k and stride must be >= 1");
  if (!x.defined() || x.rank() != 4)
    throw ShapeError("max_pool2d input must be rank-4 NCHW");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H < k || W < k) throw ShapeError("max_pool2d window larger than input");
  const int64_t Ho = (H - k) / stride + 1;
  const int64_t Wo = (W - k) / stride + 1;
  std::vector<double> out(static_cast<size_t>(N * C * Ho * Wo));
  auto argmax = std::make_shared<std::vector<int64_t>>(out.size());
  const double* xd = x.data();
  size_t oi = 0;
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xp = &xd[((n * C + c) * H) * W];
      const int64_t plane = ((n * C + c) * H) * W;
      for (int64_t oy = 0; oy < Ho; ++oy) {
        for (int64_t ox = 0; ox < Wo; ++ox, ++oi) {
          double best = -1e308;
          int64_t best_idx = 0;
          for (int64_t ky = 0; ky < k; ++ky) {
            const int64_t iy = oy * stride + ky;
            for (int64_t kx = 0; kx < k; ++kx) {
              const int64_t ix = ox * stride + kx;
              const double v = xp[iy * W + ix];
              if (v > best) {
                best = v;
                best_idx = plane + iy * W + ix;
              }
            }
          }
          out[oi] = best;
          (*argmax)[oi] = best_idx;
        }
      }
    }
  }
  auto xn = x.node();
  return make_op({N, C, Ho, Wo}, std::move(out), {x}, [xn, argmax](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      xn->grad[(*argmax)[i]] += self.grad[i];
    }
  });
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  if (factor < 1) throw ConfigError("upsample factor must be >= 1");
  if (!x.defined() || x.rank() != 4)
    throw ShapeError("upsample_nearest input must be rank-4 NCHW");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = H * factor, Wo = W * factor;
  std::vector<double> out(static_cast<size_t>(N * C * Ho * Wo));
  const double* xd = x.data();
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xp = &xd[((n * C + c) * H) * W];
      double* op = &out[((n * C + c) * Ho) * Wo];
      for (int64_t oy = 0; oy < Ho; ++oy) {
        const double* xrow = xp + (oy / factor) * W;
        double* orow = op + oy * Wo;
        for (int64_t ox = 0; ox < Wo; ++ox) orow[ox] = xrow[ox / factor];
      }
    }
  }
  auto xn = x.node();
  return make_op({N, C, Ho, Wo}, std::move(out), {x},
                 [xn, N, C, H, W, factor](Node& self) {
                   if (!xn->requires_grad) return;
                   xn->ensure_grad();
                   const int64_t Ho = H * factor, Wo = W * factor;
                   for (int64_t n = 0; n < N; ++n) {
                     for (int64_t c = 0; c < C; ++c) {
                       const double* gp = &self.grad[((n * C + c) * Ho) * Wo];
                       double* gxp = &xn->grad[((n * C + c) * H) * W];
                       for (int64_t oy = 0; oy < Ho; ++oy) {
                         const double* grow = gp + oy * Wo;
                         double* gxrow = gxp + (oy / factor) * W;
                         for (int64_t ox = 0; ox < Wo; ++ox)
                           gxrow[ox / factor] += grow[ox];
                       }
                     }
                   }
                 });
}

Tensor concat_channels(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels needs inputs");
  const int64_t N = inputs[0].dim(0), H = inputs[0].dim(2),
                W = inputs[0].dim(3);
  int64_t C = 0;
  for (const Tensor& t : inputs) {
    if (t.rank() != 4 || t.dim(0) != N || t.dim(2) != H || t.dim(3) != W) {
      throw ShapeError("concat_channels inputs must agree on N, H, W");
    }
    C += t.dim(1);
  }
  std::vector<double> out(static_cast<size_t>(N * C * H * W));
  int64_t coff = 0;
  for (const Tensor& t : inputs) {
    const int64_t Ci = t.dim(1);
    const double* xd = t.data();
    for (int64_t n = 0; n < N; ++n) {
      double* dst = &out[((n * C + coff) * H) * W];
      const double* src = &xd[(n * Ci * H) * W];
      std::memcpy(dst, src, sizeof(double) * static_cast<size_t>(Ci * H * W));
    }
    coff += Ci;
  }
  std::vector<std::shared_ptr<Node>> nodes;
  nodes.reserve(inputs.size());
  for (const Tensor& t : inputs) nodes.push_back(t.node());
  return make_op({N, C, H, W}, std::move(out), inputs,
                 [nodes, N, C, H, W](Node& self) {
                   int64_t coff = 0;
                   for (const auto& pn : nodes) {
                     const int64_t Ci = pn->shape[1];
                     if (pn->requires_grad) {
                       pn->ensure_grad();
                       for (int64_t n = 0; n < N; ++n) {
                         const double* src = &self.grad[((n * C + coff) * H) * W];
                         double* dst = &pn->grad[(n * Ci * H) * W];
                         for (int64_t i = 0; i < Ci * H * W; ++i)
                           dst[i] += src[i];
                       }
                     }
                     coff += Ci;
                   }
                 });
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

Tensor bce_with_logits(const Tensor& logits, const Tensor& target) {
  check_same_shape(logits, target, "bce_with_logits");
  const int64_t n = logits.numel();
  const double* xd = logits.data();
  const double* td = target.data();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double x = xd[i];
    const double t = td[i];
    acc += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  acc /= static_cast<double>(n);
  auto xn = logits.node();
  auto tn = target.node();
  return make_op({1}, {acc}, {logits, target}, [xn, tn, n](Node& self) {
    const double g = self.grad[0] / static_cast<double>(n);
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (int64_t i = 0; i < n; ++i) {
        xn->grad[i] += g * (stable_sigmoid(xn->data[i]) - tn->data[i]);
      }
    }
    if (tn->requires_grad) {
      tn->ensure_grad();
      for (int64_t i = 0; i < n; ++i) tn->grad[i] += g * (-xn->data[i]);
    }
  });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "l1_loss");
  const int64_t n = pred.numel();
  const double* ad = pred.data();
  const double* bd = target.data();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += std::abs(ad[i] - bd[i]);
  acc /= static_cast<double>(n);
  auto an = pred.node();
  auto bn = target.node();
  return make_op({1}, {acc}, {pred, target}, [an, bn, n](Node& self) {
    const double g = self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      const double diff = an->data[i] - bn->data[i];
      const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      if (an->requires_grad) {
        an->ensure_grad();
        an->grad[i] += g * s;
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        bn->grad[i] -= g * s;
      }
    }
  });
}

Tensor weighted_softmax_ce(const Tensor& logits, const std::vector<int>& labels,
                           const std::vector<double>& class_weights) {
  if (!logits.defined() || logits.rank() != 4)
    throw ShapeError("weighted_softmax_ce logits must be rank-4 NKHW");
  const int64_t N = logits.dim(0), K = logits.dim(1), H = logits.dim(2),
                W = logits.dim(3);
  if (static_cast<int64_t>(labels.size()) != N * H * W) {
    throw ShapeError("weighted_softmax_ce labels length must be N*H*W");
  }
  if (static_cast<int64_t>(class_weights.size()) != K) {
    throw ShapeError("weighted_softmax_ce needs one weight per class");
  }
  for (double w : class_weights) {
    if (!(w > 0.0)) throw ConfigError("class weights must be positive");
  }
  for (int y : labels) {
    if (y < 0 || y >= K) {
      throw LabelRangeError("label value " + std::to_string(y) +
                            " outside [0," + std::to_string(K) + ")");
    }
  }

  const double* xd = logits.data();
  const int64_t HW = H * W;
  // Per-pixel softmax probabilities are saved for the backward pass.
  auto probs = std::make_shared<std::vector<double>>(
      static_cast<size_t>(N * K * HW));
  double total = 0.0;
  double wsum = 0.0;
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t p = 0; p < HW; ++p) {
      double mx = -1e308;
      for (int64_t k = 0; k < K; ++k)
        mx = std::max(mx, xd[(n * K + k) * HW + p]);
      double denom = 0.0;
      for (int64_t k = 0; k < K; ++k)
        denom += std::exp(xd[(n * K + k) * HW + p] - mx);
      const double lse = mx + std::log(denom);
      for (int64_t k = 0; k < K; ++k) {
        (*probs)[(n * K + k) * HW + p] =
            std::exp(xd[(n * K + k) * HW + p] - lse);
      }
      const int y = labels[n * HW + p];
      const double w = class_weights[static_cast<size_t>(y)];
      total += w * (lse - xd[(n * K + y) * HW + p]);
      wsum += w;
    }
  }
  const double loss = total / wsum;

  auto xn = logits.node();
  auto lab = std::make_shared<std::vector<int>>(labels);
  auto cw = std::make_shared<std::vector<double>>(class_weights);
  return make_op(
      {1}, {loss}, {logits}, [xn, probs, lab, cw, N, K, HW, wsum](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const double g = self.grad[0] / wsum;
        for (int64_t n = 0; n < N; ++n) {
          for (int64_t p = 0; p < HW; ++p) {
            const int y = (*lab)[n * HW + p];
            const double w = (*cw)[static_cast<size_t>(y)];
            for (int64_t k = 0; k < K; ++k) {
              const double soft = (*probs)[(n * K + k) * HW + p];
              const double onehot = (k == y) ? 1.0 : 0.0;
              xn->grad[(n * K + k) * HW + p] += g * w * (soft - onehot);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

Parameter::Parameter(std::string n, Tensor t) : name(std::move(n)), value(t) {
  value.set_requires_grad(true);
  adam_m.assign(static_cast<size_t>(value.numel()), 0.0);
  adam_v.assign(static_cast<size_t>(value.numel()), 0.0);
}

void adam_step(const std::vector<Parameter*>& params, double lr, double beta1,
               double beta2, double epsilon) {
  if (!(lr > 0.0)) throw ConfigError("adam lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("adam betas must lie in [0,1)");
  }
  for (Parameter* p : params) {
    for (double v : p->value.grad()) {
      if (!std::isfinite(v)) {
        throw NumericalError("non-finite gradient for parameter " + p->name);
      }
    }
  }
  for (Parameter* p : params) {
    const std::vector<double> g = p->value.grad();
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    double* w = p->value.data();
    for (size_t i = 0; i < g.size(); ++i) {
      p->adam_m[i] = beta1 * p->adam_m[i] + (1.0 - beta1) * g[i];
      p->adam_v[i] = beta2 * p->adam_v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = p->adam_m[i] / bc1;
      const double vhat = p->adam_v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + epsilon);
    }
  }
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->value.zero_grad();
}

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

Conv2dLayer::Conv2dLayer(const std::string& name, int64_t cin, int64_t cout,
                         int k, int stride_, int pad_, Rng& rng,
                         double init_std)
    : stride(stride_), pad(pad_) {
  std::vector<double> w(static_cast<size_t>(cout * cin * k * k));
  for (double& v : w) v = rng.normal(0.0, init_std);
  weight = Parameter(name + ".weight",
                     Tensor::from_data({cout, cin, k, k}, std::move(w)));
  bias = Parameter(name + ".bias", Tensor::zeros({cout}));
}

Tensor Conv2dLayer::forward(const Tensor& x) const {
  return conv2d(x, weight.value, bias.value, stride, pad);
}

void Conv2dLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

ConvTranspose2dLayer::ConvTranspose2dLayer(const std::string& name, int64_t cin,
                                           int64_t cout, int k, int stride_,
                                           int pad_, Rng& rng, double init_std)
    : stride(stride_), pad(pad_) {
  std::vector<double> w(static_cast<size_t>(cin * cout * k * k));
  for (double& v : w) v = rng.normal(0.0, init_std);
  weight = Parameter(name + ".weight",
                     Tensor::from_data({cin, cout, k, k}, std::move(w)));
  bias = Parameter(name + ".bias", Tensor::zeros({cout}));
}

Tensor ConvTranspose2dLayer::forward(const Tensor& x) const {
  return conv_transpose2d(x, weight.value, bias.value, stride, pad);
}

void ConvTranspose2dLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

BatchNorm2dLayer::BatchNorm2dLayer(const std::string& name, int64_t channels) {
  gamma = Parameter(name + ".gamma", Tensor::full({channels}, 1.0));
  beta = Parameter(name + ".beta", Tensor::zeros({channels}));
  stats.mean.assign(static_cast<size_t>(channels), 0.0);
  stats.var.assign(static_cast<size_t>(channels), 1.0);
}

Tensor BatchNorm2dLayer::forward(const Tensor& x, BnMode mode) {
  return batch_norm2d(x, gamma.value, beta.value, stats, mode, epsilon,
                      momentum);
}

void BatchNorm2dLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

}  // namespace edgesynth
