#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "edgesynth/checkpoint.hpp"
#include "edgesynth/nn.hpp"
#include "edgesynth/rng.hpp"
#include "edgesynth/tensor.hpp"
#include "gradcheck_suite.hpp"
#include "oracles.hpp"

using namespace edgesynth;

TEST_CASE("tensor factories and accessors") {
  auto z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.rank() == 2);
  CHECK(z[4] == 0.0);

  auto f = Tensor::full({2}, 1.5);
  CHECK(f[0] == 1.5);
  CHECK(f[1] == 1.5);

  auto s = Tensor::scalar(3.0);
  CHECK(s.item() == 3.0);
  CHECK_THROWS_AS(z.item(), ShapeError);

  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({-1}), ShapeError);
}

TEST_CASE("backward basics") {
  auto x = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
  auto y = sum(mul(x, x));
  backward(y);
  auto g = x.grad();
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(4.0));
  CHECK(g[2] == doctest::Approx(6.0));

  SUBCASE("backward on non-scalar throws") {
    auto v = add(x, x);
    CHECK_THROWS_AS(backward(v), ShapeError);
  }
  SUBCASE("double backward on same root throws") {
    CHECK_THROWS_AS(backward(y), GradientStateError);
  }
  SUBCASE("zero_grad clears accumulation") {
    x.zero_grad();
    CHECK_FALSE(x.has_grad());
    auto y2 = sum(x);
    backward(y2);
    CHECK(x.grad()[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("shared subexpression accumulates once per path") {
  auto x = Tensor::from_data({1}, {2.0}, true);
  auto a = mul(x, x);       // x^2
  auto y = add(a, a);       // 2 x^2 -> dy/dx = 4x = 8
  backward(y);
  CHECK(x.grad()[0] == doctest::Approx(8.0));
}

TEST_CASE("NoGradGuard suppresses taping") {
  auto x = Tensor::from_data({2}, {1.0, 2.0}, true);
  {
    NoGradGuard g;
    CHECK_FALSE(grad_enabled());
    auto y = sum(mul(x, x));
    CHECK_FALSE(y.requires_grad());
    CHECK_THROWS_AS(backward(y), GradientStateError);
  }
  CHECK(grad_enabled());
}

TEST_CASE("elementwise shape mismatch throws") {
  auto a = Tensor::zeros({2, 2});
  auto b = Tensor::zeros({4});
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(sub(a, b), ShapeError);
  CHECK_THROWS_AS(mul(a, b), ShapeError);
}

TEST_CASE("activation values") {
  auto x = Tensor::from_data({4}, {-2.0, 0.0, 3.0, -1.0});
  auto r = relu(x);
  CHECK(r[0] == 0.0);
  CHECK(r[2] == 3.0);
  auto l = leaky_relu(x, 0.2);
  CHECK(l[0] == doctest::Approx(-0.4));
  CHECK(l[2] == 3.0);
  CHECK_THROWS_AS(leaky_relu(x, 1.5), ConfigError);
  auto t = tanh_act(x);
  CHECK(t[1] == 0.0);
  CHECK(t[2] == doctest::Approx(std::tanh(3.0)));
  auto s = sigmoid_act(x);
  CHECK(s[1] == doctest::Approx(0.5));
  CHECK(s[2] == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));
  CHECK(activation(x, Act::Relu)[2] == 3.0);
}

TEST_CASE("conv2d matches the naive oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int rep = 0; rep < 8; ++rep) {
    const int64_t N = 1 + rep % 2, Ci = 1 + rep % 3, Co = 1 + (rep + 1) % 3;
    const int64_t H = 4 + rep % 3, W = 5, K = 1 + rep % 3;
    const int stride = 1 + rep % 2, pad = rep % 3;
    if (H + 2 * pad < K || W + 2 * pad < K) continue;
    std::vector<double> xv(static_cast<size_t>(N * Ci * H * W));
    std::vector<double> wv(static_cast<size_t>(Co * Ci * K * K));
    std::vector<double> bv(static_cast<size_t>(Co));
    for (auto& v : xv) v = d(rng);
    for (auto& v : wv) v = d(rng);
    for (auto& v : bv) v = d(rng);
    int64_t Ho, Wo;
    auto want = oracles::naive_conv2d(xv, N, Ci, H, W, wv, Co, K, &bv, stride,
                                      pad, Ho, Wo);
    auto got = conv2d(Tensor::from_data({N, Ci, H, W}, xv),
                      Tensor::from_data({Co, Ci, K, K}, wv),
                      Tensor::from_data({Co}, bv), stride, pad);
    REQUIRE(got.shape() == Shape{N, Co, Ho, Wo});
    for (int64_t i = 0; i < got.numel(); ++i) {
      CHECK(got[i] == doctest::Approx(want[static_cast<size_t>(i)])
                          .epsilon(1e-12));
    }
  }
}

TEST_CASE("conv2d without bias and shape validation") {
  auto x = Tensor::zeros({1, 2, 4, 4});
  auto w = Tensor::zeros({3, 2, 3, 3});
  auto y = conv2d(x, w, Tensor(), 1, 0);
  CHECK(y.shape() == Shape{1, 3, 2, 2});
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({3, 1, 3, 3}), Tensor(), 1, 0),
                  ShapeError);
  CHECK_THROWS_AS(conv2d(x, w, Tensor::zeros({4}), 1, 0), ShapeError);
  CHECK_THROWS_AS(conv2d(x, w, Tensor(), 0, 0), ConfigError);
  CHECK_THROWS_AS(conv2d(x, w, Tensor(), 1, -1), ConfigError);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 2, 2, 2}), w, Tensor(), 1, 0),
                  ShapeError);
}

TEST_CASE("conv2d with flipped kernel and pad k-1 is full convolution") {
  // Full convolution y[t] = sum_tau x[tau] * w[t - tau], computed directly.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1, 1);
  const int64_t H = 5, W = 4, K = 3;
  std::vector<double> xv(static_cast<size_t>(H * W)), wv(static_cast<size_t>(K * K));
  for (auto& v : xv) v = d(rng);
  for (auto& v : wv) v = d(rng);

  const int64_t Ho = H + K - 1, Wo = W + K - 1;
  std::vector<double> want(static_cast<size_t>(Ho * Wo), 0.0);
  for (int64_t ty = 0; ty < Ho; ++ty)
    for (int64_t tx = 0; tx < Wo; ++tx)
      for (int64_t sy = 0; sy < H; ++sy)
        for (int64_t sx = 0; sx < W; ++sx) {
          const int64_t ky = ty - sy, kx = tx - sx;
          if (ky < 0 || ky >= K || kx < 0 || kx >= K) continue;
          want[static_cast<size_t>(ty * Wo + tx)] +=
              xv[static_cast<size_t>(sy * W + sx)] *
              wv[static_cast<size_t>(ky * K + kx)];
        }

  std::vector<double> wflip(wv.size());
  for (int64_t ky = 0; ky < K; ++ky)
    for (int64_t kx = 0; kx < K; ++kx)
      wflip[static_cast<size_t>(ky * K + kx)] =
          wv[static_cast<size_t>((K - 1 - ky) * K + (K - 1 - kx))];

  auto got = conv2d(Tensor::from_data({1, 1, H, W}, xv),
                    Tensor::from_data({1, 1, K, K}, wflip), Tensor(), 1,
                    static_cast<int>(K) - 1);
  REQUIRE(got.shape() == Shape{1, 1, Ho, Wo});
  for (int64_t i = 0; i < got.numel(); ++i)
    CHECK(got[i] == doctest::Approx(want[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("conv_transpose2d matches the naive oracle") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int rep = 0; rep < 8; ++rep) {
    const int64_t N = 1 + rep % 2, Ci = 1 + rep % 3, Co = 1 + (rep + 1) % 2;
    const int64_t H = 2 + rep % 3, W = 3, K = 2 + rep % 2;
    const int stride = 1 + rep % 2, pad = rep % static_cast<int>(K);
    std::vector<double> xv(static_cast<size_t>(N * Ci * H * W));
    std::vector<double> wv(static_cast<size_t>(Ci * Co * K * K));
    std::vector<double> bv(static_cast<size_t>(Co));
    for (auto& v : xv) v = d(rng);
    for (auto& v : wv) v = d(rng);
    for (auto& v : bv) v = d(rng);
    int64_t Ho, Wo;
    auto want = oracles::naive_conv_transpose2d(xv, N, Ci, H, W, wv, Co, K, &bv,
                                                stride, pad, Ho, Wo);
    auto got = conv_transpose2d(Tensor::from_data({N, Ci, H, W}, xv),
                                Tensor::from_data({Ci, Co, K, K}, wv),
                                Tensor::from_data({Co}, bv), stride, pad);
    REQUIRE(got.shape() == Shape{N, Co, Ho, Wo});
    for (int64_t i = 0; i < got.numel(); ++i) {
      CHECK(got[i] == doctest::Approx(want[static_cast<size_t>(i)])
                          .epsilon(1e-12));
    }
  }
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  // <conv2d(x, W), y> == <x, conv_transpose2d(y, W)> for shared bias-free W.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int rep = 0; rep < 5; ++rep) {
    const int64_t N = 2, Ci = 2, Co = 3, K = 3;
    const int stride = 1 + rep % 2, pad = rep % 2;
    // Sizes where (H + 2*pad - K) divides by stride, so the transpose lands
    // back on the input grid exactly.
    const int64_t H = K - 2 * pad + stride * 3;
    const int64_t W = K - 2 * pad + stride * 2;
    std::vector<double> xv(static_cast<size_t>(N * Ci * H * W));
    std::vector<double> wv(static_cast<size_t>(Co * Ci * K * K));
    for (auto& v : xv) v = d(rng);
    for (auto& v : wv) v = d(rng);
    auto x = Tensor::from_data({N, Ci, H, W}, xv);
    auto wfwd = Tensor::from_data({Co, Ci, K, K}, wv);
    auto cx = conv2d(x, wfwd, Tensor(), stride, pad);

    std::vector<double> yv(static_cast<size_t>(cx.numel()));
    for (auto& v : yv) v = d(rng);
    auto y = Tensor::from_data(cx.shape(), yv);

    // conv_transpose2d weights are [Cin=Co, Cout=Ci, k, k]: reindex W.
    std::vector<double> wt(wv.size());
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t ci = 0; ci < Ci; ++ci)
        for (int64_t i = 0; i < K * K; ++i)
          wt[static_cast<size_t>((co * Ci + ci) * K * K + i)] =
              wv[static_cast<size_t>((co * Ci + ci) * K * K + i)];
    auto ty = conv_transpose2d(y, Tensor::from_data({Co, Ci, K, K}, wt),
                               Tensor(), stride, pad);
    REQUIRE(ty.shape() == x.shape());

    double lhs = 0.0, rhs = 0.0;
    for (int64_t i = 0; i < cx.numel(); ++i) lhs += cx[i] * y[i];
    for (int64_t i = 0; i < x.numel(); ++i) rhs += x[i] * ty[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("batch_norm2d train normalizes and tracks running stats") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> d(-3, 3);
  const int64_t N = 3, C = 2, H = 4, W = 4;
  std::vector<double> xv(static_cast<size_t>(N * C * H * W));
  for (auto& v : xv) v = d(rng);
  auto x = Tensor::from_data({N, C, H, W}, xv);
  auto gamma = Tensor::full({C}, 1.0);
  auto beta = Tensor::zeros({C});
  BnStats st;
  auto y = batch_norm2d(x, gamma, beta, st, BnMode::Train);

  const int64_t m = N * H * W;
  for (int64_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0;
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < H * W; ++i)
        mean += y[((n * C + c) * H * W) + i];
    mean /= static_cast<double>(m);
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < H * W; ++i) {
        const double dv = y[((n * C + c) * H * W) + i] - mean;
        var += dv * dv;
      }
    var /= static_cast<double>(m);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps shrinks it a bit

    // Running stats: momentum 0.1 fold of batch mean and unbiased variance.
    double bm = 0.0, bv = 0.0;
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < H * W; ++i)
        bm += xv[static_cast<size_t>((n * C + c) * H * W + i)];
    bm /= static_cast<double>(m);
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < H * W; ++i) {
        const double dv = xv[static_cast<size_t>((n * C + c) * H * W + i)] - bm;
        bv += dv * dv;
      }
    bv /= static_cast<double>(m - 1);
    CHECK(st.mean[static_cast<size_t>(c)] == doctest::Approx(0.1 * bm));
    CHECK(st.var[static_cast<size_t>(c)] ==
          doctest::Approx(0.9 * 1.0 + 0.1 * bv));
  }
  CHECK(st.initialized);

  SUBCASE("eval mode uses the running stats") {
    auto z = batch_norm2d(x, gamma, beta, st, BnMode::Eval);
    const double inv = 1.0 / std::sqrt(st.var[0] + 1e-5);
    CHECK(z[0] == doctest::Approx((xv[0] - st.mean[0]) * inv));
  }
  SUBCASE("degenerate batch throws") {
    auto one = Tensor::zeros({1, C, 1, 1});
    BnStats s2;
    CHECK_THROWS_AS(batch_norm2d(one, gamma, beta, s2, BnMode::Train),
                    DegenerateBatchError);
  }
  SUBCASE("eval before stats exist throws") {
    BnStats s3;
    CHECK_THROWS_AS(batch_norm2d(x, gamma, beta, s3, BnMode::Eval),
                    ConfigError);
  }
}

TEST_CASE("max_pool2d, upsample_nearest, concat_channels values") {
  auto x = Tensor::from_data({1, 1, 2, 4},
                             {1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 8.0, 6.0});
  auto p = max_pool2d(x, 2, 2);
  CHECK(p.shape() == Shape{1, 1, 1, 2});
  CHECK(p[0] == 5.0);
  CHECK(p[1] == 8.0);
  CHECK_THROWS_AS(max_pool2d(x, 3, 1), ShapeError);
  CHECK_THROWS_AS(max_pool2d(x, 0, 1), ConfigError);

  auto u = upsample_nearest(Tensor::from_data({1, 1, 1, 2}, {1.0, 2.0}), 2);
  CHECK(u.shape() == Shape{1, 1, 2, 4});
  CHECK(u[0] == 1.0);
  CHECK(u[1] == 1.0);
  CHECK(u[2] == 2.0);
  CHECK(u[7] == 2.0);

  auto a = Tensor::full({1, 1, 2, 2}, 1.0);
  auto b = Tensor::full({1, 2, 2, 2}, 2.0);
  auto c = concat_channels({a, b});
  CHECK(c.shape() == Shape{1, 3, 2, 2});
  CHECK(c[0] == 1.0);
  CHECK(c[4] == 2.0);
  CHECK(c[11] == 2.0);
  CHECK_THROWS_AS(concat_channels({a, Tensor::zeros({1, 1, 3, 2})}),
                  ShapeError);
}

TEST_CASE("loss values match direct formulas") {
  auto logits = Tensor::from_data({4}, {0.5, -1.0, 2.0, 0.0});
  auto target = Tensor::from_data({4}, {1.0, 0.0, 1.0, 1.0});
  double want = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double xv = logits[i], t = target[i];
    want += std::max(xv, 0.0) - xv * t + std::log1p(std::exp(-std::abs(xv)));
  }
  want /= 4.0;
  CHECK(bce_with_logits(logits, target).item() == doctest::Approx(want));

  auto pred = Tensor::from_data({3}, {1.0, -2.0, 0.5});
  auto tg = Tensor::from_data({3}, {0.0, 1.0, 0.5});
  CHECK(l1_loss(pred, tg).item() == doctest::Approx((1.0 + 3.0 + 0.0) / 3.0));

  // weighted CE: hand computation on a single pixel, two classes
  auto lg = Tensor::from_data({1, 2, 1, 1}, {1.0, -1.0});
  const double lse = std::log(std::exp(1.0) + std::exp(-1.0));
  const std::vector<double> w{0.674, 1.933};
  const double ce1 = weighted_softmax_ce(lg, {1}, w).item();
  CHECK(ce1 == doctest::Approx((lse - (-1.0))));  // weight cancels: w*(...)/w
  const double ce0 = weighted_softmax_ce(lg, {0}, w).item();
  CHECK(ce0 == doctest::Approx((lse - 1.0)));
  CHECK_THROWS_AS(weighted_softmax_ce(lg, {2}, w), LabelRangeError);
  CHECK_THROWS_AS(weighted_softmax_ce(lg, {0, 1}, w), ShapeError);
  CHECK_THROWS_AS(weighted_softmax_ce(lg, {0}, {0.674}), ShapeError);

  // two pixels with different labels: total / sum of applied weights
  auto lg2 = Tensor::from_data({1, 2, 1, 2}, {1.0, 0.5, -1.0, 0.25});
  const double l0 = std::log(std::exp(1.0) + std::exp(-1.0)) - 1.0;     // y=0
  const double l1 = std::log(std::exp(0.5) + std::exp(0.25)) - 0.25;    // y=1
  const double wantce = (w[0] * l0 + w[1] * l1) / (w[0] + w[1]);
  CHECK(weighted_softmax_ce(lg2, {0, 1}, w).item() == doctest::Approx(wantce));
}

TEST_CASE("adam first step has the closed form") {
  Parameter p("p", Tensor::from_data({2}, {1.0, -1.0}));
  auto loss = sum(mul(p.value, Tensor::from_data({2}, {0.3, -0.7})));
  backward(loss);
  const double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  adam_step({&p}, lr, b1, b2, eps);
  // First step: mhat = g, vhat = g^2 -> update lr*g/(|g|+eps).
  CHECK(p.value[0] == doctest::Approx(1.0 - lr * 0.3 / (0.3 + eps)));
  CHECK(p.value[1] == doctest::Approx(-1.0 - lr * (-0.7) / (0.7 + eps)));
  CHECK(p.step_count == 1);

  SUBCASE("non-finite gradient raises NumericalError") {
    Parameter q("q", Tensor::from_data({1}, {
      0.0}));
    auto bad = mul(q.value, Tensor::from_data({1}, {1.0}));
    auto l2 = sum(scale(bad, std::numeric_limits<double>::infinity()));
    backward(l2);
    CHECK_THROWS_AS(adam_step({&q}, lr, b1, b2, eps), NumericalError);
  }
  SUBCASE("invalid hyperparameters raise ConfigError") {
    CHECK_THROWS_AS(adam_step({&p}, -1.0, b1, b2, eps), ConfigError);
    CHECK_THROWS_AS(adam_step({&p}, lr, 1.0, b2, eps), ConfigError);
  }
}

TEST_CASE("layer wrappers initialize and collect parameters") {
  Rng rng(42);
  Conv2dLayer conv("enc1", 3, 8, 4, 2, 1, rng);
  CHECK(conv.weight.value.shape() == Shape{8, 3, 4, 4});
  CHECK(conv.bias.value.shape() == Shape{8});
  CHECK(conv.weight.value.requires_grad());
  double mx = 0.0;
  for (int64_t i = 0; i < conv.weight.value.numel(); ++i)
    mx = std::max(mx, std::abs(conv.weight.value[i]));
  CHECK(mx > 0.0);      // actually randomized
  CHECK(mx < 0.2);      // plausible for N(0, 0.02)
  CHECK(conv.bias.value[0] == 0.0);

  auto y = conv.forward(Tensor::zeros({2, 3, 16, 16}));
  CHECK(y.shape() == Shape{2, 8, 8, 8});

  ConvTranspose2dLayer up("dec1", 8, 3, 4, 2, 1, rng);
  CHECK(up.weight.value.shape() == Shape{8, 3, 4, 4});
  auto z = up.forward(y);
  CHECK(z.shape() == Shape{2, 3, 16, 16});

  BatchNorm2dLayer bn("bn1", 8);
  CHECK(bn.gamma.value[3] == 1.0);
  CHECK(bn.beta.value[3] == 0.0);
  auto n = bn.forward(y, BnMode::Train);
  CHECK(n.shape() == y.shape());
  CHECK(bn.stats.initialized);

  std::vector<Parameter*> params;
  conv.collect(params);
  up.collect(params);
  bn.collect(params);
  CHECK(params.size() == 6);
  CHECK(params[0]->name == "enc1.weight");
  CHECK(params[5]->name == "bn1.beta");
}

TEST_CASE("gradient checks across all ops stay under 1e-4") {
  const auto results = gradsuite::run_all();
  REQUIRE(results.size() > 0);
  for (const auto& r : results) {
    INFO(r.name);
    CHECK(r.max_rel < 1e-4);
  }
}

TEST_CASE("rng determinism and helpers") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(124);
  CHECK(a.uniform() != c.uniform());

  Rng d(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = d.uniform(2.0, 3.0);
    CHECK(u >= 2.0);
    CHECK(u < 3.0);
    const int64_t k = d.uniform_int(-2, 7);
    CHECK(k >= -2);
    CHECK(k <= 7);
  }
  CHECK(Rng::mix(1, 0) != Rng::mix(1, 1));
  CHECK(Rng::mix(1, 0) != Rng::mix(2, 0));
  CHECK(Rng::mix(9, 9) == Rng::mix(9, 9));

  // normal() consumes a fixed number of draws regardless of branch
  Rng e(77);
  double m = 0.0;
  const int n = 20000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = e.normal(0.0, 1.0);
    m += xs[i];
  }
  m /= n;
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  var /= n;
  CHECK(std::abs(m) < 0.03);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("checkpoint round trip is exact and validates") {
  const std::string path = "test_ckpt.bin";
  std::vector<CheckpointRecord> recs;
  recs.push_back({"g.enc1.weight", {2, 3, 4, 4}, std::vector<double>(96)});
  recs.push_back({"g.enc1.bias", {2}, {1.5, -2.25}});
  recs.push_back({"bn.running_mean", {3}, {0.0, 1e-300, -3.7}});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-10, 10);
  for (auto& v : recs[0].data) v = d(rng);

  save_checkpoint(path, recs);
  auto back = load_checkpoint(path);
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == recs[i].name);
    CHECK(back[i].shape == recs[i].shape);
    REQUIRE(back[i].data.size() == recs[i].data.size());
    for (size_t j = 0; j < recs[i].data.size(); ++j)
      CHECK(back[i].data[j] == recs[i].data[j]);  // bit-exact
  }

  SUBCASE("re-saving produces identical bytes") {
    save_checkpoint("test_ckpt2.bin", back);
    std::ifstream f1(path, std::ios::binary), f2("test_ckpt2.bin",
                                                 std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)),
                   std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)),
                   std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    std::remove("test_ckpt2.bin");
  }
  SUBCASE("bad magic throws") {
    std::ofstream f("test_ckpt_bad.bin", std::ios::binary);
    f << "NOTMAGIC" << std::string(16, '\0');
    f.close();
    CHECK_THROWS_AS(load_checkpoint("test_ckpt_bad.bin"), CheckpointError);
    std::remove("test_ckpt_bad.bin");
  }
  SUBCASE("truncation throws") {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out("test_ckpt_trunc.bin", std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 9));
    out.close();
    CHECK_THROWS_AS(load_checkpoint("test_ckpt_trunc.bin"), CheckpointError);
    std::remove("test_ckpt_trunc.bin");
  }
  SUBCASE("trailing bytes throw") {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "x";
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("missing file throws IoError") {
    CHECK_THROWS_AS(load_checkpoint("no_such_file.bin"), IoError);
  }
  std::remove(path.c_str());
}
