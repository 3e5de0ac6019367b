#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "edgesynth/edges.hpp"

using namespace edgesynth;

namespace {

ImageBuffer constant_image(int w, int h, uint8_t v) {
  ImageBuffer img(w, h, 1, v);
  return img;
}

// Filled disk of the given radius, center pixel coordinates (cy, cx).
ImageBuffer disk_image(int size, double cy, double cx, double r, uint8_t fg,
                       uint8_t bg) {
  ImageBuffer img(size, size, 1, bg);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (std::hypot(y - cy, x - cx) <= r) img.at(y, x) = fg;
  return img;
}

}  // namespace

TEST_CASE("gaussian kernel is normalized with radius ceil(3 sigma)") {
  for (double sigma : {0.6, 1.0, 1.7, 2.3}) {
    const auto k = gaussian_kernel(sigma);
    CHECK(static_cast<int>(k.size()) ==
          2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1);
    double sum = 0.0;
    for (double v : k) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gaussian_kernel(0.0), ConfigError);
}

TEST_CASE("blur leaves constants untouched and matches the impulse oracle") {
  auto flat = gaussian_blur(constant_image(9, 7, 77), 1.2);
  for (double v : flat.v) CHECK(v == doctest::Approx(77.0).epsilon(1e-12));

  // Impulse at the center of a large-enough image: response is the sampled
  // separable product k[dy] * k[dx].
  const double sigma = 1.0;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size()) / 2;
  const int n = 4 * r + 1, c = n / 2;
  ImageBuffer impulse(n, n, 1, 0);
  impulse.at(c, c) = 255;
  auto resp = gaussian_blur(impulse, sigma);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      CHECK(resp.at(c + dy, c + dx) ==
            doctest::Approx(255.0 * k[static_cast<size_t>(dy + r)] *
                            k[static_cast<size_t>(dx + r)])
                .epsilon(1e-12));
}

TEST_CASE("gradient operators on a horizontal ramp") {
  FloatMap ramp(8, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(y, x) = static_cast<double>(x);

  auto sob = gradient(ramp, GradOp::Sobel);
  auto pre = gradient(ramp, GradOp::Prewitt);
  for (int y = 1; y < 5; ++y) {
    for (int x = 1; x < 7; ++x) {
      CHECK(sob.gx.at(y, x) == doctest::Approx(8.0));
      CHECK(sob.gy.at(y, x) == doctest::Approx(0.0));
      CHECK(pre.gx.at(y, x) == doctest::Approx(6.0));
    }
  }
  // magnitude invariant
  for (size_t i = 0; i < sob.magnitude.v.size(); ++i) {
    CHECK(sob.magnitude.v[i] ==
          doctest::Approx(std::hypot(sob.gx.v[i], sob.gy.v[i])));
  }

  auto rob = gradient(ramp, GradOp::Roberts);
  // Roberts gx = I(y,x) - I(y+1,x+1) = x - (x+1) = -1 in the interior.
  CHECK(rob.gx.at(2, 2) == doctest::Approx(-1.0));
  CHECK(rob.gy.at(2, 2) == doctest::Approx(1.0));

  auto zero = gradient(FloatMap(5, 5, 3.0), GradOp::Sobel);
  for (double v : zero.magnitude.v) CHECK(v == 0.0);
}

TEST_CASE("rotating the input rotates the gradient field") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0, 255);
  const int n = 10;
  FloatMap img(n, n);
  for (double& v : img.v) v = d(rng);

  FloatMap rot(n, n);  // 90 degrees clockwise: out(r,c) = in(n-1-c, r)
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) rot.at(r, c) = img.at(n - 1 - c, r);

  auto f = gradient(img, GradOp::Sobel);
  auto g = gradient(rot, GradOp::Sobel);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      // Magnitude is rotation-equivariant; gx/gy swap roles up to sign.
      CHECK(g.magnitude.at(r, c) ==
            doctest::Approx(f.magnitude.at(n - 1 - c, r)).epsilon(1e-9));
      CHECK(g.gx.at(r, c) == doctest::Approx(-f.gy.at(n - 1 - c, r)));
      CHECK(g.gy.at(r, c) == doctest::Approx(f.gx.at(n - 1 - c, r)));
    }
  }
}

TEST_CASE("non max suppression thins an ideal step to one pixel") {
  // Asymmetric step: the Sobel response peaks uniquely at column 3.
  FloatMap step(8, 8);
  const double col[8] = {0, 0, 0, 128, 255, 255, 255, 255};
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) step.at(y, x) = col[x];

  auto nms = non_max_suppression(gradient(step, GradOp::Sobel));
  for (int y = 0; y < 8; ++y) {
    int nonzero = 0;
    for (int x = 0; x < 8; ++x)
      if (nms.at(y, x) > 0.0) ++nonzero;
    CHECK(nonzero == 1);
    CHECK(nms.at(y, 3) > 0.0);
  }

  SUBCASE("constant field suppresses everything") {
    auto z = non_max_suppression(gradient(FloatMap(6, 6, 9.0), GradOp::Sobel));
    for (double v : z.v) CHECK(v == 0.0);
  }
  SUBCASE("output never exceeds input magnitude") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> d(0, 255);
    FloatMap noise(12, 12);
    for (double& v : noise.v) v = d(rng);
    auto field = gradient(noise, GradOp::Sobel);
    auto out = non_max_suppression(field);
    for (size_t i = 0; i < out.v.size(); ++i) {
      CHECK(out.v[i] <= field.magnitude.v[i]);
    }
  }
}

TEST_CASE("hysteresis follows weak chains from strong seeds") {
  FloatMap m(5, 5);
  // strong at (0,0); weak chain along the diagonal; isolated weak at (4,0)
  m.at(0, 0) = 10.0;
  m.at(1, 1) = 4.0;
  m.at(2, 2) = 4.0;
  m.at(3, 3) = 4.0;
  m.at(4, 0) = 4.0;
  auto e = hysteresis(m, 8.0, 3.0);
  CHECK(e.at(0, 0) == 255);
  CHECK(e.at(1, 1) == 255);
  CHECK(e.at(2, 2) == 255);
  CHECK(e.at(3, 3) == 255);
  CHECK(e.at(4, 0) == 0);  // weak blob not connected to any strong pixel
  CHECK(e.at(0, 4) == 0);

  SUBCASE("single strong pixel is kept") {
    FloatMap s(3, 3);
    s.at(1, 1) = 9.0;
    auto one = hysteresis(s, 5.0, 1.0);
    CHECK(one.at(1, 1) == 255);
    int count = 0;
    for (auto v : one.v) count += v == 255;
    CHECK(count == 1);
  }
  SUBCASE("all below low leaves an empty map") {
    FloatMap s(3, 3, 0.5);
    auto none = hysteresis(s, 5.0, 1.0);
    for (auto v : none.v) CHECK(v == 0);
  }
  SUBCASE("invalid thresholds throw") {
    CHECK_THROWS_AS(hysteresis(m, 2.0, 3.0), ConfigError);
  }
}

TEST_CASE("canny on a constant image yields no edges") {
  auto e = canny(constant_image(32, 32, 100), CannyParams{});
  for (auto v : e.v) CHECK(v == 0);

  // 77 is not exactly reproduced by the normalized blur weights, so the
  // whole field is float residue; the thresholds must not chase it.
  auto r = canny(constant_image(32, 32, 77), CannyParams{});
  for (auto v : r.v) CHECK(v == 0);
}

TEST_CASE("canny localizes a disk edge on the analytic circle") {
  const int n = 64;
  const double cy = 31.5, cx = 31.5, r = 18.0;
  auto img = disk_image(n, cy, cx, r, 200, 30);
  auto e = canny(img, CannyParams{});

  int count = 0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (e.at(y, x) != 255) continue;
      ++count;
      const double dist = std::hypot(y - cy, x - cx);
      CHECK(std::abs(dist - r) <= 1.0);
    }
  }
  const double circumference = 2.0 * M_PI * r;
  CHECK(count >= static_cast<int>(0.8 * circumference));
  CHECK(count <= static_cast<int>(1.2 * circumference));

  SUBCASE("contrast polarity does not move the edge") {
    ImageBuffer inv = img;
    for (auto& p : inv.pixels) p = static_cast<uint8_t>(255 - p);
    auto e2 = canny(inv, CannyParams{});
    CHECK(e2.v == e.v);
  }
  SUBCASE("raising the high quantile never adds edges") {
    CannyParams strict;
    strict.high_quantile = 0.97;
    auto e2 = canny(img, strict);
    for (size_t i = 0; i < e.v.size(); ++i) {
      if (e2.v[i] == 255) CHECK(e.v[i] == 255);
    }
  }
  SUBCASE("edge map values are binary") {
    for (auto v : e.v) CHECK((v == 0 || v == 255));
  }
}

TEST_CASE("edge map image round trip validates values") {
  EdgeMap e(3, 2);
  e.at(0, 1) = 255;
  auto img = e.to_image();
  CHECK(img.channels == 1);
  auto back = EdgeMap::from_image(img);
  CHECK(back.v == e.v);
  img.pixels[0] = 7;
  CHECK_THROWS_AS(EdgeMap::from_image(img), LabelRangeError);
}
