#include <doctest.h>

#include <cmath>
#include <random>

#include "labelflip/metrics.hpp"
#include "labelflip/serial.hpp"
#include "oracles.hpp"

using namespace labelflip;
using namespace labelflip::metrics;

TEST_CASE("dice examples") {
  Mask3D a(Dims{6, 6, 6}, std::uint8_t{0});
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x) a.at(x, y, z) = 1;
  CHECK(dice(a, a) == 1.0);
  Mask3D shifted(Dims{6, 6, 6}, std::uint8_t{0});
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 1; x < 3; ++x) shifted.at(x, y, z) = 1;
  CHECK(dice(a, shifted) == 0.5);
  Mask3D far(Dims{6, 6, 6}, std::uint8_t{0});
  far.at(5, 5, 5) = 1;
  CHECK(dice(a, far) == 0.0);
  const Mask3D none(Dims{6, 6, 6}, std::uint8_t{0});
  CHECK(dice(none, none) == 1.0);
  CHECK_THROWS_AS(dice(a, Mask3D(Dims{2, 2, 2}, std::uint8_t{0})), Error);
}

TEST_CASE("hd95 examples") {
  Mask3D a(Dims{5, 3, 3}, std::uint8_t{0}), b(Dims{5, 3, 3}, std::uint8_t{0});
  a.at(0, 0, 0) = 1;
  b.at(3, 0, 0) = 1;
  CHECK(hausdorff95(a, b) == 3.0);
  CHECK(hausdorff95(a, a) == 0.0);

  Mask3D line(Dims{24, 4, 3}, std::uint8_t{0}), moved(Dims{24, 4, 3}, std::uint8_t{0});
  for (std::size_t x = 2; x < 22; ++x) {
    line.at(x, 1, 1) = 1;
    moved.at(x, 2, 1) = 1;
  }
  CHECK(hausdorff95(line, moved) == 1.0);

  const Mask3D none(Dims{5, 3, 3}, std::uint8_t{0});
  CHECK(hausdorff95(none, none) == 0.0);
  CHECK_THROWS_AS(hausdorff95(a, none), Error);
  CHECK(hausdorff95(a, none, {373.0}) == 373.0);

  const auto r = evaluate_pair(a, none);
  CHECK(r.one_empty);
  CHECK_FALSE(r.hd95);
  CHECK(r.dice == 0.0);
  const auto both = evaluate_pair(none, none);
  CHECK(both.both_empty);
  CHECK(*both.hd95 == 0.0);
}

TEST_CASE("percentile") {
  CHECK(percentile_linear({1.0, 2.0, 3.0, 4.0, 5.0}, 0.5) == 3.0);
  CHECK(percentile_linear({0.0, 10.0}, 0.95) == doctest::Approx(9.5));
  CHECK(percentile_linear({7.0}, 0.95) == 7.0);
  CHECK_THROWS_AS(percentile_linear({}, 0.5), Error);
}

TEST_CASE("surface uses face neighbours and treats the border as background") {
  const Mask3D full(Dims{3, 3, 3}, std::uint8_t{1});
  const auto s = surface(full);
  CHECK(count_foreground(s) == 26);
  CHECK(s.at(1, 1, 1) == 0);
}

TEST_CASE("distance transform against brute force") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 10; ++t) {
    auto m = oracle::random_mask(rng, Dims{9, 7, 5}, 0.05);
    if (count_foreground(m) == 0) m[0] = 1;
    m.set_spacing({1.0, 0.7, 2.5});
    const auto d2 = squared_distance_to(m);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto a = m.coords(i);
      double best = 1e300;
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (!m[j]) continue;
        const auto b = m.coords(j);
        const double dx = (double(a[0]) - double(b[0])) * 1.0;
        const double dy = (double(a[1]) - double(b[1])) * 0.7;
        const double dz = (double(a[2]) - double(b[2])) * 2.5;
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      CHECK(d2[i] == doctest::Approx(best).epsilon(1e-12));
    }
  }
  for (const double v : squared_distance_to(Mask3D(Dims{3, 3, 3}, std::uint8_t{0}))) CHECK(std::isinf(v));
}

TEST_CASE("metrics agree with brute-force oracles") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.02, 0.6);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto a = oracle::random_mask(rng, Dims{8, 8, 8}, u(rng));
    auto b = oracle::random_mask(rng, Dims{8, 8, 8}, u(rng));
    if (count_foreground(a) == 0) a[7] = 1;
    if (count_foreground(b) == 0) b[100] = 1;
    CHECK(dice(a, b) == oracle::dice(a, b));
    worst = std::max(worst, std::fabs(hausdorff95(a, b) - oracle::hd95(a, b)));
    CHECK(hausdorff95(a, b) == serial::hausdorff95(a, b));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("metric symmetry and spacing scale") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto a = oracle::random_mask(rng, Dims{10, 9, 8}, 0.2);
    auto b = oracle::random_mask(rng, Dims{10, 9, 8}, 0.3);
    CHECK(dice(a, b) == dice(b, a));
    CHECK(hausdorff95(a, b) == hausdorff95(b, a));
    CHECK(dice(a, a) == 1.0);
    CHECK(hausdorff95(a, a) == 0.0);
    const double base = hausdorff95(a, b);
    a.set_spacing({2.0, 2.0, 2.0});
    b.set_spacing({2.0, 2.0, 2.0});
    CHECK(hausdorff95(a, b) == 2.0 * base);
  }
}
