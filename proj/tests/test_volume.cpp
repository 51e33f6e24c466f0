#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "labelflip/serial.hpp"
#include "labelflip/volume.hpp"
#include "oracles.hpp"

using namespace labelflip;

TEST_CASE("grid shape checks") {
  CHECK_THROWS_AS(Volume3D(Dims{0, 1, 1}, 0.0), Error);
  CHECK_THROWS_AS(Volume3D(Dims{2, 1, 1}, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(Volume3D(Dims{1, 1, 1}, std::vector<double>{NAN}), Error);
  CHECK_THROWS_AS(Volume3D(Dims{1, 1, 1}, 0.0, Spacing{0.0, 1.0, 1.0}), Error);
  const Volume3D v(Dims{3, 4, 5}, 0.0);
  CHECK(v.index(1, 2, 3) == 1 + 3 * (2 + 4 * 3));
  CHECK(v.coords(v.index(2, 3, 4)) == std::array<std::size_t, 3>{2, 3, 4});
}

TEST_CASE("standardize nonzero") {
  const Volume3D v(Dims{5, 1, 1}, std::vector<double>{0.0, 1.0, 2.0, 0.0, 3.0});
  const auto s = standardize_nonzero(v);
  const double r = 1.0 / std::sqrt(2.0 / 3.0);
  CHECK(s.volume[0] == 0.0);
  CHECK(s.volume[3] == 0.0);
  CHECK(s.volume[1] == doctest::Approx(-r).epsilon(1e-12));
  CHECK(s.volume[2] == doctest::Approx(0.0));
  CHECK(s.volume[4] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK_FALSE(s.warning);

  // Idempotent once no foreground voxel lands on exactly zero.
  const auto once = standardize_nonzero(Volume3D(Dims{5, 1, 1}, std::vector<double>{0.0, 1.0, 2.0, 0.0, 4.0}));
  const auto twice = standardize_nonzero(once.volume);
  for (std::size_t i = 0; i < 5; ++i) CHECK(twice.volume[i] == doctest::Approx(once.volume[i]).epsilon(1e-12));

  const auto flat = standardize_nonzero(Volume3D(Dims{3, 1, 1}, std::vector<double>{5.0, 5.0, 5.0}));
  CHECK(flat.volume.raw() == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(flat.warning);

  CHECK_THROWS_WITH_AS(standardize_nonzero(Volume3D(Dims{2, 2, 2}, 0.0)), "no foreground intensities", Error);
}

TEST_CASE("standardize moments and serial agreement") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(100.0, 15.0);
  std::bernoulli_distribution zero(0.3);
  Volume3D v(Dims{20, 20, 20}, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = zero(rng) ? 0.0 : n(rng);
  const auto s = standardize_nonzero(v);
  double sum = 0.0, ss = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) {
      CHECK(s.volume[i] == 0.0);
      continue;
    }
    sum += s.volume[i];
    ss += s.volume[i] * s.volume[i];
    ++k;
  }
  const double mean = sum / static_cast<double>(k);
  CHECK(std::fabs(mean) < 1e-5);
  CHECK(std::fabs(std::sqrt(ss / static_cast<double>(k) - mean * mean) - 1.0) < 1e-5);
  const auto ref = serial::standardize_nonzero(v);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(s.volume[i] == doctest::Approx(ref.volume[i]).epsilon(1e-12));
}

TEST_CASE("connected components examples") {
  const Mask3D empty(Dims{4, 4, 4}, std::uint8_t{0});
  CHECK(connected_components(empty).component_count() == 0);

  Mask3D one(Dims{4, 4, 4}, std::uint8_t{0});
  one.at(1, 2, 3) = 1;
  const auto l1 = connected_components(one);
  CHECK(l1.component_count() == 1);
  CHECK(l1.size_of(1) == 1);

  Mask3D diag(Dims{2, 2, 2}, std::uint8_t{0});
  diag.at(0, 0, 0) = 1;
  diag.at(1, 1, 1) = 1;
  CHECK(connected_components(diag, Connectivity::Corner26).component_count() == 1);
  CHECK(connected_components(diag, Connectivity::Face6).component_count() == 2);
  CHECK(connected_components(diag, Connectivity::Edge18).component_count() == 2);
  Mask3D edge(Dims{2, 2, 1}, std::uint8_t{0});
  edge.at(0, 0, 0) = 1;
  edge.at(1, 1, 0) = 1;
  CHECK(connected_components(edge, Connectivity::Edge18).component_count() == 1);
  CHECK(connected_components(edge, Connectivity::Face6).component_count() == 2);
}

TEST_CASE("connected components agree with flood fill") {
  std::mt19937_64 rng(17);
  for (const auto c : {Connectivity::Face6, Connectivity::Edge18, Connectivity::Corner26}) {
    for (int t = 0; t < 60; ++t) {
      const auto m = oracle::random_mask(rng, Dims{8, 8, 8}, 0.1 + 0.005 * t);
      const auto got = connected_components(m, c);
      const auto want = oracle::flood_fill_labels(m, c);
      REQUIRE(got.labels == want);
      std::size_t total = 0;
      for (std::uint32_t k = 1; k <= got.component_count(); ++k) {
        const auto n = static_cast<std::size_t>(std::count(want.begin(), want.end(), k));
        CHECK(got.size_of(k) == n);
        total += n;
      }
      CHECK(total == count_foreground(m));
    }
  }
}

TEST_CASE("remove small components") {
  Mask3D m(Dims{30, 3, 3}, std::uint8_t{0});
  for (std::size_t x = 0; x < 9; ++x) m.at(x, 0, 0) = 1;
  for (std::size_t x = 15; x < 25; ++x) m.at(x, 0, 0) = 1;
  const auto kept = remove_small_components(m, 10);
  CHECK(count_foreground(kept) == 10);
  CHECK(kept.at(15, 0, 0) == 1);
  CHECK(kept.at(0, 0, 0) == 0);
  CHECK(remove_small_components(m, 0) == m);

  Mask3D five(Dims{10, 10, 10}, std::uint8_t{0});
  for (std::size_t x = 0; x < 5; ++x) five.at(x, 4, 4) = 1;
  CHECK(count_foreground(remove_small_components(five, 10)) == 0);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto r = oracle::random_mask(rng, Dims{12, 12, 12}, 0.2);
    const auto once = remove_small_components(r, 6, Connectivity::Face6);
    CHECK(remove_small_components(once, 6, Connectivity::Face6) == once);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK((once[i] == 0 || r[i] == 1));
  }
}

TEST_CASE("flip axis") {
  const Volume3D ab(Dims{2, 1, 1}, std::vector<double>{1.0, 2.0});
  CHECK(flip_axis(ab, Axis::X).raw() == std::vector<double>{2.0, 1.0});

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Volume3D v(Dims{5, 4, 3}, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(rng);
  for (const auto a : {Axis::X, Axis::Y, Axis::Z}) {
    const auto f = flip_axis(v, a);
    CHECK(flip_axis(f, a) == v);
    auto x = f.raw(), y = v.raw();
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    CHECK(x == y);
  }
  Volume3D sym(Dims{4, 2, 1}, std::vector<double>{1, 2, 2, 1, 3, 4, 4, 3});
  CHECK(flip_axis(sym, Axis::X) == sym);
  CHECK(parse_axis('z') == Axis::Z);
  CHECK_THROWS_AS(parse_axis('w'), Error);
}

TEST_CASE("connectivity names") {
  CHECK(parse_connectivity("face6") == Connectivity::Face6);
  CHECK(parse_connectivity(to_string(Connectivity::Edge18)) == Connectivity::Edge18);
  CHECK(parse_connectivity("26") == Connectivity::Corner26);
  CHECK_THROWS_AS(parse_connectivity("4"), Error);
  CHECK(neighbour_offsets(Connectivity::Face6).size() == 6);
  CHECK(neighbour_offsets(Connectivity::Edge18).size() == 18);
  CHECK(neighbour_offsets(Connectivity::Corner26).size() == 26);
}
