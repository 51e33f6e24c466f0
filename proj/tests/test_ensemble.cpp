#include <doctest.h>

#include <algorithm>
#include <random>

#include "labelflip/ensemble.hpp"
#include "labelflip/serial.hpp"

using namespace labelflip;
using namespace labelflip::ensemble;

namespace {

PredictionPair uniform_pair(Dims d, double p, double q) { return {Volume3D(d, p), Volume3D(d, q)}; }

PredictionPair random_pair(std::mt19937_64& rng, Dims d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PredictionPair pr{Volume3D(d, 0.0), Volume3D(d, 0.0)};
  for (std::size_t i = 0; i < pr.p.size(); ++i) {
    pr.p[i] = u(rng);
    pr.q[i] = 0.5 * u(rng);
  }
  return pr;
}

}  // namespace

TEST_CASE("fuse single") {
  CHECK(fuse_single(0.0, 0.0) == 0.0);
  CHECK(fuse_single(1.0, 0.0) == 1.0);
  CHECK(fuse_single(0.4, 0.3) == 0.3);
  CHECK(fuse_single(0.5, 0.1) == 0.1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double p = u(rng), q = 0.5 * u(rng);
    const double f = fuse_single(p, q);
    if (p <= 0.5) {
      CHECK((f >= 0.0 && f <= 0.5));
    } else {
      CHECK((f >= 0.5 && f <= 1.0));
    }
    const double hard = fuse_single(p, 0.0);
    CHECK((hard == 0.0 || hard == 1.0));
  }
}

TEST_CASE("two-model example averages to one half") {
  const Dims d{4, 3, 2};
  const std::vector<PredictionPair> preds = {uniform_pair(d, 0.0, 0.0), uniform_pair(d, 1.0, 0.0)};
  const auto m = ensemble_mean(preds);
  for (const double v : m.values()) CHECK(v == 0.5);
}

TEST_CASE("ensemble mean examples") {
  const Dims d{2, 2, 2};
  const double eps = 1e-7;
  const std::vector<PredictionPair> confident = {uniform_pair(d, 1.0 - eps, eps)};
  const auto c = ensemble_mean(confident);
  for (const double v : c.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

  // Fused values 0.2, 0.4 and 0.9.
  const std::vector<PredictionPair> three = {uniform_pair(d, 0.1, 0.2), uniform_pair(d, 0.3, 0.4),
                                             uniform_pair(d, 0.8, 0.1)};
  const auto t = ensemble_mean(three);
  for (const double v : t.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(ensemble_mean(std::vector<PredictionPair>{}), Error);
  const std::vector<PredictionPair> mismatch = {uniform_pair(d, 0.1, 0.1), uniform_pair(Dims{3, 2, 2}, 0.1, 0.1)};
  CHECK_THROWS_AS(ensemble_mean(mismatch), Error);
}

TEST_CASE("ensemble mean is permutation invariant and idempotent") {
  std::mt19937_64 rng(6);
  const Dims d{6, 5, 4};
  std::vector<PredictionPair> preds;
  for (int i = 0; i < 5; ++i) preds.push_back(random_pair(rng, d));
  const auto base = ensemble_mean(preds);
  CHECK(base == serial::ensemble_mean(preds));
  for (int t = 0; t < 10; ++t) {
    std::shuffle(preds.begin(), preds.end(), rng);
    CHECK(ensemble_mean(preds) == base);
  }
  const auto single = random_pair(rng, d);
  const std::vector<PredictionPair> repeated(7, single);
  CHECK(ensemble_mean(repeated) == fuse_volume(single));
}

TEST_CASE("ensemble with flips") {
  std::mt19937_64 rng(12);
  const Dims d{5, 4, 3};
  const std::vector<PredictionPair> preds = {random_pair(rng, d), random_pair(rng, d)};
  CHECK(ensemble_with_flips(preds, std::vector<Axis>{}) == ensemble_mean(preds));

  const auto one = random_pair(rng, d);
  const PredictionPair mirrored{flip_axis(one.p, Axis::X), flip_axis(one.q, Axis::X)};
  const std::vector<FlippedPrediction> both = {{one, {}}, {mirrored, {Axis::X}}};
  CHECK(ensemble_with_flips(both) == fuse_volume(one));

  const std::vector<FlippedPrediction> self_and_copy = {{one, {}}, {one, {Axis::X}}};
  const auto fused = fuse_volume(one);
  const auto mirror = flip_axis(fused, Axis::X);
  const auto got = ensemble_with_flips(self_and_copy);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(0.5 * (fused[i] + mirror[i])).epsilon(1e-15));

  const PredictionPair sym{Volume3D(Dims{4, 1, 1}, std::vector<double>{0.1, 0.9, 0.9, 0.1}),
                           Volume3D(Dims{4, 1, 1}, std::vector<double>{0.2, 0.1, 0.1, 0.2})};
  const std::vector<PredictionPair> sv = {sym};
  const std::vector<Axis> ax = {Axis::X};
  CHECK(ensemble_with_flips(sv, ax) == ensemble_mean(sv));

  const std::vector<FlippedPrediction> xz = {{PredictionPair{flip_axis(flip_axis(one.p, Axis::X), Axis::Z),
                                                             flip_axis(flip_axis(one.q, Axis::X), Axis::Z)},
                                              {Axis::X, Axis::Z}}};
  CHECK(ensemble_with_flips(xz) == fuse_volume(one));
}

TEST_CASE("prediction pair validation") {
  const Dims d{2, 1, 1};
  CHECK_THROWS_AS(uniform_pair(d, 1.2, 0.1).validate(), Error);
  CHECK_THROWS_AS(uniform_pair(d, 0.5, 0.6).validate(), Error);
  CHECK_NOTHROW(uniform_pair(d, 0.5, 0.5).validate());
}
