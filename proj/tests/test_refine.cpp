#include <doctest.h>

#include <random>

#include "labelflip/metrics.hpp"
#include "labelflip/phantom.hpp"
#include "labelflip/refine.hpp"
#include "labelflip/serial.hpp"

using namespace labelflip;
using namespace labelflip::refine;

namespace {

bool subset(const Mask3D& a, const Mask3D& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

Volume3D random_probs(std::mt19937_64& rng, Dims d, double scale) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Volume3D v(d, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * u(rng);
  return v;
}

}  // namespace

TEST_CASE("threshold mask") {
  const Dims d{3, 3, 3};
  CHECK(count_foreground(threshold_mask(Volume3D(d, 0.4), 0.5)) == 0);
  CHECK(count_foreground(threshold_mask(Volume3D(d, 0.4), 0.05)) == d.voxels());
  CHECK(count_foreground(threshold_mask(Volume3D(d, 0.5), 0.5)) == 0);
  std::mt19937_64 rng(1);
  const auto p = random_probs(rng, Dims{20, 20, 20}, 1.0);
  CHECK(threshold_mask(p, 0.37) == serial::threshold_mask(p, 0.37));
}

TEST_CASE("mean region confidence") {
  const Volume3D p(Dims{3, 1, 1}, std::vector<double>{0.9, 1.0, 0.2});
  const Mask3D m(Dims{3, 1, 1}, std::vector<std::uint8_t>{1, 1, 0});
  CHECK(*mean_region_confidence(p, m) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK_FALSE(mean_region_confidence(p, Mask3D(Dims{3, 1, 1}, std::uint8_t{0})));
  CHECK(*mean_region_confidence(Volume3D(Dims{4, 4, 4}, 0.7), Mask3D(Dims{4, 4, 4}, std::uint8_t{1})) ==
        doctest::Approx(0.7));
  CHECK_THROWS_AS(mean_region_confidence(p, Mask3D(Dims{2, 1, 1}, std::uint8_t{1})), Error);
}

TEST_CASE("refine region on a confident core") {
  auto spec = phantom::hgg_like(4);
  const auto ph = phantom::generate_phantom(spec);
  const RefinementConfig cfg;
  const auto r = refine_region(ph.p[1], RegionLabel::TumorCore, cfg);
  CHECK_FALSE(r.report.gate_triggered);
  CHECK_FALSE(r.report.fallback_used);
  CHECK(*r.report.mean_core_confidence > 0.9);
  CHECK(r.mask == remove_small_components(threshold_mask(ph.p[1], 0.5), 10));
  CHECK(r.report.final_threshold == 0.5);
}

TEST_CASE("refine region on a vague core with halo") {
  // Core of p = 0.6 surrounded by a 0.1 halo.
  const Dims d{20, 20, 20};
  Volume3D p(d, 0.0);
  std::size_t core = 0, halo = 0;
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) {
        const auto inside = [&](std::size_t lo, std::size_t hi) {
          return x >= lo && x < hi && y >= lo && y < hi && z >= lo && z < hi;
        };
        if (inside(8, 12)) {
          p.at(x, y, z) = 0.6;
          ++core;
        } else if (inside(6, 14)) {
          p.at(x, y, z) = 0.1;
          ++halo;
        }
      }
  const auto r = refine_region(p, RegionLabel::TumorCore, RefinementConfig{});
  CHECK(*r.report.mean_core_confidence == doctest::Approx(0.6));
  CHECK(r.report.gate_triggered);
  CHECK(r.report.fallback_used);
  CHECK(r.report.final_threshold == 0.05);
  CHECK(count_foreground(r.mask) == core + halo);
  CHECK(core + halo == 512);
}

TEST_CASE("refine region on an all-zero volume") {
  const auto r = refine_region(Volume3D(Dims{6, 6, 6}, 0.0), RegionLabel::EnhancingTumor, RefinementConfig{});
  CHECK(count_foreground(r.mask) == 0);
  CHECK(r.report.gate_triggered);
  CHECK_FALSE(r.report.mean_core_confidence);
}

TEST_CASE("refine region properties") {
  std::mt19937_64 rng(3);
  RefinementConfig open;
  open.confidence_gate = {0.0, 0.0, 0.0};
  RefinementConfig nofilter;
  nofilter.min_component_size = 0;
  nofilter.confidence_gate = {0.99, 0.99, 0.99};
  for (int t = 0; t < 20; ++t) {
    const auto p = random_probs(rng, Dims{12, 12, 12}, 1.0);
    const auto r = refine_region(p, RegionLabel::TumorCore, open);
    if (count_foreground(r.mask) > 0) {
      CHECK_FALSE(r.report.fallback_used);
      CHECK(r.mask == remove_small_components(threshold_mask(p, 0.5), 10));
    }
    const auto base = threshold_mask(p, 0.5);
    const auto fb = refine_region(p, RegionLabel::TumorCore, nofilter);
    CHECK(fb.report.fallback_used);
    CHECK(subset(base, fb.mask));
  }
}

TEST_CASE("core substitution when no core is found") {
  auto spec = phantom::hgg_like(2);
  spec.regions[1].interior_p = 0.03;
  spec.regions[2].interior_p = 0.03;
  spec.noise = 0.005;
  const auto ph = phantom::generate_phantom(spec);
  const auto res = refine_segmentation(ph.p[0], ph.p[1], ph.p[2], RefinementConfig{});
  CHECK(res.report[RegionLabel::TumorCore].core_substituted);
  CHECK(res.segmentation[RegionLabel::TumorCore] == res.segmentation[RegionLabel::WholeTumor]);
  CHECK(count_foreground(res.segmentation[RegionLabel::WholeTumor]) > 0);
}

TEST_CASE("failsafe on a weak whole tumour") {
  auto spec = phantom::hgg_like(5);
  for (auto& r : spec.regions) r.interior_p = 0.3;
  spec.regions[1].interior_p = 0.01;
  spec.regions[2].interior_p = 0.01;
  spec.noise = 0.0;
  // Keep p below the fallback threshold everywhere so only the failsafe can help.
  spec.regions[0].interior_p = 0.04;
  const auto ph = phantom::generate_phantom(spec);
  const auto res = refine_segmentation(ph.p[0], ph.p[1], ph.p[2], RefinementConfig{});
  const auto& rep = res.report[RegionLabel::WholeTumor];
  CHECK(rep.failsafe_triggered);
  CHECK(count_foreground(res.segmentation[RegionLabel::WholeTumor]) >= 1000);
  CHECK(count_foreground(res.segmentation[RegionLabel::TumorCore]) >= 1000);
  CHECK(res.report[RegionLabel::TumorCore].core_substituted);
}

TEST_CASE("weak whole tumour at p = 0.3 is caught by the fallback") {
  auto spec = phantom::hgg_like(5);
  spec.regions[0].interior_p = 0.3;
  const auto ph = phantom::generate_phantom(spec);
  const auto res = refine_segmentation(ph.p[0], ph.p[1], ph.p[2], RefinementConfig{});
  CHECK(res.report[RegionLabel::WholeTumor].fallback_used);
  CHECK(count_foreground(res.segmentation[RegionLabel::WholeTumor]) >= 1000);
}

TEST_CASE("failsafe mask includes ties and drops small components") {
  const Dims d{20, 20, 20};
  Volume3D p(d, 0.0);
  // 1200 voxels tied at 0.01 in one slab, plus 5 isolated high voxels.
  for (std::size_t z = 0; z < 3; ++z)
    for (std::size_t y = 0; y < 20; ++y)
      for (std::size_t x = 0; x < 20; ++x) p.at(x, y, z) = 0.01;
  for (std::size_t k = 0; k < 5; ++k) p.at(2 + 3 * k, 10, 15) = 0.04;
  double cut = -1.0;
  const auto m = failsafe_mask(p, RefinementConfig{}, &cut);
  CHECK(cut == 0.01);
  CHECK(count_foreground(m) == 1200);
  CHECK(m.at(2, 10, 15) == 0);

  RefinementConfig big;
  big.failsafe_min_voxels = 5000;
  CHECK(count_foreground(failsafe_mask(Volume3D(Dims{4, 4, 4}, 0.0), big)) == 64);
}

TEST_CASE("refine segmentation fuzz guarantees") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const RefinementConfig cfg;
  for (int t = 0; t < 40; ++t) {
    const Dims d{16, 16, 16};
    const double s = u(rng);
    const auto a = random_probs(rng, d, s), b = random_probs(rng, d, s * s), c = random_probs(rng, d, s);
    const auto res = refine_segmentation(a, b, c, cfg);
    for (std::size_t r = 0; r < 2; ++r) CHECK(count_foreground(res.segmentation.masks[r]) > 0);
    if (res.report[RegionLabel::WholeTumor].failsafe_triggered)
      CHECK(count_foreground(res.segmentation[RegionLabel::WholeTumor]) >= 1000);
    for (const auto& m : res.segmentation.masks) {
      const auto cc = connected_components(m, cfg.connectivity);
      for (const auto n : cc.component_sizes) CHECK(n >= 10);
    }
  }
}

TEST_CASE("nesting") {
  std::mt19937_64 rng(31);
  RefinementConfig cfg;
  cfg.enforce_nesting = true;
  for (int t = 0; t < 10; ++t) {
    const Dims d{14, 14, 14};
    const auto res = refine_segmentation(random_probs(rng, d, 0.9), random_probs(rng, d, 0.8),
                                         random_probs(rng, d, 0.9), cfg);
    const auto& s = res.segmentation;
    CHECK(subset(s[RegionLabel::EnhancingTumor], s[RegionLabel::TumorCore]));
    CHECK(subset(s[RegionLabel::TumorCore], s[RegionLabel::WholeTumor]));
    CHECK(count_foreground(s[RegionLabel::TumorCore]) > 0);
  }
}

TEST_CASE("brats label encoding") {
  SegmentationSet empty;
  for (auto& m : empty.masks) m = Mask3D(Dims{3, 3, 3}, std::uint8_t{0});
  CHECK(count_foreground(masks_to_brats_labels(empty)) == 0);

  SegmentationSet s = empty;
  s.masks[0][0] = s.masks[1][0] = s.masks[2][0] = 1;
  s.masks[0][1] = s.masks[1][1] = 1;
  s.masks[0][2] = 1;
  const auto l = masks_to_brats_labels(s);
  CHECK(l[0] == 4);
  CHECK(l[1] == 1);
  CHECK(l[2] == 2);
  CHECK(l[3] == 0);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 3);
  const std::array<std::uint8_t, 4> codes = {0, 1, 2, 4};
  for (int t = 0; t < 20; ++t) {
    Mask3D labels(Dims{6, 6, 6}, std::uint8_t{0});
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = codes[static_cast<std::size_t>(pick(rng))];
    const auto masks = brats_labels_to_masks(labels);
    CHECK(masks_to_brats_labels(masks) == labels);
    CHECK(brats_labels_to_masks(masks_to_brats_labels(masks)).masks == masks.masks);
  }
  Mask3D bad(Dims{1, 1, 1}, std::uint8_t{3});
  CHECK_THROWS_AS(brats_labels_to_masks(bad), Error);
}

TEST_CASE("refinement config validation and report") {
  RefinementConfig c;
  c.fallback_threshold = 0.6;
  CHECK_THROWS_AS(c.validate(), Error);
  RefinementConfig g;
  g.confidence_gate[1] = 1.0;
  CHECK_THROWS_AS(g.validate(), Error);
  CHECK(parse_region("TC") == RegionLabel::TumorCore);
  CHECK_THROWS_AS(parse_region("XX"), Error);

  RefinementReport rep;
  rep[RegionLabel::WholeTumor].mean_core_confidence = 0.95;
  rep[RegionLabel::WholeTumor].voxels = 12;
  const auto text = rep.summary();
  CHECK(text.find("WT: mean_confidence=0.9500 gate=passed") == 0);
  CHECK(text.find("TC: mean_confidence=none") != std::string::npos);
}
