#include "labelflip/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace labelflip::phantom {

namespace {

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose};
  return std::mt19937_64(seq);
}

}  // namespace

void PhantomSpec::validate() const {
  if (dims.voxels() == 0) throw Error("phantom dims must be positive");
  if (!(noise >= 0.0 && noise <= 0.5)) throw Error("phantom noise must lie in [0, 0.5]");
  const std::array<double, 3> extent = {static_cast<double>(dims.nx - 1), static_cast<double>(dims.ny - 1),
                                        static_cast<double>(dims.nz - 1)};
  for (const auto r : refine::kRegions) {
    const auto& g = regions[static_cast<std::size_t>(r)];
    const auto name = refine::short_name(r);
    if (g.radius < 0.0) throw Error("phantom " + name + " radius must be >= 0");
    if (g.interior_p < 0.0 || g.interior_p > 1.0) throw Error("phantom " + name + " interior_p outside [0, 1]");
    if (g.q_inside < 0.0 || g.q_inside > 0.5 || g.q_outside < 0.0 || g.q_outside > 0.5)
      throw Error("phantom " + name + " q levels outside [0, 0.5]");
    if (g.falloff_width < 0.0) throw Error("phantom " + name + " falloff width must be >= 0");
    if (g.radius == 0.0) continue;
    for (std::size_t a = 0; a < 3; ++a) {
      if (g.center[a] - g.radius < 0.0 || g.center[a] + g.radius > extent[a])
        throw Error("phantom " + name + " sphere exceeds the volume bounds");
    }
  }
  // Nesting: ET inside TC inside WT.
  for (std::size_t inner = 2; inner >= 1; --inner) {
    const auto& in = regions[inner];
    const auto& out = regions[inner - 1];
    if (in.radius == 0.0) continue;
    if (dist(in.center, out.center) + in.radius > out.radius + 1e-9)
      throw Error("phantom regions must be nested (WT contains TC contains ET)");
  }
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Dims d = spec.dims;
  Phantom ph;
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& g = spec.regions[r];
    Volume3D p(d, 0.0, spec.spacing);
    Volume3D q(d, 0.0, spec.spacing);
    Mask3D truth(d, std::uint8_t{0}, spec.spacing);
    auto rng = stream(spec.seed, static_cast<std::uint32_t>(r));
    std::uniform_real_distribution<double> jitter(-spec.noise, spec.noise);

    for (std::size_t z = 0; z < d.nz; ++z) {
      for (std::size_t y = 0; y < d.ny; ++y) {
        for (std::size_t x = 0; x < d.nx; ++x) {
          const double rad =
              dist({static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)}, g.center);
          double s = 0.0;
          if (g.radius > 0.0) {
            const double edge = g.radius + g.falloff_offset;
            s = g.falloff_width == 0.0 ? (rad <= edge ? 1.0 : 0.0)
                                       : 1.0 / (1.0 + std::exp(-8.0 * (edge - rad) / g.falloff_width));
          }
          const double noise = spec.noise > 0.0 ? jitter(rng) : 0.0;
          const std::size_t i = p.index(x, y, z);
          p[i] = std::clamp(g.interior_p * s + noise, 0.0, 1.0);
          q[i] = std::clamp(g.q_outside + (g.q_inside - g.q_outside) * s, 0.0, 0.5);
          truth[i] = g.radius > 0.0 && rad <= g.radius ? 1 : 0;
        }
      }
    }
    ph.p[r] = std::move(p);
    ph.q[r] = std::move(q);
    ph.truth.masks[r] = std::move(truth);
  }
  return ph;
}

namespace {

struct Geometry {
  std::array<std::array<double, 3>, 3> centers;
  std::array<double, 3> radii;
  double scale;
};

/// Jittered nested spheres around the volume centre; radii scale with the
/// smallest dimension relative to 48 voxels.
Geometry nested_geometry(std::uint64_t seed, Dims dims, std::array<double, 2> wt_r,
                         std::array<double, 2> tc_r, std::array<double, 2> et_r) {
  auto rng = stream(seed, 100);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto lerp = [&](std::array<double, 2> range) { return range[0] + (range[1] - range[0]) * u(rng); };
  const double scale =
      static_cast<double>(std::min({dims.nx, dims.ny, dims.nz})) / 48.0;
  const std::array<double, 3> mid = {0.5 * static_cast<double>(dims.nx - 1), 0.5 * static_cast<double>(dims.ny - 1),
                                     0.5 * static_cast<double>(dims.nz - 1)};
  Geometry g{};
  g.scale = scale;
  for (std::size_t a = 0; a < 3; ++a) g.centers[0][a] = mid[a] + scale * lerp({-2.0, 2.0});
  for (std::size_t a = 0; a < 3; ++a) g.centers[1][a] = g.centers[0][a] + scale * lerp({-1.5, 1.5});
  for (std::size_t a = 0; a < 3; ++a) g.centers[2][a] = g.centers[1][a] + scale * lerp({-1.0, 1.0});
  g.radii = {scale * lerp(wt_r), scale * lerp(tc_r), scale * lerp(et_r)};
  return g;
}

}  // namespace

PhantomSpec hgg_like(std::uint64_t seed, Dims dims) {
  const Geometry g = nested_geometry(seed, dims, {13.0, 15.0}, {8.0, 10.0}, {4.0, 6.0});
  PhantomSpec s;
  s.dims = dims;
  s.seed = seed;
  const std::array<double, 3> level = {0.98, 0.97, 0.95};
  for (std::size_t r = 0; r < 3; ++r) {
    auto& reg = s.regions[r];
    reg.center = g.centers[r];
    reg.radius = g.radii[r];
    reg.interior_p = level[r];
    reg.falloff_width = 1.5 * g.scale;
    reg.q_inside = 0.03;
    reg.q_outside = 0.02;
  }
  return s;
}

PhantomSpec diffuse_lgg_like(std::uint64_t seed, Dims dims) {
  const Geometry g = nested_geometry(seed, dims, {13.0, 15.0}, {8.0, 10.0}, {0.0, 0.0});
  PhantomSpec s;
  s.dims = dims;
  s.seed = seed;

  auto& wt = s.regions[0];
  wt.center = g.centers[0];
  wt.radius = g.radii[0];
  wt.interior_p = 0.98;
  wt.falloff_width = 2.0 * g.scale;
  wt.q_inside = 0.05;
  wt.q_outside = 0.02;

  // The true core boundary sits where p has already decayed to ~0.05; only
  // the centre of the core crosses 0.5.
  auto& tc = s.regions[1];
  tc.center = g.centers[1];
  tc.radius = g.radii[1];
  tc.interior_p = 0.6;
  tc.falloff_width = 6.0 * g.scale;
  tc.falloff_offset = -0.3 * tc.falloff_width;
  tc.q_inside = 0.35;
  tc.q_outside = 0.05;

  auto& et = s.regions[2];
  et.center = g.centers[2];
  et.radius = 0.0;
  return s;
}

PhantomSpec preset(const std::string& name, std::uint64_t seed, Dims dims) {
  if (name == "hgg") return hgg_like(seed, dims);
  if (name == "lgg") return diffuse_lgg_like(seed, dims);
  throw Error("unknown phantom preset '" + name + "' (expected hgg or lgg)");
}

std::vector<survival::SurvivalRecord> synthetic_cohort(std::size_t n, std::uint64_t seed) {
  auto rng = stream(seed, 200);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 60.0);
  std::vector<survival::SurvivalRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    survival::SurvivalRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "SYN_%04zu", i);
    r.case_id = id;
    r.age = std::round(30.0 + 50.0 * u(rng));
    const bool multifocal = u(rng) < 0.25;
    if (multifocal) {
      r.n_tumors = 3.0 + std::floor(3.0 * u(rng));
      r.n_cores = r.n_tumors;
      r.survival_days = std::round(50.0 + 200.0 * u(rng));
    } else {
      r.n_tumors = u(rng) < 0.8 ? 1.0 : 2.0;
      r.n_cores = u(rng) < 0.8 ? 1.0 : 2.0;
      r.survival_days = std::max(10.0, std::round(1000.0 - 15.0 * (r.age - 30.0) + noise(rng)));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace labelflip::phantom
