#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library except for the container types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "labelflip/volume.hpp"

namespace oracle {

using labelflip::Connectivity;
using labelflip::Dims;
using labelflip::Mask3D;

// ---------------------------------------------------------------------------
// Connected components by recursive flood fill

inline bool adjacent(int dx, int dy, int dz, Connectivity c) {
  const int reach = std::abs(dx) + std::abs(dy) + std::abs(dz);
  if (reach == 0) return false;
  switch (c) {
    case Connectivity::Face6: return reach == 1;
    case Connectivity::Edge18: return reach <= 2;
    case Connectivity::Corner26: return true;
  }
  return false;
}

inline void fill(const Mask3D& m, std::vector<std::uint32_t>& labels, int x, int y, int z,
                 std::uint32_t label, Connectivity c) {
  const Dims d = m.dims();
  const std::size_t i = m.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                static_cast<std::size_t>(z));
  labels[i] = label;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (!adjacent(dx, dy, dz, c)) continue;
        const int nx = x + dx, ny = y + dy, nz = z + dz;
        if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<int>(d.nx) || ny >= static_cast<int>(d.ny) ||
            nz >= static_cast<int>(d.nz))
          continue;
        const std::size_t j = m.index(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny),
                                      static_cast<std::size_t>(nz));
        if (m[j] && labels[j] == 0) fill(m, labels, nx, ny, nz, label, c);
      }
    }
  }
}

/// Labels numbered by the first voxel met in x-fastest order.
inline std::vector<std::uint32_t> flood_fill_labels(const Mask3D& m, Connectivity c) {
  std::vector<std::uint32_t> labels(m.size(), 0);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] && labels[i] == 0) {
      const auto xyz = m.coords(i);
      fill(m, labels, static_cast<int>(xyz[0]), static_cast<int>(xyz[1]), static_cast<int>(xyz[2]), ++next, c);
    }
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Metrics by direct counting

inline double dice(const Mask3D& a, const Mask3D& b) {
  long inter = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]) ++sa;
    if (b[i]) ++sb;
    if (a[i] && b[i]) ++inter;
  }
  if (sa + sb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(sa + sb);
}

inline std::vector<std::array<double, 3>> surface_points(const Mask3D& m) {
  const Dims d = m.dims();
  const auto sp = m.spacing();
  auto fg = [&](long x, long y, long z) {
    if (x < 0 || y < 0 || z < 0 || x >= static_cast<long>(d.nx) || y >= static_cast<long>(d.ny) ||
        z >= static_cast<long>(d.nz))
      return false;
    return m.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) != 0;
  };
  std::vector<std::array<double, 3>> pts;
  for (long z = 0; z < static_cast<long>(d.nz); ++z)
    for (long y = 0; y < static_cast<long>(d.ny); ++y)
      for (long x = 0; x < static_cast<long>(d.nx); ++x) {
        if (!fg(x, y, z)) continue;
        const bool inner = fg(x - 1, y, z) && fg(x + 1, y, z) && fg(x, y - 1, z) && fg(x, y + 1, z) &&
                           fg(x, y, z - 1) && fg(x, y, z + 1);
        if (!inner) pts.push_back({static_cast<double>(x) * sp.sx, static_cast<double>(y) * sp.sy,
                                   static_cast<double>(z) * sp.sz});
      }
  return pts;
}

inline double p95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double h = 0.95 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// All-pairs HD95; both masks must be non-empty.
inline double hd95(const Mask3D& a, const Mask3D& b) {
  const auto sa = surface_points(a);
  const auto sb = surface_points(b);
  auto directed = [](const auto& from, const auto& to) {
    std::vector<double> out;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]));
      }
      out.push_back(best);
    }
    return out;
  };
  return std::max(p95(directed(sa, sb)), p95(directed(sb, sa)));
}

// ---------------------------------------------------------------------------
// Scalar loss formulas written out long-hand

constexpr double kEps = 1e-7;

inline double clampp(double p) { return std::min(std::max(p, kEps), 1.0 - kEps); }
inline double clampq(double q) { return std::min(std::max(q, kEps), 0.5 - kEps); }

inline double focal(double p, double t, double g) {
  p = clampp(p);
  return -t * std::pow(1.0 - p, g) * std::log(p) - (1.0 - t) * std::pow(p, g) * std::log(1.0 - p);
}

inline double bce(double p, double t) {
  p = clampp(p);
  return -t * std::log(p) - (1.0 - t) * std::log(1.0 - p);
}

inline double kl(double w, double p, bool full) {
  w = clampp(w);
  p = clampp(p);
  double v = w * std::log(w) - w * std::log(p);
  if (full) v += (1.0 - w) * std::log(1.0 - w) - (1.0 - w) * std::log(1.0 - p);
  return v;
}

inline double focal_kl(double w, double p, bool full) {
  const double pc = clampp(p), wc = clampp(w);
  return (pc - wc) * (pc - wc) * kl(w, p, full);
}

inline double soft_target(double q, int x) { return x == 1 ? 1.0 - q : q; }
inline double disagree(double p, int x) { return ((p > 0.5) ? 1 : 0) != x ? 1.0 : 0.0; }

inline double loss2019(double p, double q, int x, double g) {
  q = clampq(q);
  return focal(p, soft_target(q, x), g) + bce(q, disagree(p, x));
}

inline double loss2020(double p, double q, int x, double g, double lambda, bool full) {
  q = clampq(q);
  const double w = soft_target(q, x);
  return lambda * focal(p, x, g) + (1.0 - lambda) * focal_kl(w, p, full) +
         (1.0 - lambda) * bce(q, disagree(p, x));
}

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Smallest gradient magnitude treated as relative. Below it a central
/// difference at h = 1e-5 cannot resolve the derivative (truncation error is
/// of order h^2 times the third derivative), e.g. where focal-KL vanishes at
/// p = w or where loss terms cancel.
constexpr double kGradientFloor = 1e-5;

inline double gradient_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), kGradientFloor});
  return std::fabs(analytic - numeric) / scale;
}

// ---------------------------------------------------------------------------
// Random masks

inline Mask3D random_mask(std::mt19937_64& rng, Dims d, double density) {
  std::bernoulli_distribution coin(density);
  Mask3D m(d, std::uint8_t{0});
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = coin(rng) ? 1 : 0;
  return m;
}

}  // namespace oracle
