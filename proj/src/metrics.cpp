#include "labelflip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "labelflip/parallel.hpp"

namespace labelflip::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One lower-envelope pass (Felzenszwalb & Huttenlocher) over a line of n
/// samples spaced h apart. f may hold +inf for "no site".
void envelope_1d(const double* f, double* d, std::size_t n, double h, std::vector<std::size_t>& v,
                 std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  std::ptrdiff_t k = -1;
  auto meet = [&](std::size_t q, std::size_t p) {
    const double xq = static_cast<double>(q) * h;
    const double xp = static_cast<double>(p) * h;
    return ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
  };
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = meet(q, v[static_cast<std::size_t>(k)]);
    while (s <= z[static_cast<std::size_t>(k)]) {
      --k;
      s = meet(q, v[static_cast<std::size_t>(k)]);
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d, d + n, kInf);
    return;
  }
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * h;
    while (z[j + 1] < x) ++j;
    const std::size_t site = v[j];
    const double dx =
        (static_cast<double>(i) - static_cast<double>(site)) * h;
    d[i] = dx * dx + f[site];
  }
}

/// Runs envelope_1d along one axis for every line of the grid, in parallel.
void pass_along(std::vector<double>& data, const Dims& d, int axis, double h) {
  const std::size_t n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? d.nx : d.nx * d.ny;
  const std::size_t lines = d.voxels() / n;
  const auto nl = static_cast<std::ptrdiff_t>(lines);
#pragma omp parallel
  {
    std::vector<double> in(n), out(n), z;
    std::vector<std::size_t> v;
#pragma omp for schedule(static)
    for (std::ptrdiff_t li = 0; li < nl; ++li) {
      const auto l = static_cast<std::size_t>(li);
      // Base index of line l: enumerate the two non-axis coordinates.
      std::size_t base = 0;
      if (axis == 0) {
        base = l * d.nx;
      } else if (axis == 1) {
        base = (l % d.nx) + (l / d.nx) * d.nx * d.ny;
      } else {
        base = l;
      }
      for (std::size_t i = 0; i < n; ++i) in[i] = data[base + i * stride];
      envelope_1d(in.data(), out.data(), n, h, v, z);
      for (std::size_t i = 0; i < n; ++i) data[base + i * stride] = out[i];
    }
  }
}

}  // namespace

double dice(const Mask3D& a, const Mask3D& b) {
  require_same_dims(a, b, "dice");
  const auto av = a.values();
  const auto bv = b.values();
  std::int64_t inter = 0, na = 0, nb = 0;
  const auto n = static_cast<std::ptrdiff_t>(av.size());
#pragma omp parallel for schedule(static) reduction(+ : inter, na, nb)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const bool x = av[i] != 0;
    const bool y = bv[i] != 0;
    inter += x && y;
    na += x;
    nb += y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

Mask3D surface(const Mask3D& m) {
  const Dims d = m.dims();
  Mask3D out(d, std::uint8_t{0}, m.spacing());
  const auto nz = static_cast<std::ptrdiff_t>(d.nz);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t zi = 0; zi < nz; ++zi) {
    const auto z = static_cast<std::size_t>(zi);
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x) {
        if (!m.at(x, y, z)) continue;
        const bool edge = x == 0 || y == 0 || z == 0 || x + 1 == d.nx || y + 1 == d.ny ||
                          z + 1 == d.nz;
        if (edge || !m.at(x - 1, y, z) || !m.at(x + 1, y, z) || !m.at(x, y - 1, z) ||
            !m.at(x, y + 1, z) || !m.at(x, y, z - 1) || !m.at(x, y, z + 1)) {
          out.at(x, y, z) = 1;
        }
      }
    }
  }
  return out;
}

std::vector<double> squared_distance_to(const Mask3D& targets) {
  const Dims d = targets.dims();
  const Spacing s = targets.spacing();
  std::vector<double> data(d.voxels());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = targets[i] ? 0.0 : kInf;
  pass_along(data, d, 0, s.sx);
  pass_along(data, d, 1, s.sy);
  pass_along(data, d, 2, s.sz);
  return data;
}

std::vector<double> directed_surface_distances(const Mask3D& from, const Mask3D& to) {
  require_same_dims(from, to, "surface distance");
  const Mask3D sf = surface(from);
  const std::vector<double> dist2 = squared_distance_to(surface(to));
  std::vector<double> out;
  for (std::size_t i = 0; i < sf.size(); ++i) {
    if (sf[i]) out.push_back(std::sqrt(dist2[i]));
  }
  return out;
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw Error("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("percentile rank must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double hausdorff95(const Mask3D& a, const Mask3D& b, const Hd95Options& opts) {
  require_same_dims(a, b, "hausdorff95");
  const bool a_empty = count_foreground(a) == 0;
  const bool b_empty = count_foreground(b) == 0;
  if (a_empty && b_empty) return 0.0;
  if (a_empty || b_empty) {
    if (opts.one_empty_sentinel) return *opts.one_empty_sentinel;
    throw Error("hausdorff95 is undefined when exactly one mask is empty");
  }
  const double ab = percentile_linear(directed_surface_distances(a, b), 0.95);
  const double ba = percentile_linear(directed_surface_distances(b, a), 0.95);
  return std::max(ab, ba);
}

MetricResult evaluate_pair(const Mask3D& pred, const Mask3D& gt, const Hd95Options& opts) {
  MetricResult r;
  r.dice = dice(pred, gt);
  const bool pe = count_foreground(pred) == 0;
  const bool ge = count_foreground(gt) == 0;
  r.both_empty = pe && ge;
  r.one_empty = pe != ge;
  if (r.one_empty && !opts.one_empty_sentinel) return r;
  r.hd95 = hausdorff95(pred, gt, opts);
  return r;
}

}  // namespace labelflip::metrics
