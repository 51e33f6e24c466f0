#include "labelflip/volume.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "labelflip/parallel.hpp"

namespace labelflip {

std::string to_string(const Dims& d) {
  return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
}

std::size_t count_foreground(const Mask3D& m) {
  std::size_t n = 0;
  for (const auto v : m.values()) n += v != 0;
  return n;
}

Connectivity parse_connectivity(const std::string& name) {
  std::string s;
  for (const char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "6" || s == "face6" || s == "face") return Connectivity::Face6;
  if (s == "18" || s == "edge18" || s == "edge") return Connectivity::Edge18;
  if (s == "26" || s == "corner26" || s == "corner") return Connectivity::Corner26;
  throw Error("unknown connectivity '" + name + "' (expected face6, edge18 or corner26)");
}

std::string to_string(Connectivity c) {
  switch (c) {
    case Connectivity::Face6: return "face6";
    case Connectivity::Edge18: return "edge18";
    case Connectivity::Corner26: return "corner26";
  }
  return "corner26";
}

std::vector<std::array<int, 3>> neighbour_offsets(Connectivity c) {
  // Manhattan radius of the allowed offsets: 1 for faces, 2 adds edges, 3 adds corners.
  const int reach = c == Connectivity::Face6 ? 1 : c == Connectivity::Edge18 ? 2 : 3;
  std::vector<std::array<int, 3>> out;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0 || manhattan > reach) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

Axis parse_axis(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'x': return Axis::X;
    case 'y': return Axis::Y;
    case 'z': return Axis::Z;
    default: throw Error(std::string("unknown axis '") + c + "'");
  }
}

Standardized standardize_nonzero(const Volume3D& v) {
  const auto values = v.values();
  std::size_t count = 0;
  for (const double x : values) count += x != 0.0;
  if (count == 0) throw Error("no foreground intensities");

  const double n = static_cast<double>(count);
  const double mean =
      parallel::sum(values.size(), [&](std::size_t i) { return values[i]; }) / n;
  const double var = parallel::sum(values.size(), [&](std::size_t i) {
                       if (values[i] == 0.0) return 0.0;
                       const double d = values[i] - mean;
                       return d * d;
                     }) / n;
  const double sigma = std::sqrt(var);

  Standardized out{Volume3D(v.dims(), 0.0, v.spacing()), std::nullopt};
  if (!(sigma > 0.0)) {
    out.warning = "degenerate input: all nonzero intensities are equal, mapped to 0";
    return out;
  }
  auto dst = out.volume.values();
  parallel::for_each_index(values.size(), [&](std::size_t i) {
    dst[i] = values[i] == 0.0 ? 0.0 : (values[i] - mean) / sigma;
  });
  return out;
}

ComponentLabeling connected_components(const Mask3D& m, Connectivity c) {
  const Dims d = m.dims();
  const auto offsets = neighbour_offsets(c);
  ComponentLabeling out{d, std::vector<std::uint32_t>(d.voxels(), 0), {}};

  std::vector<std::size_t> queue;
  queue.reserve(1024);
  for (std::size_t start = 0; start < m.size(); ++start) {
    if (m[start] == 0 || out.labels[start] != 0) continue;
    const auto label = static_cast<std::uint32_t>(out.component_sizes.size() + 1);
    out.labels[start] = label;
    queue.clear();
    queue.push_back(start);
    // Breadth-first; the queue vector doubles as the visited list.
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto [x, y, z] = m.coords(queue[head]);
      for (const auto& o : offsets) {
        const auto nx = static_cast<std::ptrdiff_t>(x) + o[0];
        const auto ny = static_cast<std::ptrdiff_t>(y) + o[1];
        const auto nz = static_cast<std::ptrdiff_t>(z) + o[2];
        if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<std::ptrdiff_t>(d.nx) ||
            ny >= static_cast<std::ptrdiff_t>(d.ny) || nz >= static_cast<std::ptrdiff_t>(d.nz))
          continue;
        const std::size_t j = m.index(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny),
                                      static_cast<std::size_t>(nz));
        if (m[j] != 0 && out.labels[j] == 0) {
          out.labels[j] = label;
          queue.push_back(j);
        }
      }
    }
    out.component_sizes.push_back(queue.size());
  }
  return out;
}

Mask3D remove_small_components(const Mask3D& m, std::size_t min_size, Connectivity c) {
  if (min_size <= 1) return m;
  const auto cc = connected_components(m, c);
  Mask3D out(m.dims(), std::uint8_t{0}, m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto label = cc.labels[i];
    if (label != 0 && cc.size_of(label) >= min_size) out[i] = 1;
  }
  return out;
}

}  // namespace labelflip
