#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "labelflip/error.hpp"

namespace labelflip {

struct Dims {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;

  std::size_t voxels() const { return nx * ny * nz; }
  bool operator==(const Dims&) const = default;
};

/// Millimetres per voxel along each axis.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  bool operator==(const Spacing&) const = default;
};

std::string to_string(const Dims& d);

/// Dense 3D grid in x-fastest linear order: index = x + nx * (y + ny * z).
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(Dims dims, T fill = T{}, Spacing spacing = {})
      : dims_(dims), spacing_(spacing), data_(dims.voxels(), fill) {
    check_shape();
  }

  Grid(Dims dims, std::vector<T> data, Spacing spacing = {})
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    check_shape();
    if constexpr (std::is_floating_point_v<T>) {
      for (const T v : data_) {
        if (!std::isfinite(v)) throw Error("volume contains a non-finite value");
      }
    }
  }

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  void set_spacing(Spacing s) {
    spacing_ = s;
    check_shape();
  }
  std::size_t size() const { return data_.size(); }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_.nx * (y + dims_.ny * z);
  }
  std::array<std::size_t, 3> coords(std::size_t i) const {
    return {i % dims_.nx, (i / dims_.nx) % dims_.ny, i / (dims_.nx * dims_.ny)};
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t x, std::size_t y, std::size_t z) { return data_[index(x, y, z)]; }
  const T& at(std::size_t x, std::size_t y, std::size_t z) const {
    return data_[index(x, y, z)];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& raw() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  void check_shape() const {
    if (dims_.nx == 0 || dims_.ny == 0 || dims_.nz == 0)
      throw Error("volume dimensions must be positive, got " + to_string(dims_));
    if (data_.size() != dims_.voxels())
      throw Error("volume data length does not match " + to_string(dims_));
    if (!(spacing_.sx > 0 && spacing_.sy > 0 && spacing_.sz > 0))
      throw Error("voxel spacing must be strictly positive");
  }

  Dims dims_{};
  Spacing spacing_{};
  std::vector<T> data_;
};

using Volume3D = Grid<double>;
using Mask3D = Grid<std::uint8_t>;

template <typename A, typename B>
void require_same_dims(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw Error(std::string(what) + ": dimension mismatch " + to_string(a.dims()) + " vs " +
                to_string(b.dims()));
  }
}

std::size_t count_foreground(const Mask3D& m);

enum class Connectivity { Face6, Edge18, Corner26 };

Connectivity parse_connectivity(const std::string& name);
std::string to_string(Connectivity c);

/// Neighbour offsets (dx, dy, dz) for a connectivity, excluding the centre voxel.
std::vector<std::array<int, 3>> neighbour_offsets(Connectivity c);

struct ComponentLabeling {
  Dims dims;
  /// 0 = background, components are 1..component_count.
  std::vector<std::uint32_t> labels;
  /// component_sizes[k - 1] is the voxel count of label k.
  std::vector<std::size_t> component_sizes;

  std::size_t component_count() const { return component_sizes.size(); }
  std::size_t size_of(std::uint32_t label) const { return component_sizes.at(label - 1); }
};

struct Standardized {
  Volume3D volume;
  /// Set when every nonzero voxel had the same value.
  std::optional<std::string> warning;
};

/// Zero-mean / unit-variance over the nonzero voxels; zero voxels stay 0.
/// Throws when the volume has no nonzero voxel.
Standardized standardize_nonzero(const Volume3D& v);

/// Labels in order of the first voxel met in a linear scan.
ComponentLabeling connected_components(const Mask3D& m,
                                       Connectivity c = Connectivity::Corner26);

/// Drops every component with fewer than min_size voxels.
Mask3D remove_small_components(const Mask3D& m, std::size_t min_size,
                               Connectivity c = Connectivity::Corner26);

enum class Axis { X, Y, Z };

Axis parse_axis(char c);

template <typename T>
Grid<T> flip_axis(const Grid<T>& v, Axis axis) {
  const Dims d = v.dims();
  Grid<T> out(d, T{}, v.spacing());
  for (std::size_t z = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x) {
        std::size_t sx = x, sy = y, sz = z;
        switch (axis) {
          case Axis::X: sx = d.nx - 1 - x; break;
          case Axis::Y: sy = d.ny - 1 - y; break;
          case Axis::Z: sz = d.nz - 1 - z; break;
        }
        out.at(x, y, z) = v.at(sx, sy, sz);
      }
    }
  }
  return out;
}

}  // namespace labelflip
