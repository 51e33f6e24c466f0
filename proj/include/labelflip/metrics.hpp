#pragma once

#include <optional>
#include <vector>

#include "labelflip/volume.hpp"

namespace labelflip::metrics {

/// 2|A n B| / (|A| + |B|); 1 when both masks are empty.
double dice(const Mask3D& a, const Mask3D& b);

/// Foreground voxels with at least one background face neighbour. Voxels
/// outside the grid count as background.
Mask3D surface(const Mask3D& m);

/// Squared physical distance from every voxel to the nearest foreground voxel
/// of `targets` (exact Euclidean transform, separable lower-envelope passes),
/// in linear voxel order. Every entry is +inf when `targets` is empty.
std::vector<double> squared_distance_to(const Mask3D& targets);

/// Distance from each surface voxel of `from` to the nearest surface voxel of
/// `to`, in linear scan order of `from`.
std::vector<double> directed_surface_distances(const Mask3D& from, const Mask3D& to);

/// Order-statistic percentile with linear interpolation, q in [0, 1].
double percentile_linear(std::vector<double> values, double q);

struct Hd95Options {
  /// When set, returned instead of raising if exactly one mask is empty.
  std::optional<double> one_empty_sentinel;
};

/// Symmetric 95th-percentile surface distance in millimetres. 0 when both
/// masks are empty; exactly one empty mask throws unless a sentinel is set.
double hausdorff95(const Mask3D& a, const Mask3D& b, const Hd95Options& opts = {});

struct MetricResult {
  double dice = 1.0;
  std::optional<double> hd95;
  bool both_empty = false;
  bool one_empty = false;
};

/// Dice and HD95 together; hd95 is left empty (instead of throwing) for a
/// one-empty pair without a sentinel.
MetricResult evaluate_pair(const Mask3D& pred, const Mask3D& gt, const Hd95Options& opts = {});

}  // namespace labelflip::metrics
