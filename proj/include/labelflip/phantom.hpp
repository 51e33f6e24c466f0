#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "labelflip/refine.hpp"
#include "labelflip/survival.hpp"

namespace labelflip::phantom {

/// Probability profile of one spherical region.
struct RegionProfile {
  /// Voxel coordinates.
  std::array<double, 3> center{};
  /// Ground-truth radius in voxels; 0 means the region is absent.
  double radius = 0.0;
  /// Probability deep inside the region.
  double interior_p = 1.0;
  /// Width (voxels) over which p falls from ~interior_p to ~0. 0 gives a step.
  double falloff_width = 0.0;
  /// Shift of the falloff centre relative to the true boundary; negative
  /// values put part of the true region in the low-probability tail.
  double falloff_offset = 0.0;
  double q_inside = 0.05;
  double q_outside = 0.02;
};

struct PhantomSpec {
  Dims dims{48, 48, 48};
  Spacing spacing{};
  /// Indexed by refine::RegionLabel; must be nested WT >= TC >= ET.
  std::array<RegionProfile, 3> regions{};
  /// Half-width of the uniform noise added to every p voxel.
  double noise = 0.01;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Phantom {
  std::array<Volume3D, 3> p;
  std::array<Volume3D, 3> q;
  refine::SegmentationSet truth;
};

/// p = interior_p * sigmoid(8 (R + offset - r) / width) plus seeded noise,
/// clamped to [0, 1]. Ground truth is the exact sphere r <= R.
Phantom generate_phantom(const PhantomSpec& spec);

/// Confidently segmented core (interior TC p = 0.97, sharp boundary).
PhantomSpec hgg_like(std::uint64_t seed, Dims dims = {48, 48, 48});

/// Vaguely segmented core (interior TC p = 0.6, wide falloff reaching inside
/// the true core) and no enhancing region.
PhantomSpec diffuse_lgg_like(std::uint64_t seed, Dims dims = {48, 48, 48});

/// "hgg" or "lgg".
PhantomSpec preset(const std::string& name, std::uint64_t seed, Dims dims = {48, 48, 48});

/// Synthetic survival cohort in which multifocal tumours (n_tumors >= 3)
/// mark short survivors regardless of age, and survival otherwise falls
/// linearly with age.
std::vector<survival::SurvivalRecord> synthetic_cohort(std::size_t n, std::uint64_t seed);

}  // namespace labelflip::phantom
