#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>

#include "labelflip/volume.hpp"

namespace labelflip::refine {

enum class RegionLabel { WholeTumor = 0, TumorCore = 1, EnhancingTumor = 2 };

inline constexpr std::array<RegionLabel, 3> kRegions = {
    RegionLabel::WholeTumor, RegionLabel::TumorCore, RegionLabel::EnhancingTumor};

/// "WT", "TC", "ET".
std::string short_name(RegionLabel r);
RegionLabel parse_region(const std::string& name);

/// One binary mask per nested BraTS region.
struct SegmentationSet {
  std::array<Mask3D, 3> masks;

  Mask3D& operator[](RegionLabel r) { return masks[static_cast<std::size_t>(r)]; }
  const Mask3D& operator[](RegionLabel r) const { return masks[static_cast<std::size_t>(r)]; }
  void validate() const;
};

struct RefinementConfig {
  double base_threshold = 0.5;
  double fallback_threshold = 0.05;
  /// Mean-probability gate per region, indexed by RegionLabel.
  std::array<double, 3> confidence_gate = {0.90, 0.75, 0.8};
  std::size_t min_component_size = 10;
  std::size_t failsafe_min_voxels = 1000;
  Connectivity connectivity = Connectivity::Corner26;
  bool enforce_nesting = false;

  double gate(RegionLabel r) const { return confidence_gate[static_cast<std::size_t>(r)]; }
  void validate() const;
};

struct RegionReport {
  std::optional<double> mean_core_confidence;
  bool gate_triggered = false;
  bool fallback_used = false;
  bool core_substituted = false;
  bool failsafe_triggered = false;
  double final_threshold = 0.5;
  std::size_t voxels = 0;
};

struct RefinementReport {
  std::array<RegionReport, 3> regions;

  RegionReport& operator[](RegionLabel r) { return regions[static_cast<std::size_t>(r)]; }
  const RegionReport& operator[](RegionLabel r) const {
    return regions[static_cast<std::size_t>(r)];
  }
  /// One human-readable line per region.
  std::string summary() const;
};

/// Foreground iff p > t.
Mask3D threshold_mask(const Volume3D& p, double t);

/// Mean of p over the mask; empty when the mask has no foreground.
std::optional<double> mean_region_confidence(const Volume3D& p, const Mask3D& m);

struct RegionResult {
  Mask3D mask;
  RegionReport report;
};

/// Threshold, drop small components, and fall back to the low threshold when
/// the mean confidence inside the mask is under the region's gate.
RegionResult refine_region(const Volume3D& p, RegionLabel region, const RefinementConfig& cfg);

/// Lowest cut on p whose thresholded, size-filtered mask holds at least
/// cfg.failsafe_min_voxels voxels (or every voxel when the volume is smaller).
Mask3D failsafe_mask(const Volume3D& p, const RefinementConfig& cfg, double* cut = nullptr);

struct SegmentationResult {
  SegmentationSet segmentation;
  RefinementReport report;
};

SegmentationResult refine_segmentation(const Volume3D& p_wt, const Volume3D& p_tc,
                                       const Volume3D& p_et, const RefinementConfig& cfg);

/// 4 = enhancing, 1 = non-enhancing core, 2 = edema, 0 = background.
Mask3D masks_to_brats_labels(const SegmentationSet& s);

/// WT = {1,2,4}, TC = {1,4}, ET = {4}. Throws on any other label value.
SegmentationSet brats_labels_to_masks(const Mask3D& labels);

}  // namespace labelflip::refine
