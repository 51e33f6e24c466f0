#pragma once

#include <span>
#include <vector>

#include "labelflip/volume.hpp"

namespace labelflip::ensemble {

/// One model's output for one tissue channel.
struct PredictionPair {
  Volume3D p;
  Volume3D q;

  void validate() const;
};

/// A prediction made on an input mirrored along `flips`; the axes are undone
/// before averaging.
struct FlippedPrediction {
  PredictionPair pair;
  std::vector<Axis> flips;
};

/// Probability that the true label is 1 given prediction p and flip
/// probability q: q when p <= 0.5, 1 - q otherwise.
inline double fuse_single(double p, double q) { return p > 0.5 ? 1.0 - q : q; }

Volume3D fuse_volume(const PredictionPair& pair);

/// Voxelwise mean of fuse_single over all pairs.
Volume3D ensemble_mean(std::span<const PredictionPair> preds);

Volume3D ensemble_with_flips(std::span<const FlippedPrediction> preds);

/// Every pair was computed on the input flipped along all of `flip_axes`.
Volume3D ensemble_with_flips(std::span<const PredictionPair> preds,
                             std::span<const Axis> flip_axes);

}  // namespace labelflip::ensemble
