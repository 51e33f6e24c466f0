#pragma once

#include <string>
#include <vector>

#include "labelflip/volume.hpp"

namespace labelflip::uncertainty {

// Certainty maps hold values in [0, 100]; 100 is the most certain.

/// 100 (1 - 2q) from a label-flip probability.
Volume3D certainty_from_q(const Volume3D& q);

/// 100 (1 - 2 |0.5 - x|) exactly as printed; this is 100 at x = 0.5 and
/// 0 at x in {0, 1}, i.e. an uncertainty score.
Volume3D symmetric_raw(const Volume3D& x);

/// Same formula on the certain-is-100 scale: 200 |0.5 - x|.
Volume3D certainty_symmetric(const Volume3D& x);

/// 200 max(0.5 - x, 0): the uncertainty assigned to negative predictions only.
Volume3D negative_only_raw(const Volume3D& x);

/// Same formula on the certain-is-100 scale: 100 for x > 0.5, else
/// 100 - 200 (0.5 - x).
Volume3D certainty_negative_only(const Volume3D& x);

enum class Formula { Flip, Symmetric, NegativeOnly };
Formula parse_formula(const std::string& name);

inline const std::vector<double> kDefaultThresholds = {0.0, 25.0, 50.0, 75.0, 100.0};

struct UncertaintyEvalCurve {
  std::vector<double> thresholds;
  std::vector<double> dice_at;
  /// Share of true positives removed at each threshold.
  std::vector<double> ftp_at;
  /// Share of true negatives removed at each threshold.
  std::vector<double> ftn_at;
  double dice_auc = 0.0;
  double ftp_auc = 0.0;
  double ftn_auc = 0.0;
};

/// At threshold t, voxels with certainty < t are excluded before scoring.
UncertaintyEvalCurve evaluate_uncertainty(const Mask3D& seg, const Mask3D& gt,
                                          const Volume3D& certainty,
                                          const std::vector<double>& thresholds = kDefaultThresholds);

/// Trapezoidal area over thresholds / 100. A single point returns its value.
double trapezoid_auc(const std::vector<double>& thresholds, const std::vector<double>& values);

}  // namespace labelflip::uncertainty
