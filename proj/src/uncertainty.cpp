#include "labelflip/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "labelflip/parallel.hpp"

namespace labelflip::uncertainty {

namespace {

template <typename F>
Volume3D map_voxels(const Volume3D& in, F&& f) {
  Volume3D out(in.dims(), 0.0, in.spacing());
  const auto src = in.values();
  auto dst = out.values();
  parallel::for_each_index(src.size(), [&](std::size_t i) { dst[i] = f(src[i]); });
  return out;
}

}  // namespace

Volume3D certainty_from_q(const Volume3D& q) {
  return map_voxels(q, [](double v) { return std::clamp(100.0 - 200.0 * v, 0.0, 100.0); });
}

Volume3D symmetric_raw(const Volume3D& x) {
  return map_voxels(x, [](double v) {
    return std::clamp(100.0 - 200.0 * std::abs(0.5 - v), 0.0, 100.0);
  });
}

Volume3D certainty_symmetric(const Volume3D& x) {
  return map_voxels(x, [](double v) { return std::clamp(200.0 * std::abs(0.5 - v), 0.0, 100.0); });
}

Volume3D negative_only_raw(const Volume3D& x) {
  return map_voxels(x, [](double v) { return std::clamp(200.0 * std::max(0.5 - v, 0.0), 0.0, 100.0); });
}

Volume3D certainty_negative_only(const Volume3D& x) {
  return map_voxels(x, [](double v) {
    return v > 0.5 ? 100.0 : std::clamp(100.0 - 200.0 * (0.5 - v), 0.0, 100.0);
  });
}

Formula parse_formula(const std::string& name) {
  if (name == "flip") return Formula::Flip;
  if (name == "symmetric") return Formula::Symmetric;
  if (name == "negative-only" || name == "negative_only") return Formula::NegativeOnly;
  throw Error("unknown certainty formula '" + name + "' (expected flip, symmetric or negative-only)");
}

double trapezoid_auc(const std::vector<double>& thresholds, const std::vector<double>& values) {
  if (thresholds.size() != values.size() || thresholds.empty())
    throw Error("AUC needs matching, non-empty threshold and value lists");
  if (thresholds.size() == 1) return values.front();
  double area = 0.0;
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    const double w = (thresholds[i] - thresholds[i - 1]) / 100.0;
    area += 0.5 * w * (values[i] + values[i - 1]);
  }
  return area;
}

UncertaintyEvalCurve evaluate_uncertainty(const Mask3D& seg, const Mask3D& gt,
                                          const Volume3D& certainty,
                                          const std::vector<double>& thresholds) {
  require_same_dims(seg, gt, "evaluate_uncertainty");
  require_same_dims(seg, certainty, "evaluate_uncertainty");
  if (thresholds.empty()) throw Error("evaluate_uncertainty needs at least one threshold");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] < 0.0 || thresholds[i] > 100.0)
      throw Error("uncertainty thresholds must lie in [0, 100]");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw Error("uncertainty thresholds must be strictly ascending");
  }

  const auto s = seg.values();
  const auto g = gt.values();
  const auto c = certainty.values();
  const auto n = static_cast<std::ptrdiff_t>(s.size());

  std::int64_t tp_total = 0;
  std::int64_t tn_total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    tp_total += (s[i] && g[i]);
    tn_total += (!s[i] && !g[i]);
  }

  UncertaintyEvalCurve curve;
  curve.thresholds = thresholds;
  for (const double tau : thresholds) {
    std::int64_t tp = 0, fp = 0, fn = 0, tp_removed = 0, tn_removed = 0;
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, fn, tp_removed, tn_removed)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const bool sp = s[i] != 0;
      const bool gp = g[i] != 0;
      if (c[i] < tau) {
        tp_removed += (sp && gp);
        tn_removed += (!sp && !gp);
        continue;
      }
      tp += (sp && gp);
      fp += (sp && !gp);
      fn += (!sp && gp);
    }
    const std::int64_t denom = 2 * tp + fp + fn;
    curve.dice_at.push_back(denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom));
    curve.ftp_at.push_back(tp_total == 0 ? 0.0
                                         : static_cast<double>(tp_removed) / static_cast<double>(tp_total));
    curve.ftn_at.push_back(tn_total == 0 ? 0.0
                                         : static_cast<double>(tn_removed) / static_cast<double>(tn_total));
  }
  curve.dice_auc = trapezoid_auc(thresholds, curve.dice_at);
  curve.ftp_auc = trapezoid_auc(thresholds, curve.ftp_at);
  curve.ftn_auc = trapezoid_auc(thresholds, curve.ftn_at);
  return curve;
}

}  // namespace labelflip::uncertainty
