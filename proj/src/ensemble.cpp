#include "labelflip/ensemble.hpp"

#include <algorithm>

#include "labelflip/parallel.hpp"

namespace labelflip::ensemble {

void PredictionPair::validate() const {
  require_same_dims(p, q, "prediction pair");
  for (const double v : p.values()) {
    if (v < 0.0 || v > 1.0) throw Error("prediction p outside [0, 1]");
  }
  for (const double v : q.values()) {
    if (v < 0.0 || v > 0.5) throw Error("flip probability q outside [0, 0.5]");
  }
}

Volume3D fuse_volume(const PredictionPair& pair) {
  require_same_dims(pair.p, pair.q, "fuse_volume");
  Volume3D out(pair.p.dims(), 0.0, pair.p.spacing());
  const auto p = pair.p.values();
  const auto q = pair.q.values();
  auto dst = out.values();
  parallel::for_each_index(dst.size(), [&](std::size_t i) { dst[i] = fuse_single(p[i], q[i]); });
  return out;
}

namespace {

/// Mean of already-fused volumes. Values are sorted per voxel and averaged as
/// offsets from the minimum, so the result does not depend on list order and
/// n copies of one value average to exactly that value.
Volume3D mean_of(const std::vector<Volume3D>& fused) {
  if (fused.empty()) throw Error("ensemble needs at least one prediction");
  for (const auto& v : fused) require_same_dims(fused.front(), v, "ensemble");
  const std::size_t n = fused.size();
  Volume3D out(fused.front().dims(), 0.0, fused.front().spacing());
  auto dst = out.values();
  const auto count = static_cast<std::ptrdiff_t>(dst.size());
#pragma omp parallel
  {
    std::vector<double> buf(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      for (std::size_t k = 0; k < n; ++k) buf[k] = fused[k][i];
      std::sort(buf.begin(), buf.end());
      double acc = 0.0;
      for (std::size_t k = 1; k < n; ++k) acc += buf[k] - buf[0];
      dst[i] = std::clamp(buf[0] + acc / static_cast<double>(n), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace

Volume3D ensemble_mean(std::span<const PredictionPair> preds) {
  if (preds.empty()) throw Error("ensemble needs at least one prediction");
  std::vector<Volume3D> fused;
  fused.reserve(preds.size());
  for (const auto& pr : preds) fused.push_back(fuse_volume(pr));
  return mean_of(fused);
}

Volume3D ensemble_with_flips(std::span<const FlippedPrediction> preds) {
  if (preds.empty()) throw Error("ensemble needs at least one prediction");
  std::vector<Volume3D> fused;
  fused.reserve(preds.size());
  for (const auto& fp : preds) {
    Volume3D v = fuse_volume(fp.pair);
    // Undo in reverse order; flips on distinct axes commute, repeated ones cancel.
    for (auto it = fp.flips.rbegin(); it != fp.flips.rend(); ++it) v = flip_axis(v, *it);
    fused.push_back(std::move(v));
  }
  return mean_of(fused);
}

Volume3D ensemble_with_flips(std::span<const PredictionPair> preds,
                             std::span<const Axis> flip_axes) {
  std::vector<FlippedPrediction> wrapped;
  wrapped.reserve(preds.size());
  for (const auto& p : preds) {
    wrapped.push_back({p, std::vector<Axis>(flip_axes.begin(), flip_axes.end())});
  }
  return ensemble_with_flips(wrapped);
}

}  // namespace labelflip::ensemble
