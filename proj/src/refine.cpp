#include "labelflip/refine.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

#include "labelflip/parallel.hpp"

namespace labelflip::refine {

std::string short_name(RegionLabel r) {
  switch (r) {
    case RegionLabel::WholeTumor: return "WT";
    case RegionLabel::TumorCore: return "TC";
    case RegionLabel::EnhancingTumor: return "ET";
  }
  return "WT";
}

RegionLabel parse_region(const std::string& name) {
  if (name == "WT" || name == "wt" || name == "whole") return RegionLabel::WholeTumor;
  if (name == "TC" || name == "tc" || name == "core") return RegionLabel::TumorCore;
  if (name == "ET" || name == "et" || name == "enhance") return RegionLabel::EnhancingTumor;
  throw Error("unknown region '" + name + "' (expected WT, TC or ET)");
}

void SegmentationSet::validate() const {
  require_same_dims(masks[0], masks[1], "segmentation set");
  require_same_dims(masks[0], masks[2], "segmentation set");
}

void RefinementConfig::validate() const {
  if (!(0.0 < fallback_threshold && fallback_threshold < base_threshold && base_threshold < 1.0))
    throw Error("refinement thresholds must satisfy 0 < fallback < base < 1");
  for (const double g : confidence_gate) {
    if (!(g >= 0.0 && g < 1.0)) throw Error("confidence gates must lie in [0, 1)");
  }
}

std::string RefinementReport::summary() const {
  std::ostringstream os;
  for (const auto r : kRegions) {
    const auto& rep = (*this)[r];
    char conf[32];
    if (rep.mean_core_confidence)
      std::snprintf(conf, sizeof conf, "%.4f", *rep.mean_core_confidence);
    else
      std::snprintf(conf, sizeof conf, "none");
    char thr[32];
    std::snprintf(thr, sizeof thr, "%.6g", rep.final_threshold);
    os << short_name(r) << ": mean_confidence=" << conf
       << " gate=" << (rep.gate_triggered ? "triggered" : "passed")
       << " fallback=" << (rep.fallback_used ? "yes" : "no")
       << " core_substituted=" << (rep.core_substituted ? "yes" : "no")
       << " failsafe=" << (rep.failsafe_triggered ? "yes" : "no") << " threshold=" << thr
       << " voxels=" << rep.voxels << '\n';
  }
  return os.str();
}

Mask3D threshold_mask(const Volume3D& p, double t) {
  Mask3D out(p.dims(), std::uint8_t{0}, p.spacing());
  const auto src = p.values();
  auto dst = out.values();
  parallel::for_each_index(src.size(), [&](std::size_t i) { dst[i] = src[i] > t ? 1 : 0; });
  return out;
}

std::optional<double> mean_region_confidence(const Volume3D& p, const Mask3D& m) {
  require_same_dims(p, m, "mean_region_confidence");
  const std::size_t n = count_foreground(m);
  if (n == 0) return std::nullopt;
  const auto pv = p.values();
  const auto mv = m.values();
  const double s = parallel::sum(pv.size(), [&](std::size_t i) { return mv[i] ? pv[i] : 0.0; });
  return s / static_cast<double>(n);
}

RegionResult refine_region(const Volume3D& p, RegionLabel region, const RefinementConfig& cfg) {
  RegionResult out{remove_small_components(threshold_mask(p, cfg.base_threshold),
                                           cfg.min_component_size, cfg.connectivity),
                   {}};
  out.report.final_threshold = cfg.base_threshold;
  out.report.mean_core_confidence = mean_region_confidence(p, out.mask);
  const auto& c = out.report.mean_core_confidence;
  if (!c || *c < cfg.gate(region)) {
    out.report.gate_triggered = true;
    out.report.fallback_used = true;
    out.report.final_threshold = cfg.fallback_threshold;
    out.mask = remove_small_components(threshold_mask(p, cfg.fallback_threshold),
                                       cfg.min_component_size, cfg.connectivity);
  }
  out.report.voxels = count_foreground(out.mask);
  return out;
}

Mask3D failsafe_mask(const Volume3D& p, const RefinementConfig& cfg, double* cut) {
  std::vector<double> sorted(p.values().begin(), p.values().end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t want = std::clamp<std::size_t>(cfg.failsafe_min_voxels, 1, sorted.size());

  // Candidate cuts are the distinct values at or below the want-th largest.
  // Thresholding at p >= cut keeps every tie of the cut value.
  std::vector<double> cuts;
  for (std::size_t i = want - 1; i < sorted.size(); ++i) {
    if (cuts.empty() || sorted[i] != cuts.back()) cuts.push_back(sorted[i]);
  }

  auto cut_mask = [&](double v) {
    Mask3D m(p.dims(), std::uint8_t{0}, p.spacing());
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = p[i] >= v ? 1 : 0;
    return m;
  };
  auto filtered = [&](double v) {
    return remove_small_components(cut_mask(v), cfg.min_component_size, cfg.connectivity);
  };

  // Lowering the cut only grows components, so the filtered count is
  // monotone in the cut index and a binary search finds the first success.
  std::size_t lo = 0;
  std::size_t hi = cuts.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (count_foreground(filtered(cuts[mid])) >= want)
      hi = mid;
    else
      lo = mid + 1;
  }
  if (lo == cuts.size()) {
    // Even the whole volume is smaller than the minimum component size.
    if (cut) *cut = cuts.front();
    return cut_mask(cuts.front());
  }
  if (cut) *cut = cuts[lo];
  return filtered(cuts[lo]);
}

namespace {

Mask3D intersect(const Mask3D& a, const Mask3D& b) {
  Mask3D out(a.dims(), std::uint8_t{0}, a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

}  // namespace

SegmentationResult refine_segmentation(const Volume3D& p_wt, const Volume3D& p_tc,
                                       const Volume3D& p_et, const RefinementConfig& cfg) {
  require_same_dims(p_wt, p_tc, "refine_segmentation");
  require_same_dims(p_wt, p_et, "refine_segmentation");
  cfg.validate();

  const std::array<const Volume3D*, 3> probs = {&p_wt, &p_tc, &p_et};
  std::array<RegionResult, 3> results;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < 3; ++r) {
    results[static_cast<std::size_t>(r)] =
        refine_region(*probs[static_cast<std::size_t>(r)], kRegions[static_cast<std::size_t>(r)], cfg);
  }

  SegmentationResult out;
  for (std::size_t r = 0; r < 3; ++r) {
    out.segmentation.masks[r] = std::move(results[r].mask);
    out.report.regions[r] = results[r].report;
  }
  auto& seg = out.segmentation;
  auto& wt_rep = out.report[RegionLabel::WholeTumor];
  auto& tc_rep = out.report[RegionLabel::TumorCore];

  if (count_foreground(seg[RegionLabel::WholeTumor]) == 0) {
    double cut = 0.0;
    seg[RegionLabel::WholeTumor] = failsafe_mask(p_wt, cfg, &cut);
    wt_rep.failsafe_triggered = true;
    wt_rep.final_threshold = cut;
  }
  if (count_foreground(seg[RegionLabel::TumorCore]) == 0) {
    seg[RegionLabel::TumorCore] = seg[RegionLabel::WholeTumor];
    tc_rep.core_substituted = true;
  }
  if (cfg.enforce_nesting) {
    seg[RegionLabel::TumorCore] =
        remove_small_components(intersect(seg[RegionLabel::TumorCore], seg[RegionLabel::WholeTumor]),
                                cfg.min_component_size, cfg.connectivity);
    if (count_foreground(seg[RegionLabel::TumorCore]) == 0) {
      seg[RegionLabel::TumorCore] = seg[RegionLabel::WholeTumor];
      tc_rep.core_substituted = true;
    }
    seg[RegionLabel::EnhancingTumor] = remove_small_components(
        intersect(seg[RegionLabel::EnhancingTumor], seg[RegionLabel::TumorCore]),
        cfg.min_component_size, cfg.connectivity);
  }
  for (std::size_t r = 0; r < 3; ++r) out.report.regions[r].voxels = count_foreground(seg.masks[r]);
  return out;
}

Mask3D masks_to_brats_labels(const SegmentationSet& s) {
  s.validate();
  const auto& wt = s[RegionLabel::WholeTumor];
  const auto& tc = s[RegionLabel::TumorCore];
  const auto& et = s[RegionLabel::EnhancingTumor];
  Mask3D out(wt.dims(), std::uint8_t{0}, wt.spacing());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = et[i] ? 4 : tc[i] ? 1 : wt[i] ? 2 : 0;
  }
  return out;
}

SegmentationSet brats_labels_to_masks(const Mask3D& labels) {
  SegmentationSet s;
  for (auto& m : s.masks) m = Mask3D(labels.dims(), std::uint8_t{0}, labels.spacing());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto v = labels[i];
    if (v != 0 && v != 1 && v != 2 && v != 4)
      throw Error("label map contains value " + std::to_string(v) + " outside {0,1,2,4}");
    s.masks[0][i] = v != 0;
    s.masks[1][i] = v == 1 || v == 4;
    s.masks[2][i] = v == 4;
  }
  return s;
}

}  // namespace labelflip::refine
