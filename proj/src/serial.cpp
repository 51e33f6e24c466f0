#include "labelflip/serial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace labelflip::serial {

Volume3D ensemble_mean(std::span<const ensemble::PredictionPair> preds) {
  if (preds.empty()) throw Error("ensemble needs at least one prediction");
  for (const auto& pr : preds) {
    require_same_dims(preds.front().p, pr.p, "ensemble");
    require_same_dims(pr.p, pr.q, "ensemble");
  }
  const std::size_t n = preds.size();
  Volume3D out(preds.front().p.dims(), 0.0, preds.front().p.spacing());
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) buf[k] = ensemble::fuse_single(preds[k].p[i], preds[k].q[i]);
    std::sort(buf.begin(), buf.end());
    double acc = 0.0;
    for (std::size_t k = 1; k < n; ++k) acc += buf[k] - buf[0];
    out[i] = std::clamp(buf[0] + acc / static_cast<double>(n), 0.0, 1.0);
  }
  return out;
}

double batch_loss(const Volume3D& p, const Volume3D& q, const Mask3D& gt,
                  const losses::LossConfig& cfg) {
  require_same_dims(p, q, "batch_loss");
  require_same_dims(p, gt, "batch_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += losses::combined_loss_2020({p[i], q[i], gt[i] ? 1 : 0}, cfg).value;
  return s / static_cast<double>(p.size());
}

Mask3D threshold_mask(const Volume3D& p, double t) {
  Mask3D out(p.dims(), std::uint8_t{0}, p.spacing());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > t ? 1 : 0;
  return out;
}

Standardized standardize_nonzero(const Volume3D& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const double x : v.values()) {
    if (x != 0.0) {
      sum += x;
      ++n;
    }
  }
  if (n == 0) throw Error("no foreground intensities");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const double x : v.values()) {
    if (x != 0.0) ss += (x - mean) * (x - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  Standardized out{Volume3D(v.dims(), 0.0, v.spacing()), std::nullopt};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) out.volume[i] = sd > 0.0 ? (v[i] - mean) / sd : 0.0;
  }
  if (!(sd > 0.0)) out.warning = "degenerate input: all nonzero intensities are equal, mapped to 0";
  return out;
}

double dice(const Mask3D& a, const Mask3D& b) {
  require_same_dims(a, b, "dice");
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] != 0;
    nb += b[i] != 0;
    inter += a[i] != 0 && b[i] != 0;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

std::vector<double> directed_surface_distances(const Mask3D& from, const Mask3D& to) {
  require_same_dims(from, to, "surface distance");
  const Mask3D sf = metrics::surface(from);
  const Mask3D st = metrics::surface(to);
  const Spacing s = from.spacing();
  std::vector<std::array<std::size_t, 3>> targets;
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (st[i]) targets.push_back(st.coords(i));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < sf.size(); ++i) {
    if (!sf[i]) continue;
    const auto c = sf.coords(i);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : targets) {
      const double dx = (static_cast<double>(c[0]) - static_cast<double>(t[0])) * s.sx;
      const double dy = (static_cast<double>(c[1]) - static_cast<double>(t[1])) * s.sy;
      const double dz = (static_cast<double>(c[2]) - static_cast<double>(t[2])) * s.sz;
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    out.push_back(std::sqrt(best));
  }
  return out;
}

double hausdorff95(const Mask3D& a, const Mask3D& b, const metrics::Hd95Options& opts) {
  require_same_dims(a, b, "hausdorff95");
  const bool ea = count_foreground(a) == 0;
  const bool eb = count_foreground(b) == 0;
  if (ea && eb) return 0.0;
  if (ea || eb) {
    if (opts.one_empty_sentinel) return *opts.one_empty_sentinel;
    throw Error("hausdorff95 is undefined when exactly one mask is empty");
  }
  return std::max(metrics::percentile_linear(directed_surface_distances(a, b), 0.95),
                  metrics::percentile_linear(directed_surface_distances(b, a), 0.95));
}

survival::ForestModel fit_forest(const std::vector<survival::SurvivalRecord>& train,
                                 const survival::ForestConfig& cfg, const survival::ClassBins& bins) {
  const auto data = survival::make_training_set(train, cfg.features, bins);
  survival::ForestModel m{cfg, {}};
  m.trees.reserve(cfg.trees);
  for (std::size_t t = 0; t < cfg.trees; ++t) m.trees.push_back(survival::grow_tree(data, cfg, t));
  return m;
}

}  // namespace labelflip::serial
