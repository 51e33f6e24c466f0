#include "labelflip/losses.hpp"

#include <algorithm>
#include <cmath>

#include "labelflip/parallel.hpp"

namespace labelflip::losses {

KlVariant parse_kl_variant(const std::string& name) {
  if (name == "literal" || name == "literal_positive_term") return KlVariant::LiteralPositiveTerm;
  if (name == "full" || name == "full_binary") return KlVariant::FullBinary;
  throw Error("unknown KL variant '" + name + "' (expected literal or full)");
}

std::string to_string(KlVariant v) {
  return v == KlVariant::FullBinary ? "full_binary" : "literal_positive_term";
}

void LossConfig::validate() const {
  if (!(gamma >= 0.0)) throw Error("loss gamma must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("loss lambda must lie in [0, 1]");
}

double clamp_probability(double p) { return std::clamp(p, kEps, 1.0 - kEps); }
double clamp_flip(double q) { return std::clamp(q, kEps, 0.5 - kEps); }

Grad2 focal(double p, double t, double gamma) {
  p = clamp_probability(p);
  const double lp = -std::log(p);
  const double lq = -std::log1p(-p);
  const double a = std::pow(1.0 - p, gamma);
  const double b = std::pow(p, gamma);
  // gamma * x^(gamma-1) written so that gamma = 0 gives exactly 0.
  const double da = gamma == 0.0 ? 0.0 : -gamma * std::pow(1.0 - p, gamma - 1.0);
  const double db = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1.0);

  Grad2 g;
  g.value = t * a * lp + (1.0 - t) * b * lq;
  g.d_pred = t * (da * lp - a / p) + (1.0 - t) * (db * lq + b / (1.0 - p));
  g.d_target = a * lp - b * lq;
  return g;
}

Grad2 bce(double pred, double target) {
  pred = clamp_probability(pred);
  const double lp = std::log(pred);
  const double lq = std::log1p(-pred);
  Grad2 g;
  g.value = -target * lp - (1.0 - target) * lq;
  g.d_pred = -target / pred + (1.0 - target) / (1.0 - pred);
  g.d_target = lq - lp;
  return g;
}

Grad2 kl(double w, double p, KlVariant variant) {
  w = clamp_probability(w);
  p = clamp_probability(p);
  Grad2 g;
  g.value = w * std::log(w) - w * std::log(p);
  g.d_pred = -w / p;
  g.d_target = std::log(w) + 1.0 - std::log(p);
  if (variant == KlVariant::FullBinary) {
    const double cw = 1.0 - w;
    g.value += cw * std::log(cw) - cw * std::log1p(-p);
    g.d_pred += cw / (1.0 - p);
    g.d_target += -std::log(cw) - 1.0 + std::log1p(-p);
  }
  return g;
}

Grad2 focal_kl(double w, double p, KlVariant variant) {
  w = clamp_probability(w);
  p = clamp_probability(p);
  const Grad2 k = kl(w, p, variant);
  const double diff = p - w;
  Grad2 g;
  g.value = diff * diff * k.value;
  g.d_pred = 2.0 * diff * k.value + diff * diff * k.d_pred;
  g.d_target = -2.0 * diff * k.value + diff * diff * k.d_target;
  return g;
}

double flip_target(double q, int x) { return x != 0 ? 1.0 - q : q; }

double disagreement(double p, int x) { return (p > 0.5) != (x != 0) ? 1.0 : 0.0; }

LossGrad label_flip_loss_2019(const LossInputs& in, const LossConfig& cfg) {
  const double p = clamp_probability(in.p);
  const double q = clamp_flip(in.q);
  const double w = flip_target(q, in.x);
  const double dw_dq = in.x != 0 ? -1.0 : 1.0;
  const double z = disagreement(p, in.x);

  const Grad2 f = focal(p, w, cfg.gamma);
  const Grad2 b = bce(q, z);
  return {f.value + b.value, f.d_pred, f.d_target * dw_dq + b.d_pred};
}

LossGrad combined_loss_2020(const LossInputs& in, const LossConfig& cfg) {
  const double p = clamp_probability(in.p);
  const double q = clamp_flip(in.q);
  const double w = flip_target(q, in.x);
  const double dw_dq = in.x != 0 ? -1.0 : 1.0;
  const double z = disagreement(p, in.x);
  const double lam = cfg.lambda;

  const Grad2 f = focal(p, in.x != 0 ? 1.0 : 0.0, cfg.gamma);
  const Grad2 fkl = focal_kl(w, p, cfg.kl_variant);
  const Grad2 b = bce(q, z);

  LossGrad out;
  out.value = lam * f.value + (1.0 - lam) * fkl.value + (1.0 - lam) * b.value;
  out.d_p = lam * f.d_pred + (1.0 - lam) * fkl.d_pred;
  out.d_q = (1.0 - lam) * (fkl.d_target * dw_dq + b.d_pred);
  return out;
}

double batch_loss(const Volume3D& p, const Volume3D& q, const Mask3D& gt, const LossConfig& cfg) {
  require_same_dims(p, q, "batch_loss");
  require_same_dims(p, gt, "batch_loss");
  const auto pv = p.values();
  const auto qv = q.values();
  const auto xv = gt.values();
  const double total = parallel::sum(pv.size(), [&](std::size_t i) {
    return combined_loss_2020({pv[i], qv[i], xv[i] != 0 ? 1 : 0}, cfg).value;
  });
  return total / static_cast<double>(pv.size());
}

}  // namespace labelflip::losses
