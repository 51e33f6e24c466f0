#pragma once

#include <string>

#include "labelflip/volume.hpp"

namespace labelflip::losses {

/// Clamp applied to every probability before a logarithm is taken.
inline constexpr double kEps = 1e-7;

enum class KlVariant {
  /// w log w - w log p, the one-sided form. Can be negative.
  LiteralPositiveTerm,
  /// Adds the (1 - w) complement term; a proper divergence.
  FullBinary,
};

KlVariant parse_kl_variant(const std::string& name);
std::string to_string(KlVariant v);

struct LossConfig {
  double gamma = 2.0;
  double lambda = 0.1;
  KlVariant kl_variant = KlVariant::LiteralPositiveTerm;

  void validate() const;
};

/// Per-voxel inputs: prediction p, label-flip probability q, ground truth x.
struct LossInputs {
  double p = 0.5;
  double q = 0.25;
  int x = 0;
};

/// Value plus partial derivatives with respect to the prediction (first
/// argument of a two-argument loss) and the target.
struct Grad2 {
  double value = 0.0;
  double d_pred = 0.0;
  double d_target = 0.0;
};

struct LossGrad {
  double value = 0.0;
  double d_p = 0.0;
  double d_q = 0.0;
};

double clamp_probability(double p);
double clamp_flip(double q);

/// Soft-target focal loss t (1-p)^g (-log p) + (1-t) p^g (-log(1-p)).
Grad2 focal(double p, double t, double gamma);

Grad2 bce(double pred, double target);

/// d_pred is the derivative in p, d_target the derivative in w.
Grad2 kl(double w, double p, KlVariant variant);

/// (p - w)^2 * kl(w, p).
Grad2 focal_kl(double w, double p, KlVariant variant);

/// Soft target w = (1-x) q + x (1-q).
double flip_target(double q, int x);

/// 1 when the prediction thresholded at 0.5 disagrees with x.
double disagreement(double p, int x);

/// Focal(p, w) + BCE(q, z).
LossGrad label_flip_loss_2019(const LossInputs& in, const LossConfig& cfg);

/// lambda Focal(p, x) + (1 - lambda) Focal_KL(w || p) + (1 - lambda) BCE(q, z).
LossGrad combined_loss_2020(const LossInputs& in, const LossConfig& cfg);

/// Mean of combined_loss_2020 over every voxel.
double batch_loss(const Volume3D& p, const Volume3D& q, const Mask3D& gt, const LossConfig& cfg);

}  // namespace labelflip::losses
