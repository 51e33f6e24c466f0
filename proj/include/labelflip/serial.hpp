#pragma once

// Single-threaded reference versions of the parallel kernels. Used by the
// tests as a cross-check and by the benchmark as the baseline.

#include <span>

#include "labelflip/ensemble.hpp"
#include "labelflip/losses.hpp"
#include "labelflip/metrics.hpp"
#include "labelflip/survival.hpp"

namespace labelflip::serial {

/// Same sorted-offset mean as ensemble::ensemble_mean, one voxel at a time.
Volume3D ensemble_mean(std::span<const ensemble::PredictionPair> preds);

/// Plain left-to-right sum; equal to losses::batch_loss up to rounding.
double batch_loss(const Volume3D& p, const Volume3D& q, const Mask3D& gt,
                  const losses::LossConfig& cfg);

Mask3D threshold_mask(const Volume3D& p, double t);

Standardized standardize_nonzero(const Volume3D& v);

double dice(const Mask3D& a, const Mask3D& b);

/// Brute-force nearest surface voxel search over all surface pairs.
std::vector<double> directed_surface_distances(const Mask3D& from, const Mask3D& to);

double hausdorff95(const Mask3D& a, const Mask3D& b, const metrics::Hd95Options& opts = {});

/// Trees grown one after another.
survival::ForestModel fit_forest(const std::vector<survival::SurvivalRecord>& train,
                                 const survival::ForestConfig& cfg,
                                 const survival::ClassBins& bins = {});

}  // namespace labelflip::serial
