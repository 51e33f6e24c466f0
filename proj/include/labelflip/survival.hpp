#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "labelflip/refine.hpp"

namespace labelflip::survival {

struct SurvivalRecord {
  std::string case_id;
  double age = 0.0;
  double n_tumors = 0.0;
  double n_cores = 0.0;
  std::optional<double> survival_days;
  std::optional<std::string> resection_status;
};

enum class Feature { Age = 0, NTumors = 1, NCores = 2 };

std::string to_string(Feature f);
Feature parse_feature(const std::string& name);
double feature_value(const SurvivalRecord& r, Feature f);

enum class SurvivalClass { Short = 0, Mid = 1, Long = 2 };

std::string to_string(SurvivalClass c);

/// Short iff d < short_below, Long iff d > long_above, Mid otherwise.
/// Defaults are 10 and 15 months of 30 days.
struct ClassBins {
  double short_below = 300.0;
  double long_above = 450.0;

  SurvivalClass classify(double days) const;
};

/// Counts connected WT and TC components.
SurvivalRecord extract_features(const refine::SegmentationSet& seg, double age,
                                Connectivity connectivity = Connectivity::Corner26,
                                std::string case_id = {});

// ---------------------------------------------------------------------------
// Linear model

struct OlsModel {
  std::vector<Feature> features = {Feature::Age};
  /// Intercept first, then one coefficient per feature.
  std::vector<double> coefficients;
  double cap_days = 1000.0;

  double predict(const SurvivalRecord& r) const;
};

/// Survival times above cap_days are replaced by cap_days before fitting.
OlsModel fit_ols(const std::vector<SurvivalRecord>& train, const std::vector<Feature>& features,
                 double cap_days = 1000.0);

// ---------------------------------------------------------------------------
// Random forest classifier

using ClassProbs = std::array<double, 3>;

struct TreeNode {
  /// -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  ClassProbs proportions{};
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const ClassProbs& predict(const std::vector<double>& x) const;
  int depth() const;
};

struct ForestConfig {
  std::size_t trees = 1000;
  int max_depth = 3;
  std::uint64_t seed = 20200101;
  std::vector<Feature> features = {Feature::Age, Feature::NTumors, Feature::NCores};
};

struct ForestModel {
  ForestConfig config;
  std::vector<DecisionTree> trees;
};

/// Labelled rows in canonical order, ready for tree growing.
struct TrainingSet {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

TrainingSet make_training_set(std::vector<SurvivalRecord> train, const std::vector<Feature>& features,
                              const ClassBins& bins);

/// Seed of the bootstrap generator for one tree.
std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree_index);

/// Grows one Gini tree on a bootstrap resample drawn from tree_seed(seed, index).
DecisionTree grow_tree(const TrainingSet& data, const ForestConfig& cfg, std::size_t tree_index);

/// Trees are grown in parallel; the result does not depend on thread count or
/// on input record order (records are sorted by case_id first).
ForestModel fit_forest(const std::vector<SurvivalRecord>& train, const ForestConfig& cfg,
                       const ClassBins& bins = {});

ClassProbs predict_forest_proba(const ForestModel& model, const SurvivalRecord& r);

// ---------------------------------------------------------------------------
// Fusion

struct FusionConfig {
  std::vector<Feature> ols_features = {Feature::Age};
  double cap_days = 1000.0;
  ForestConfig forest;
  ClassBins bins;
  double override_prob = 0.5;
  /// Replacement survival per forest class; each lies strictly inside its bin.
  std::array<double, 3> override_days = {299.0, 375.0, 451.0};

  void validate() const;
};

struct FusionModel {
  OlsModel ols;
  ForestModel forest;
  ClassBins bins;
  double override_prob = 0.5;
  std::array<double, 3> override_days = {299.0, 375.0, 451.0};
};

FusionModel fit_fusion(const std::vector<SurvivalRecord>& train, const FusionConfig& cfg);

/// Linear prediction, clamped to [0, cap]; replaced by the forest's class
/// value when the forest disagrees with probability >= override_prob.
double fuse_prediction(double ols_days, const ClassProbs& forest_probs, const FusionModel& model);

double predict_fused(const FusionModel& model, const SurvivalRecord& r);

std::string serialize_model(const FusionModel& model);
FusionModel deserialize_model(const std::string& text);

// ---------------------------------------------------------------------------
// Evaluation

struct SurvivalScores {
  double accuracy = 0.0;
  double mse = 0.0;
  double median_se = 0.0;
  double std_se = 0.0;
  double spearman_r = 0.0;
};

/// Pairs are (predicted days, true days).
SurvivalScores evaluate_survival(const std::vector<std::pair<double, double>>& preds,
                                 const ClassBins& bins = {});

/// Ranks with ties given their average rank, 1-based.
std::vector<double> average_ranks(const std::vector<double>& v);

/// Spearman correlation; NaN when either side is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Fold index per record position, from a seeded shuffle.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_test = 0;
  double accuracy_fused = 0.0;
  double accuracy_ols = 0.0;
  double accuracy_forest = 0.0;
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_accuracy_fused = 0.0;
  double mean_accuracy_ols = 0.0;
  double mean_accuracy_forest = 0.0;
};

/// k-fold cross-validation over records sorted by case_id. Accuracies are
/// pooled over all held-out records in the means.
CvReport cross_validate(const std::vector<SurvivalRecord>& records, const FusionConfig& cfg,
                        std::size_t folds, std::uint64_t seed);

}  // namespace labelflip::survival
