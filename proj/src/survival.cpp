#include "labelflip/survival.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "labelflip/parallel.hpp"

namespace labelflip::survival {

std::string to_string(Feature f) {
  switch (f) {
    case Feature::Age: return "age";
    case Feature::NTumors: return "n_tumors";
    case Feature::NCores: return "n_cores";
  }
  return "age";
}

Feature parse_feature(const std::string& name) {
  if (name == "age") return Feature::Age;
  if (name == "n_tumors") return Feature::NTumors;
  if (name == "n_cores") return Feature::NCores;
  throw Error("unknown survival feature '" + name + "' (expected age, n_tumors or n_cores)");
}

double feature_value(const SurvivalRecord& r, Feature f) {
  switch (f) {
    case Feature::Age: return r.age;
    case Feature::NTumors: return r.n_tumors;
    case Feature::NCores: return r.n_cores;
  }
  return r.age;
}

std::string to_string(SurvivalClass c) {
  switch (c) {
    case SurvivalClass::Short: return "short";
    case SurvivalClass::Mid: return "mid";
    case SurvivalClass::Long: return "long";
  }
  return "mid";
}

SurvivalClass ClassBins::classify(double days) const {
  if (days < short_below) return SurvivalClass::Short;
  if (days > long_above) return SurvivalClass::Long;
  return SurvivalClass::Mid;
}

SurvivalRecord extract_features(const refine::SegmentationSet& seg, double age,
                                Connectivity connectivity, std::string case_id) {
  seg.validate();
  SurvivalRecord r;
  r.case_id = std::move(case_id);
  r.age = age;
  r.n_tumors = static_cast<double>(
      connected_components(seg[refine::RegionLabel::WholeTumor], connectivity).component_count());
  r.n_cores = static_cast<double>(
      connected_components(seg[refine::RegionLabel::TumorCore], connectivity).component_count());
  return r;
}

// ---------------------------------------------------------------------------

double OlsModel::predict(const SurvivalRecord& r) const {
  double y = coefficients.at(0);
  for (std::size_t k = 0; k < features.size(); ++k) {
    y += coefficients.at(k + 1) * feature_value(r, features[k]);
  }
  return y;
}

OlsModel fit_ols(const std::vector<SurvivalRecord>& train, const std::vector<Feature>& features,
                 double cap_days) {
  const std::size_t p = features.size() + 1;
  if (train.size() < p) {
    throw Error("least squares needs at least " + std::to_string(p) + " records, got " +
                std::to_string(train.size()));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& r = train[i];
    if (!r.survival_days) throw Error("record '" + r.case_id + "' has no survival_days");
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = 1.0;
    for (std::size_t k = 0; k < features.size(); ++k) {
      x(row, static_cast<Eigen::Index>(k + 1)) = feature_value(r, features[k]);
    }
    y(row) = std::min(*r.survival_days, cap_days);
  }

  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::VectorXd rhs = x.transpose() * y;
  Eigen::VectorXd beta;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (lu.rank() == gram.rows()) {
    beta = gram.ldlt().solve(rhs);
  } else {
    // Rank deficient: minimum-norm solution.
    beta = gram.completeOrthogonalDecomposition().pseudoInverse() * rhs;
  }

  OlsModel m;
  m.features = features;
  m.cap_days = cap_days;
  m.coefficients.assign(beta.data(), beta.data() + beta.size());
  return m;
}

// ---------------------------------------------------------------------------

const ClassProbs& DecisionTree::predict(const std::vector<double>& x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes[i].proportions;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  // Children are always stored after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

TrainingSet make_training_set(std::vector<SurvivalRecord> train, const std::vector<Feature>& features,
                              const ClassBins& bins) {
  std::stable_sort(train.begin(), train.end(),
                   [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  TrainingSet ts;
  for (const auto& r : train) {
    if (!r.survival_days) throw Error("record '" + r.case_id + "' has no survival_days");
    std::vector<double> row;
    for (const auto f : features) row.push_back(feature_value(r, f));
    ts.x.push_back(std::move(row));
    ts.y.push_back(static_cast<int>(bins.classify(*r.survival_days)));
  }
  return ts;
}

std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree_index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(tree_index) >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

ClassProbs class_counts(const TrainingSet& data, const std::vector<std::size_t>& rows) {
  ClassProbs c{};
  for (const auto r : rows) c[static_cast<std::size_t>(data.y[r])] += 1.0;
  return c;
}

double gini(const ClassProbs& counts, double n) {
  if (n <= 0.0) return 0.0;
  double s = 1.0;
  for (const double c : counts) s -= (c / n) * (c / n);
  return s;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

Split best_split(const TrainingSet& data, const std::vector<std::size_t>& rows) {
  Split best;
  const std::size_t nf = data.x.empty() ? 0 : data.x.front().size();
  const double n = static_cast<double>(rows.size());
  std::vector<std::pair<double, int>> column(rows.size());
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      column[i] = {data.x[rows[i]][f], data.y[rows[i]]};
    }
    std::sort(column.begin(), column.end());
    ClassProbs left{};
    ClassProbs right = class_counts(data, rows);
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      left[static_cast<std::size_t>(column[i].second)] += 1.0;
      right[static_cast<std::size_t>(column[i].second)] -= 1.0;
      if (column[i].first == column[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
      // Strict comparison keeps the lowest feature, then the lowest threshold.
      if (imp < best.impurity) {
        best.feature = static_cast<int>(f);
        best.threshold = 0.5 * (column[i].first + column[i + 1].first);
        best.impurity = imp;
      }
    }
  }
  return best;
}

void grow(const TrainingSet& data, const std::vector<std::size_t>& rows, int depth, int max_depth,
          DecisionTree& tree, std::size_t node) {
  const ClassProbs counts = class_counts(data, rows);
  const double n = static_cast<double>(rows.size());
  for (std::size_t k = 0; k < 3; ++k) tree.nodes[node].proportions[k] = counts[k] / n;

  const double parent = gini(counts, n);
  if (depth >= max_depth || parent <= 0.0) return;
  const Split s = best_split(data, rows);
  if (s.feature < 0 || !(s.impurity < parent - 1e-12)) return;

  std::vector<std::size_t> left_rows, right_rows;
  for (const auto r : rows) {
    (data.x[r][static_cast<std::size_t>(s.feature)] <= s.threshold ? left_rows : right_rows).push_back(r);
  }
  const auto left = tree.nodes.size();
  tree.nodes.emplace_back();
  tree.nodes.emplace_back();
  tree.nodes[node].feature = s.feature;
  tree.nodes[node].threshold = s.threshold;
  tree.nodes[node].left = static_cast<int>(left);
  tree.nodes[node].right = static_cast<int>(left + 1);
  grow(data, left_rows, depth + 1, max_depth, tree, left);
  grow(data, right_rows, depth + 1, max_depth, tree, left + 1);
}

}  // namespace

DecisionTree grow_tree(const TrainingSet& data, const ForestConfig& cfg, std::size_t tree_index) {
  const std::size_t n = data.y.size();
  if (n == 0) throw Error("random forest needs at least one training record");
  std::mt19937_64 rng(tree_seed(cfg.seed, tree_index));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(rng);

  DecisionTree tree;
  tree.nodes.emplace_back();
  grow(data, rows, 0, cfg.max_depth, tree, 0);
  return tree;
}

ForestModel fit_forest(const std::vector<SurvivalRecord>& train, const ForestConfig& cfg,
                       const ClassBins& bins) {
  if (cfg.trees == 0) throw Error("random forest needs at least one tree");
  if (cfg.max_depth < 0) throw Error("random forest max_depth must be >= 0");
  const TrainingSet data = make_training_set(train, cfg.features, bins);
  ForestModel model{cfg, std::vector<DecisionTree>(cfg.trees)};
  parallel::for_each_index(cfg.trees,
                           [&](std::size_t t) { model.trees[t] = grow_tree(data, cfg, t); });
  return model;
}

ClassProbs predict_forest_proba(const ForestModel& model, const SurvivalRecord& r) {
  if (model.trees.empty()) throw Error("random forest has no trees");
  std::vector<double> x;
  for (const auto f : model.config.features) x.push_back(feature_value(r, f));
  ClassProbs sum{};
  for (const auto& t : model.trees) {
    const auto& p = t.predict(x);
    for (std::size_t k = 0; k < 3; ++k) sum[k] += p[k];
  }
  for (auto& s : sum) s /= static_cast<double>(model.trees.size());
  return sum;
}

// ---------------------------------------------------------------------------

void FusionConfig::validate() const {
  if (!(bins.short_below <= bins.long_above)) throw Error("survival bins are out of order");
  for (std::size_t k = 0; k < 3; ++k) {
    if (static_cast<std::size_t>(bins.classify(override_days[k])) != k)
      throw Error("override survival for class '" + to_string(static_cast<SurvivalClass>(k)) +
                  "' does not fall inside that class");
  }
  if (!(override_prob >= 0.0 && override_prob <= 1.0))
    throw Error("override probability must lie in [0, 1]");
  if (!(cap_days > 0.0)) throw Error("survival cap must be positive");
}

FusionModel fit_fusion(const std::vector<SurvivalRecord>& train, const FusionConfig& cfg) {
  cfg.validate();
  FusionModel m;
  m.ols = fit_ols(train, cfg.ols_features, cfg.cap_days);
  m.forest = fit_forest(train, cfg.forest, cfg.bins);
  m.bins = cfg.bins;
  m.override_prob = cfg.override_prob;
  m.override_days = cfg.override_days;
  return m;
}

double fuse_prediction(double ols_days, const ClassProbs& forest_probs, const FusionModel& model) {
  const double d = std::clamp(ols_days, 0.0, model.ols.cap_days);
  const auto linear_class = model.bins.classify(d);
  // First maximum wins on ties.
  std::size_t best = 0;
  for (std::size_t k = 1; k < 3; ++k) {
    if (forest_probs[k] > forest_probs[best]) best = k;
  }
  if (static_cast<SurvivalClass>(best) != linear_class && forest_probs[best] >= model.override_prob)
    return model.override_days[best];
  return d;
}

double predict_fused(const FusionModel& model, const SurvivalRecord& r) {
  return fuse_prediction(model.ols.predict(r), predict_forest_proba(model.forest, r), model);
}

// ---------------------------------------------------------------------------

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw Error("spearman needs two equal, non-empty lists");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

SurvivalScores evaluate_survival(const std::vector<std::pair<double, double>>& preds,
                                 const ClassBins& bins) {
  if (preds.empty()) throw Error("evaluate_survival needs at least one prediction");
  const double n = static_cast<double>(preds.size());
  std::vector<double> se, pv, tv;
  std::size_t correct = 0;
  for (const auto& [pred, truth] : preds) {
    correct += bins.classify(pred) == bins.classify(truth);
    se.push_back((pred - truth) * (pred - truth));
    pv.push_back(pred);
    tv.push_back(truth);
  }
  SurvivalScores s;
  s.accuracy = static_cast<double>(correct) / n;
  s.mse = std::accumulate(se.begin(), se.end(), 0.0) / n;
  double var = 0.0;
  for (const double e : se) var += (e - s.mse) * (e - s.mse);
  s.std_se = std::sqrt(var / n);
  std::vector<double> sorted = se;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size() / 2;
  s.median_se = sorted.size() % 2 == 1 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  s.spearman_r = spearman(pv, tv);
  return s;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error("cross-validation needs at least 2 folds");
  if (n < folds) throw Error("cross-validation needs at least one record per fold");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
  return fold;
}

CvReport cross_validate(const std::vector<SurvivalRecord>& records, const FusionConfig& cfg,
                        std::size_t folds, std::uint64_t seed) {
  std::vector<SurvivalRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  const auto fold = fold_assignment(sorted.size(), folds, seed);

  CvReport report;
  std::size_t total = 0, ok_fused = 0, ok_ols = 0, ok_forest = 0;
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<SurvivalRecord> train, test;
    for (std::size_t i = 0; i < sorted.size(); ++i) (fold[i] == k ? test : train).push_back(sorted[i]);
    const FusionModel model = fit_fusion(train, cfg);

    FoldResult fr;
    fr.fold = k;
    fr.n_test = test.size();
    std::size_t f_ok = 0, o_ok = 0, r_ok = 0;
    for (const auto& r : test) {
      const auto truth = cfg.bins.classify(*r.survival_days);
      const double ols_days = model.ols.predict(r);
      const auto probs = predict_forest_proba(model.forest, r);
      f_ok += cfg.bins.classify(fuse_prediction(ols_days, probs, model)) == truth;
      o_ok += cfg.bins.classify(std::clamp(ols_days, 0.0, model.ols.cap_days)) == truth;
      const auto best = static_cast<std::size_t>(
          std::max_element(probs.begin(), probs.end()) - probs.begin());
      r_ok += static_cast<SurvivalClass>(best) == truth;
    }
    const double nt = static_cast<double>(test.size());
    fr.accuracy_fused = static_cast<double>(f_ok) / nt;
    fr.accuracy_ols = static_cast<double>(o_ok) / nt;
    fr.accuracy_forest = static_cast<double>(r_ok) / nt;
    report.folds.push_back(fr);
    total += test.size();
    ok_fused += f_ok;
    ok_ols += o_ok;
    ok_forest += r_ok;
  }
  const double t = static_cast<double>(total);
  report.mean_accuracy_fused = static_cast<double>(ok_fused) / t;
  report.mean_accuracy_ols = static_cast<double>(ok_ols) / t;
  report.mean_accuracy_forest = static_cast<double>(ok_forest) / t;
  return report;
}

}  // namespace labelflip::survival
