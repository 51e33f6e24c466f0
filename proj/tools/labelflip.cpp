// labelflip command-line front end.
//
// Exit codes: 0 success, 1 at least one case failed, 2 usage or
// configuration error (including a manifest that references missing files).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "labelflip/config.hpp"
#include "labelflip/ensemble.hpp"
#include "labelflip/metrics.hpp"
#include "labelflip/nifti.hpp"
#include "labelflip/parallel.hpp"
#include "labelflip/phantom.hpp"
#include "labelflip/refine.hpp"
#include "labelflip/survival.hpp"
#include "labelflip/tables.hpp"
#include "labelflip/uncertainty.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace labelflip;

namespace {

constexpr int kExitCaseFailure = 1;
constexpr int kExitUsage = 2;

/// Raised for problems detected before any processing starts.
struct UsageError : Error {
  using Error::Error;
};

const std::array<const char*, 3> kRegionFile = {"wt", "tc", "et"};
const std::array<const char*, 3> kCertSuffix = {"_unc_whole", "_unc_core", "_unc_enhance"};

bool is_volume_file(const fs::path& p) {
  const auto name = p.filename().string();
  return name.ends_with(".nii") || name.ends_with(".nii.gz");
}

std::string case_name(const fs::path& p) {
  auto name = p.filename().string();
  for (const char* ext : {".nii.gz", ".nii"}) {
    if (name.ends_with(ext)) return name.substr(0, name.size() - std::string(ext).size());
  }
  return name;
}

std::vector<fs::path> list_volumes(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_volume_file(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " '" + path + "' does not exist");
}

void require_dir(const std::string& path, const std::string& what) {
  if (!fs::is_directory(path)) throw UsageError(what + " '" + path + "' is not a directory");
}

/// Finds <dir>/<stem>.nii.gz or <dir>/<stem>.nii.
std::optional<fs::path> find_volume(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".nii.gz", ".nii"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path + "'");
  os << text;
  if (!os) throw Error("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// ---------------------------------------------------------------------------
// Refinement records (machine-readable companion to the text report)

json report_json(const std::string& case_id, const refine::RefinementReport& rep) {
  json j;
  j["case_id"] = case_id;
  for (const auto r : refine::kRegions) {
    const auto& x = rep[r];
    j[refine::short_name(r)] = {
        {"mean_core_confidence", x.mean_core_confidence ? json(*x.mean_core_confidence) : json(nullptr)},
        {"gate_triggered", x.gate_triggered},
        {"fallback_used", x.fallback_used},
        {"core_substituted", x.core_substituted},
        {"failsafe_triggered", x.failsafe_triggered},
        {"final_threshold", x.final_threshold},
        {"voxels", x.voxels}};
  }
  return j;
}

refine::RefinementReport report_from_json(const json& j) {
  refine::RefinementReport rep;
  for (const auto r : refine::kRegions) {
    const auto& x = j.at(refine::short_name(r));
    auto& out = rep[r];
    if (!x.at("mean_core_confidence").is_null())
      out.mean_core_confidence = x.at("mean_core_confidence").get<double>();
    out.gate_triggered = x.at("gate_triggered").get<bool>();
    out.fallback_used = x.at("fallback_used").get<bool>();
    out.core_substituted = x.at("core_substituted").get<bool>();
    out.failsafe_triggered = x.at("failsafe_triggered").get<bool>();
    out.final_threshold = x.at("final_threshold").get<double>();
    out.voxels = x.at("voxels").get<std::size_t>();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Global {
  std::string config_path;
  int threads = -1;

  Config load() const {
    Config cfg;
    try {
      cfg = resolve_config(config_path);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (threads >= 0) cfg.threads = threads;
    parallel::set_threads(cfg.threads);
    return cfg;
  }
};

struct StandardizeArgs {
  std::string in;
  std::string out;
};

int run_standardize(const Global& g, const StandardizeArgs& a) {
  g.load();
  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (fs::is_directory(a.in)) {
    for (const auto& p : list_volumes(a.in)) jobs.emplace_back(p, fs::path(a.out) / p.filename());
    if (jobs.empty()) throw UsageError("no .nii or .nii.gz files in '" + a.in + "'");
    fs::create_directories(a.out);
  } else {
    require_file(a.in, "input volume");
    ensure_parent(a.out);
    jobs.emplace_back(a.in, a.out);
  }
  int status = 0;
  for (const auto& [src, dst] : jobs) {
    try {
      const auto img = io::read_nifti(src.string());
      const auto s = standardize_nonzero(img.volume);
      if (s.warning) std::cerr << src.string() << ": warning: " << *s.warning << '\n';
      io::write_nifti(s.volume, dst.string(), io::NiftiType::Float32, &img.header);
    } catch (const Error& e) {
      std::cerr << src.string() << ": error: " << e.what() << '\n';
      status = kExitCaseFailure;
    }
  }
  return status;
}

struct EnsembleArgs {
  std::vector<std::string> preds;
  std::vector<std::string> flips;
  std::string out;
};

std::vector<Axis> parse_flips(const std::string& spec) {
  std::vector<Axis> out;
  if (spec == "none" || spec.empty()) return out;
  for (const char c : spec) {
    try {
      out.push_back(parse_axis(c));
    } catch (const Error& e) {
      throw UsageError("bad --flips value '" + spec + "': " + e.what());
    }
  }
  return out;
}

int run_ensemble(const Global& g, const EnsembleArgs& a) {
  g.load();
  if (!a.flips.empty() && a.flips.size() != a.preds.size())
    throw UsageError("--flips must be given once per --pred or not at all");
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::vector<Axis>> flips;
  for (std::size_t i = 0; i < a.preds.size(); ++i) {
    const auto& spec = a.preds[i];
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw UsageError("--pred expects P_PATH:Q_PATH, got '" + spec + "'");
    pairs.emplace_back(spec.substr(0, colon), spec.substr(colon + 1));
    require_file(pairs.back().first, "prediction p");
    require_file(pairs.back().second, "prediction q");
    flips.push_back(a.flips.empty() ? std::vector<Axis>{} : parse_flips(a.flips[i]));
  }

  std::vector<ensemble::FlippedPrediction> preds;
  io::NiftiHeader tmpl;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto p = io::read_nifti(pairs[i].first);
    auto q = io::read_nifti(pairs[i].second);
    if (i == 0) tmpl = p.header;
    ensemble::PredictionPair pair{std::move(p.volume), std::move(q.volume)};
    pair.validate();
    preds.push_back({std::move(pair), flips[i]});
  }
  ensure_parent(a.out);
  io::write_nifti(ensemble::ensemble_with_flips(preds), a.out, io::NiftiType::Float32, &tmpl);
  return 0;
}

struct RefineArgs {
  std::string prob_wt, prob_tc, prob_et;
  std::string out_labels;
  std::string out_report;
  std::string out_record;
  std::string case_id;
  std::optional<bool> nesting;
};

int run_refine(const Global& g, const RefineArgs& a) {
  auto cfg = g.load();
  if (a.nesting) cfg.refinement.enforce_nesting = *a.nesting;
  require_file(a.prob_wt, "--prob-wt");
  require_file(a.prob_tc, "--prob-tc");
  require_file(a.prob_et, "--prob-et");
  const auto wt = io::read_nifti(a.prob_wt);
  const auto tc = io::read_nifti(a.prob_tc);
  const auto et = io::read_nifti(a.prob_et);
  const auto res = refine::refine_segmentation(wt.volume, tc.volume, et.volume, cfg.refinement);
  ensure_parent(a.out_labels);
  io::write_nifti(refine::masks_to_brats_labels(res.segmentation), a.out_labels, &wt.header);
  const auto summary = res.report.summary();
  if (!a.out_report.empty()) {
    ensure_parent(a.out_report);
    write_text(a.out_report, summary);
  } else {
    std::cout << summary;
  }
  if (!a.out_record.empty()) {
    const std::string id = a.case_id.empty() ? case_name(a.out_labels) : a.case_id;
    ensure_parent(a.out_record);
    write_text(a.out_record, report_json(id, res.report).dump(1) + "\n");
  }
  return 0;
}

struct UncertaintyArgs {
  std::string prob;
  std::string q;
  std::string formula = "flip";
  std::string out;
  bool raw = false;
  bool as_float = false;
};

int run_uncertainty(const Global& g, const UncertaintyArgs& a) {
  g.load();
  uncertainty::Formula f;
  try {
    f = uncertainty::parse_formula(a.formula);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const bool needs_q = f == uncertainty::Formula::Flip;
  const std::string& input = needs_q ? a.q : a.prob;
  if (input.empty())
    throw UsageError(needs_q ? "formula 'flip' needs --q" : "formula '" + a.formula + "' needs --prob");
  if (a.raw && f == uncertainty::Formula::Flip) throw UsageError("--raw does not apply to the flip formula");
  require_file(input, needs_q ? "--q" : "--prob");

  const auto img = io::read_nifti(input);
  Volume3D cert;
  switch (f) {
    case uncertainty::Formula::Flip: cert = uncertainty::certainty_from_q(img.volume); break;
    case uncertainty::Formula::Symmetric:
      cert = a.raw ? uncertainty::symmetric_raw(img.volume) : uncertainty::certainty_symmetric(img.volume);
      break;
    case uncertainty::Formula::NegativeOnly:
      cert = a.raw ? uncertainty::negative_only_raw(img.volume)
                   : uncertainty::certainty_negative_only(img.volume);
      break;
  }
  ensure_parent(a.out);
  if (a.as_float) {
    io::write_nifti(cert, a.out, io::NiftiType::Float32, &img.header);
  } else {
    // Challenge maps are integers 0..100.
    Mask3D rounded(cert.dims(), std::uint8_t{0}, cert.spacing());
    for (std::size_t i = 0; i < cert.size(); ++i)
      rounded[i] = static_cast<std::uint8_t>(std::clamp(std::lround(cert[i]), 0L, 100L));
    io::write_nifti(rounded, a.out, &img.header);
  }
  return 0;
}

struct EvaluateArgs {
  std::string pred_dir;
  std::string gt_dir;
  std::string cert_dir;
  std::string report_dir;
  std::string out_csv;
  bool no_summary = false;
};

struct CaseJob {
  std::string id;
  fs::path pred;
  fs::path gt;
  std::array<fs::path, 3> cert;
  std::optional<fs::path> record;
};

int run_evaluate(const Global& g, const EvaluateArgs& a) {
  const auto cfg = g.load();
  require_dir(a.pred_dir, "--pred-dir");
  require_dir(a.gt_dir, "--gt-dir");
  if (!a.cert_dir.empty()) require_dir(a.cert_dir, "--cert-dir");
  if (!a.report_dir.empty()) require_dir(a.report_dir, "--report-dir");

  // Fail fast: every referenced file must exist before any case is scored.
  std::vector<CaseJob> jobs;
  for (const auto& p : list_volumes(a.pred_dir)) {
    CaseJob job;
    job.id = case_name(p);
    job.pred = p;
    const auto gt = find_volume(a.gt_dir, job.id);
    if (!gt) throw UsageError("case '" + job.id + "' has no ground truth in '" + a.gt_dir + "'");
    job.gt = *gt;
    if (!a.cert_dir.empty()) {
      for (std::size_t r = 0; r < 3; ++r) {
        const auto c = find_volume(a.cert_dir, job.id + kCertSuffix[r]);
        if (!c) throw UsageError("case '" + job.id + "' is missing certainty map " + job.id + kCertSuffix[r]);
        job.cert[r] = *c;
      }
    }
    if (!a.report_dir.empty()) {
      const fs::path rec = fs::path(a.report_dir) / (job.id + ".json");
      if (!fs::is_regular_file(rec)) throw UsageError("case '" + job.id + "' has no refinement record " + rec.string());
      job.record = rec;
    }
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw UsageError("no .nii or .nii.gz files in '" + a.pred_dir + "'");

  const metrics::Hd95Options hd_opts{cfg.hd95_one_empty_sentinel};
  const std::set<int> labels = {0, 1, 2, 4};
  std::vector<std::optional<io::CaseResultRecord>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());

  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& job = jobs[i];
    try {
      const auto pred = refine::brats_labels_to_masks(io::read_label_map(job.pred.string(), labels));
      const auto gt = refine::brats_labels_to_masks(io::read_label_map(job.gt.string(), labels));
      io::CaseResultRecord rec;
      rec.case_id = job.id;
      for (std::size_t r = 0; r < 3; ++r) {
        const auto m = metrics::evaluate_pair(pred.masks[r], gt.masks[r], hd_opts);
        rec.dice[r] = m.dice;
        rec.hd95[r] = m.hd95;
      }
      if (!a.cert_dir.empty()) {
        std::array<io::RegionAucs, 3> aucs{};
        for (std::size_t r = 0; r < 3; ++r) {
          const auto cert = io::read_nifti(job.cert[r].string());
          const auto curve = uncertainty::evaluate_uncertainty(pred.masks[r], gt.masks[r], cert.volume,
                                                               cfg.uncertainty_thresholds);
          aucs[r] = {curve.dice_auc, curve.ftp_auc, curve.ftn_auc};
        }
        rec.uncertainty = aucs;
      }
      if (job.record) rec.refinement = report_from_json(json::parse(read_text(job.record->string())));
      results[i] = std::move(rec);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }

  int status = 0;
  std::vector<io::CaseResultRecord> ok;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) {
      ok.push_back(std::move(*results[i]));
    } else {
      std::cerr << jobs[i].id << ": error: " << errors[i] << '\n';
      status = kExitCaseFailure;
    }
  }
  ensure_parent(a.out_csv);
  io::write_results_table(a.out_csv, ok, !a.no_summary);
  std::cerr << "evaluated " << ok.size() << " of " << jobs.size() << " cases\n";
  return status;
}

struct SurvivalTrainArgs {
  std::string features_csv;
  std::optional<std::uint64_t> seed;
  std::string model_out;
};

int run_survival_train(const Global& g, const SurvivalTrainArgs& a) {
  auto cfg = g.load();
  if (a.seed) cfg.survival.forest.seed = *a.seed;
  require_file(a.features_csv, "--features-csv");
  const auto records = io::read_case_table(a.features_csv);
  const auto model = survival::fit_fusion(records, cfg.survival);
  ensure_parent(a.model_out);
  write_text(a.model_out, survival::serialize_model(model));
  std::cerr << "trained on " << records.size() << " cases, " << model.forest.trees.size() << " trees\n";
  return 0;
}

struct SurvivalPredictArgs {
  std::string model;
  std::string features_csv;
  std::string out_csv;
};

int run_survival_predict(const Global& g, const SurvivalPredictArgs& a) {
  g.load();
  require_file(a.model, "--model");
  require_file(a.features_csv, "--features-csv");
  const auto model = survival::deserialize_model(read_text(a.model));
  const auto records = io::read_case_table(a.features_csv);
  std::vector<std::pair<std::string, double>> preds;
  for (const auto& r : records) preds.emplace_back(r.case_id, survival::predict_fused(model, r));
  ensure_parent(a.out_csv);
  io::write_predictions(a.out_csv, preds);
  return 0;
}

struct SurvivalCvArgs {
  std::string features_csv;
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  std::string out_csv;
};

int run_survival_cv(const Global& g, const SurvivalCvArgs& a) {
  const auto cfg = g.load();
  require_file(a.features_csv, "--features-csv");
  const auto records = io::read_case_table(a.features_csv);
  const auto rep = survival::cross_validate(records, cfg.survival, a.folds, a.seed);

  io::CsvTable t;
  t.header = {"fold", "n_test", "accuracy_fused", "accuracy_ols", "accuracy_forest"};
  for (const auto& f : rep.folds) {
    t.rows.push_back({std::to_string(f.fold), std::to_string(f.n_test), io::format_number(f.accuracy_fused),
                      io::format_number(f.accuracy_ols), io::format_number(f.accuracy_forest)});
  }
  t.rows.push_back({"Mean", std::to_string(records.size()), io::format_number(rep.mean_accuracy_fused),
                    io::format_number(rep.mean_accuracy_ols), io::format_number(rep.mean_accuracy_forest)});
  if (!a.out_csv.empty()) {
    ensure_parent(a.out_csv);
    io::write_csv(a.out_csv, t);
  } else {
    std::cout << io::format_csv(t);
  }
  return 0;
}

struct FeaturesArgs {
  std::string labels_dir;
  std::string cases_csv;
  std::string out_csv;
};

int run_features(const Global& g, const FeaturesArgs& a) {
  const auto cfg = g.load();
  require_dir(a.labels_dir, "--labels-dir");
  require_file(a.cases_csv, "--cases-csv");
  const auto cases = io::read_case_table(a.cases_csv);
  std::vector<fs::path> paths;
  for (const auto& c : cases) {
    const auto p = find_volume(a.labels_dir, c.case_id);
    if (!p) throw UsageError("case '" + c.case_id + "' has no label map in '" + a.labels_dir + "'");
    paths.push_back(*p);
  }
  int status = 0;
  std::vector<survival::SurvivalRecord> out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    try {
      const auto seg = refine::brats_labels_to_masks(io::read_label_map(paths[i].string(), {0, 1, 2, 4}));
      auto rec = survival::extract_features(seg, cases[i].age, cfg.feature_connectivity, cases[i].case_id);
      rec.survival_days = cases[i].survival_days;
      rec.resection_status = cases[i].resection_status;
      out.push_back(std::move(rec));
    } catch (const Error& e) {
      std::cerr << cases[i].case_id << ": error: " << e.what() << '\n';
      status = kExitCaseFailure;
    }
  }
  ensure_parent(a.out_csv);
  io::write_case_table(a.out_csv, out);
  return status;
}

struct PhantomArgs {
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> dims;
  std::string out_dir;
  std::string prefix = "phantom";
};

int run_phantom(const Global& g, const PhantomArgs& a) {
  const auto cfg = g.load();
  const std::string name = a.preset.value_or(cfg.phantom.preset);
  const std::uint64_t seed = a.seed.value_or(cfg.phantom.seed);
  Dims dims = cfg.phantom.dims;
  if (!a.dims.empty()) {
    if (a.dims.size() != 3) throw UsageError("--dims expects three values");
    dims = {a.dims[0], a.dims[1], a.dims[2]};
  }
  phantom::PhantomSpec spec;
  try {
    spec = phantom::preset(name, seed, dims);
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto ph = phantom::generate_phantom(spec);
  fs::create_directories(a.out_dir);
  const fs::path base = fs::path(a.out_dir) / a.prefix;
  for (std::size_t r = 0; r < 3; ++r) {
    io::write_nifti(ph.p[r], base.string() + "_p_" + kRegionFile[r] + ".nii.gz");
    io::write_nifti(ph.q[r], base.string() + "_q_" + kRegionFile[r] + ".nii.gz");
  }
  io::write_nifti(refine::masks_to_brats_labels(ph.truth), base.string() + "_truth.nii.gz");
  return 0;
}

struct CohortArgs {
  std::size_t n = 200;
  std::uint64_t seed = 1;
  std::string out_csv;
};

int run_cohort(const Global& g, const CohortArgs& a) {
  g.load();
  ensure_parent(a.out_csv);
  io::write_case_table(a.out_csv, phantom::synthetic_cohort(a.n, a.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"labelflip: label-flip uncertainty tools for brain tumour segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "labelflip 1.0.0");

  Global g;
  app.add_option("--config", g.config_path,
                 std::string("JSON config file (default: $") + kConfigEnv + " or built-in defaults)");
  app.add_option("--threads", g.threads, "OpenMP threads; 0 keeps the runtime default")->check(CLI::NonNegativeNumber);

  std::function<int()> action;

  StandardizeArgs st;
  auto* c_st = app.add_subcommand("standardize", "Zero-mean, unit-variance scaling of nonzero intensities");
  c_st->add_option("--in", st.in, "Input volume or directory")->required();
  c_st->add_option("--out", st.out, "Output volume or directory")->required();
  c_st->callback([&] { action = [&] { return run_standardize(g, st); }; });

  EnsembleArgs en;
  auto* c_en = app.add_subcommand("ensemble", "Fuse (p, q) predictions into one probability volume");
  c_en->add_option("--pred", en.preds, "P_PATH:Q_PATH, repeated once per model or view")->required();
  c_en->add_option("--flips", en.flips, "Axes the matching --pred was flipped along (none, x, xz, ...)");
  c_en->add_option("--out", en.out, "Output probability volume")->required();
  c_en->callback([&] { action = [&] { return run_ensemble(g, en); }; });

  RefineArgs rf;
  auto* c_rf = app.add_subcommand("refine", "Threshold, filter and confidence-gate region probabilities");
  c_rf->add_option("--prob-wt", rf.prob_wt)->required();
  c_rf->add_option("--prob-tc", rf.prob_tc)->required();
  c_rf->add_option("--prob-et", rf.prob_et)->required();
  c_rf->add_option("--out-labels", rf.out_labels, "BraTS label map (0, 1, 2, 4)")->required();
  c_rf->add_option("--out-report", rf.out_report, "Text report; printed to stdout when omitted");
  c_rf->add_option("--out-record", rf.out_record, "JSON refinement record for evaluate --report-dir");
  c_rf->add_option("--case-id", rf.case_id, "Case id stored in the record");
  c_rf->add_flag("--nesting,!--no-nesting", rf.nesting, "Override refinement.enforce_nesting");
  c_rf->callback([&] { action = [&] { return run_refine(g, rf); }; });

  UncertaintyArgs un;
  auto* c_un = app.add_subcommand("uncertainty", "Convert model output to a 0-100 certainty map");
  c_un->add_option("--prob", un.prob, "Sigmoid output x (symmetric, negative-only)");
  c_un->add_option("--q", un.q, "Label-flip probability (flip)");
  c_un->add_option("--formula", un.formula)->check(CLI::IsMember({"flip", "symmetric", "negative-only"}));
  c_un->add_option("--out", un.out)->required();
  c_un->add_flag("--raw", un.raw, "Write the printed uncertainty formula instead of the certainty map");
  c_un->add_flag("--float", un.as_float, "Write float32 instead of rounded uint8");
  c_un->callback([&] { action = [&] { return run_uncertainty(g, un); }; });

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Dice, HD95 and uncertainty AUCs per case");
  c_ev->add_option("--pred-dir", ev.pred_dir, "Predicted label maps <case>.nii[.gz]")->required();
  c_ev->add_option("--gt-dir", ev.gt_dir, "Ground-truth label maps with matching names")->required();
  c_ev->add_option("--cert-dir", ev.cert_dir, "Certainty maps <case>_unc_{whole,core,enhance}.nii[.gz]");
  c_ev->add_option("--report-dir", ev.report_dir, "Refinement records <case>.json from refine --out-record");
  c_ev->add_option("--out-csv", ev.out_csv)->required();
  c_ev->add_flag("--no-summary", ev.no_summary, "Omit the Mean and StdDev rows");
  c_ev->callback([&] { action = [&] { return run_evaluate(g, ev); }; });

  SurvivalTrainArgs tr;
  auto* c_tr = app.add_subcommand("survival-train", "Fit the OLS + random forest fusion model");
  c_tr->add_option("--features-csv", tr.features_csv)->required();
  c_tr->add_option("--seed", tr.seed, "Forest seed (overrides config)");
  c_tr->add_option("--model-out", tr.model_out)->required();
  c_tr->callback([&] { action = [&] { return run_survival_train(g, tr); }; });

  SurvivalPredictArgs pr;
  auto* c_pr = app.add_subcommand("survival-predict", "Predict survival days with a saved model");
  c_pr->add_option("--model", pr.model)->required();
  c_pr->add_option("--features-csv", pr.features_csv)->required();
  c_pr->add_option("--out-csv", pr.out_csv)->required();
  c_pr->callback([&] { action = [&] { return run_survival_predict(g, pr); }; });

  SurvivalCvArgs cv;
  auto* c_cv = app.add_subcommand("survival-cv", "k-fold cross-validated class accuracy");
  c_cv->add_option("--features-csv", cv.features_csv)->required();
  c_cv->add_option("--folds", cv.folds)->check(CLI::Range(2, 1000));
  c_cv->add_option("--seed", cv.seed, "Fold assignment seed");
  c_cv->add_option("--out-csv", cv.out_csv, "Per-fold table; printed to stdout when omitted");
  c_cv->callback([&] { action = [&] { return run_survival_cv(g, cv); }; });

  FeaturesArgs fe;
  auto* c_fe = app.add_subcommand("features", "Export age / n_tumors / n_cores / survival per case");
  c_fe->add_option("--labels-dir", fe.labels_dir, "Label maps <case>.nii[.gz]")->required();
  c_fe->add_option("--cases-csv", fe.cases_csv, "case_id,age[,survival_days]")->required();
  c_fe->add_option("--out-csv", fe.out_csv)->required();
  c_fe->callback([&] { action = [&] { return run_features(g, fe); }; });

  PhantomArgs ph;
  auto* c_ph = app.add_subcommand("phantom", "Write a synthetic p/q/ground-truth phantom");
  c_ph->add_option("--preset", ph.preset)->check(CLI::IsMember({"hgg", "lgg"}));
  c_ph->add_option("--seed", ph.seed);
  c_ph->add_option("--dims", ph.dims)->expected(3);
  c_ph->add_option("--out-dir", ph.out_dir)->required();
  c_ph->add_option("--prefix", ph.prefix);
  c_ph->callback([&] { action = [&] { return run_phantom(g, ph); }; });

  CohortArgs co;
  auto* c_co = app.add_subcommand("cohort", "Write a synthetic survival cohort CSV");
  c_co->add_option("--n", co.n)->check(CLI::PositiveNumber);
  c_co->add_option("--seed", co.seed);
  c_co->add_option("--out-csv", co.out_csv)->required();
  c_co->callback([&] { action = [&] { return run_cohort(g, co); }; });

  bool dump = false;
  auto* c_cf = app.add_subcommand("config", "Show the resolved configuration");
  c_cf->add_flag("--dump", dump, "Print the configuration as JSON");
  c_cf->callback([&] {
    action = [&] {
      const auto cfg = g.load();
      std::cout << dump_config(cfg);
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "labelflip: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "labelflip: " << e.what() << '\n';
    return kExitCaseFailure;
  } catch (const std::exception& e) {
    std::cerr << "labelflip: " << e.what() << '\n';
    return kExitCaseFailure;
  }
}
