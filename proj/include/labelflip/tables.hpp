#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "labelflip/refine.hpp"
#include "labelflip/survival.hpp"

namespace labelflip::io {

/// RFC 4180 table: comma separated, CRLF or LF line ends on input, LF on output,
/// fields quoted only when they contain a comma, quote or line break.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws naming the column when it is missing.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
std::string format_csv(const CsvTable& table);
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest decimal text that reads back to the same double; "nan" for NaN.
std::string format_number(double v);
double parse_number(const std::string& field, const std::string& what);

/// Survival cases: header case_id,age,n_tumors,n_cores,survival_days.
/// Only case_id and age are required; survival_days may be blank.
std::vector<survival::SurvivalRecord> read_case_table(const std::string& path);
CsvTable case_table(std::vector<survival::SurvivalRecord> records);
void write_case_table(const std::string& path, const std::vector<survival::SurvivalRecord>& records);

/// Submission shape case_id,predicted_days, sorted by case_id.
void write_predictions(const std::string& path, std::vector<std::pair<std::string, double>> preds);

struct RegionAucs {
  double dice_auc = 0.0;
  double ftp_auc = 0.0;
  double ftn_auc = 0.0;
};

/// One evaluated case; region arrays are indexed by refine::RegionLabel.
struct CaseResultRecord {
  std::string case_id;
  std::array<double, 3> dice{};
  std::array<std::optional<double>, 3> hd95{};
  std::optional<refine::RefinementReport> refinement;
  std::optional<std::array<RegionAucs, 3>> uncertainty;
};

/// Fixed column order; rows sorted by case_id, then "Mean" and "StdDev"
/// summary rows over the defined values of each numeric column.
CsvTable results_table(std::vector<CaseResultRecord> records, bool with_summary = true);
void write_results_table(const std::string& path, const std::vector<CaseResultRecord>& records,
                         bool with_summary = true);

/// Parses the per-case rows of a results table (summary rows are skipped).
std::vector<CaseResultRecord> read_results_table(const std::string& path);

}  // namespace labelflip::io
