#include "labelflip/tables.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace labelflip::io {

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::column(const std::string& name) const {
  if (const auto c = find_column(name)) return *c;
  throw Error("missing required column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  bool record_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    record_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw Error("malformed CSV: quote inside an unquoted field");
        quoted = true;
        field_started = true;
        record_started = true;
        break;
      case ',':
        record_started = true;
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        if (record_started || field_started) end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
        record_started = true;
    }
  }
  if (quoted) throw Error("malformed CSV: unterminated quoted field");
  if (record_started || field_started) end_record();

  CsvTable t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw Error("malformed CSV: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                  " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

namespace {

std::string quote(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (const char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void append_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(row[i]);
  }
  out.push_back('\n');
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::string out;
  append_row(out, table.header);
  for (const auto& r : table.rows) append_row(out, r);
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_csv(ss.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path + "'");
  const std::string text = format_csv(table);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw Error("failed writing '" + path + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& field, const std::string& what) {
  if (field == "nan") return std::nan("");
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw Error("invalid number '" + field + "' in " + what);
  return v;
}

// ---------------------------------------------------------------------------

std::vector<survival::SurvivalRecord> read_case_table(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.empty()) throw Error(path + ": missing required column 'case_id'");
  const std::size_t c_id = t.column("case_id");
  const std::size_t c_age = t.column("age");
  const auto c_tum = t.find_column("n_tumors");
  const auto c_core = t.find_column("n_cores");
  const auto c_surv = t.find_column("survival_days");
  const auto c_res = t.find_column("resection_status");

  std::vector<survival::SurvivalRecord> out;
  for (const auto& row : t.rows) {
    survival::SurvivalRecord r;
    r.case_id = row[c_id];
    if (r.case_id.empty()) throw Error(path + ": empty case_id");
    const std::string where = path + " (case " + r.case_id + ")";
    r.age = parse_number(row[c_age], where);
    if (!(r.age > 0.0)) throw Error(where + ": age must be positive");
    if (c_tum && !row[*c_tum].empty()) r.n_tumors = parse_number(row[*c_tum], where);
    if (c_core && !row[*c_core].empty()) r.n_cores = parse_number(row[*c_core], where);
    if (r.n_tumors < 0 || r.n_cores < 0) throw Error(where + ": component counts must be >= 0");
    if (c_surv && !row[*c_surv].empty()) {
      r.survival_days = parse_number(row[*c_surv], where);
      if (*r.survival_days < 0) throw Error(where + ": survival_days must be >= 0");
    }
    if (c_res && !row[*c_res].empty()) r.resection_status = row[*c_res];
    out.push_back(std::move(r));
  }
  return out;
}

CsvTable case_table(std::vector<survival::SurvivalRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  CsvTable t;
  t.header = {"case_id", "age", "n_tumors", "n_cores", "survival_days"};
  for (const auto& r : records) {
    t.rows.push_back({r.case_id, format_number(r.age), format_number(r.n_tumors),
                      format_number(r.n_cores), r.survival_days ? format_number(*r.survival_days) : ""});
  }
  return t;
}

void write_case_table(const std::string& path, const std::vector<survival::SurvivalRecord>& records) {
  write_csv(path, case_table(records));
}

void write_predictions(const std::string& path, std::vector<std::pair<std::string, double>> preds) {
  std::stable_sort(preds.begin(), preds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  CsvTable t;
  t.header = {"case_id", "predicted_days"};
  for (const auto& [id, d] : preds) t.rows.push_back({id, format_number(d)});
  write_csv(path, t);
}

// ---------------------------------------------------------------------------

namespace {

using refine::RegionLabel;

// Column order follows the tables of Dice / HD95 results: ET, WT, TC.
constexpr std::array<RegionLabel, 3> kMetricOrder = {RegionLabel::EnhancingTumor, RegionLabel::WholeTumor,
                                                     RegionLabel::TumorCore};

std::size_t idx(RegionLabel r) { return static_cast<std::size_t>(r); }

std::vector<std::string> results_header() {
  std::vector<std::string> h = {"case_id"};
  for (const auto r : kMetricOrder) h.push_back("dice_" + refine::short_name(r));
  for (const auto r : kMetricOrder) h.push_back("hd95_" + refine::short_name(r));
  for (const char* m : {"dice_auc_", "ftp_auc_", "ftn_auc_"}) {
    for (const auto r : refine::kRegions) h.push_back(m + refine::short_name(r));
  }
  for (const auto r : refine::kRegions) {
    const auto n = refine::short_name(r);
    h.push_back("confidence_" + n);
    h.push_back("fallback_" + n);
    h.push_back("threshold_" + n);
  }
  h.push_back("core_substituted");
  h.push_back("failsafe");
  return h;
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

CsvTable results_table(std::vector<CaseResultRecord> records, bool with_summary) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  CsvTable t;
  t.header = results_header();
  for (const auto& rec : records) {
    std::vector<std::string> row = {rec.case_id};
    for (const auto r : kMetricOrder) row.push_back(format_number(rec.dice[idx(r)]));
    for (const auto r : kMetricOrder) row.push_back(opt(rec.hd95[idx(r)]));
    for (int m = 0; m < 3; ++m) {
      for (const auto r : refine::kRegions) {
        if (!rec.uncertainty) {
          row.emplace_back();
          continue;
        }
        const auto& a = (*rec.uncertainty)[idx(r)];
        row.push_back(format_number(m == 0 ? a.dice_auc : m == 1 ? a.ftp_auc : a.ftn_auc));
      }
    }
    for (const auto r : refine::kRegions) {
      if (!rec.refinement) {
        row.insert(row.end(), 3, "");
        continue;
      }
      const auto& rr = (*rec.refinement)[r];
      row.push_back(opt(rr.mean_core_confidence));
      row.push_back(rr.fallback_used ? "1" : "0");
      row.push_back(format_number(rr.final_threshold));
    }
    if (rec.refinement) {
      row.push_back((*rec.refinement)[RegionLabel::TumorCore].core_substituted ? "1" : "0");
      row.push_back((*rec.refinement)[RegionLabel::WholeTumor].failsafe_triggered ? "1" : "0");
    } else {
      row.insert(row.end(), 2, "");
    }
    t.rows.push_back(std::move(row));
  }

  if (with_summary && !records.empty()) {
    std::vector<std::string> mean_row = {"Mean"};
    std::vector<std::string> std_row = {"StdDev"};
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      std::vector<double> vals;
      for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& f = t.rows[r][c];
        if (!f.empty()) vals.push_back(parse_number(f, "results column " + t.header[c]));
      }
      if (vals.empty()) {
        mean_row.emplace_back();
        std_row.emplace_back();
        continue;
      }
      double mean = 0.0;
      for (const double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (const double v : vals) var += (v - mean) * (v - mean);
      mean_row.push_back(format_number(mean));
      std_row.push_back(format_number(std::sqrt(var / static_cast<double>(vals.size()))));
    }
    t.rows.push_back(std::move(mean_row));
    t.rows.push_back(std::move(std_row));
  }
  return t;
}

void write_results_table(const std::string& path, const std::vector<CaseResultRecord>& records,
                         bool with_summary) {
  write_csv(path, results_table(records, with_summary));
}

std::vector<CaseResultRecord> read_results_table(const std::string& path) {
  const CsvTable t = read_csv(path);
  for (const auto& h : results_header()) t.column(h);
  auto num = [&](const std::vector<std::string>& row, const std::string& col) -> std::optional<double> {
    const auto& f = row[t.column(col)];
    if (f.empty()) return std::nullopt;
    return parse_number(f, path + " column " + col);
  };

  std::vector<CaseResultRecord> out;
  for (const auto& row : t.rows) {
    const auto& id = row[t.column("case_id")];
    if (id == "Mean" || id == "StdDev") continue;
    CaseResultRecord rec;
    rec.case_id = id;
    for (const auto r : refine::kRegions) {
      const auto n = refine::short_name(r);
      rec.dice[idx(r)] = num(row, "dice_" + n).value_or(0.0);
      rec.hd95[idx(r)] = num(row, "hd95_" + n);
    }
    if (num(row, "dice_auc_WT")) {
      std::array<RegionAucs, 3> a{};
      for (const auto r : refine::kRegions) {
        const auto n = refine::short_name(r);
        a[idx(r)] = {num(row, "dice_auc_" + n).value_or(0.0), num(row, "ftp_auc_" + n).value_or(0.0),
                     num(row, "ftn_auc_" + n).value_or(0.0)};
      }
      rec.uncertainty = a;
    }
    if (num(row, "threshold_WT")) {
      refine::RefinementReport rep;
      for (const auto r : refine::kRegions) {
        const auto n = refine::short_name(r);
        auto& rr = rep[r];
        rr.mean_core_confidence = num(row, "confidence_" + n);
        rr.fallback_used = num(row, "fallback_" + n).value_or(0.0) != 0.0;
        rr.gate_triggered = rr.fallback_used;
        rr.final_threshold = num(row, "threshold_" + n).value_or(0.0);
      }
      rep[RegionLabel::TumorCore].core_substituted = num(row, "core_substituted").value_or(0.0) != 0.0;
      rep[RegionLabel::WholeTumor].failsafe_triggered = num(row, "failsafe").value_or(0.0) != 0.0;
      rec.refinement = rep;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace labelflip::io
