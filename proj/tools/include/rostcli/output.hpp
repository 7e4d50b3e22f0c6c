#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rostcli {

using Json = nlohmann::ordered_json;

// One summary line: a named check with its headline statistic and verdict.
// Verdicts: "pass" | "fail" | "vacuous" | "info". Only "fail" affects the
// exit code; "info" rows carry context (estimates, per-seed detail).
struct SummaryRow {
  std::string test;
  std::string parameters;
  std::string statistic;
  double value = 0.0;
  std::string verdict;
};

// Collects records and summary rows for one run, then persists them under
// the output directory: manifest.json, records/NN-<name>.json, summary.csv.
// Every file is written atomically; reruns with identical inputs reproduce
// every byte except the manifest timestamp.
class RunWriter {
 public:
  explicit RunWriter(std::string out_dir);

  void add_record(const std::string& name, Json payload,
                  std::vector<SummaryRow> rows);
  void add_row(SummaryRow row);

  const std::vector<SummaryRow>& rows() const { return rows_; }
  bool any_failure() const;

  // Writes records, summary.csv, and manifest.json; prints the summary
  // table to stdout. `manifest_extra` is merged into the manifest.
  void finalize(const Json& manifest_extra);

  static std::string render_csv(const std::vector<SummaryRow>& rows);
  static std::string format_value(double v);

 private:
  std::string out_dir_;
  std::vector<std::pair<std::string, Json>> records_;
  std::vector<SummaryRow> rows_;
  int next_index_ = 1;
};

// Parses rows previously serialized by RunWriter into record payloads.
std::vector<SummaryRow> rows_from_json(const Json& rows);
Json rows_to_json(const std::vector<SummaryRow>& rows);

}  // namespace rostcli
