#include "rostcli/output.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <utility>

#include "rost/errors.hpp"
#include "rost/serialize.hpp"

namespace rostcli {
namespace {

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '-')
      out += '-';
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "record" : out;
}

}  // namespace

RunWriter::RunWriter(std::string out_dir) : out_dir_(std::move(out_dir)) {}

void RunWriter::add_record(const std::string& name, Json payload,
                           std::vector<SummaryRow> rows) {
  Json record;
  record["schema_version"] = 1;
  record["kind"] = "test-record";
  record["name"] = name;
  record["payload"] = std::move(payload);
  record["rows"] = rows_to_json(rows);
  char fname[64];
  std::snprintf(fname, sizeof(fname), "%02d-%s.json", next_index_++,
                slug(name).c_str());
  records_.emplace_back(fname, std::move(record));
  for (auto& row : rows) rows_.push_back(std::move(row));
}

void RunWriter::add_row(SummaryRow row) { rows_.push_back(std::move(row)); }

bool RunWriter::any_failure() const {
  for (const auto& row : rows_)
    if (row.verdict == "fail") return true;
  return false;
}

std::string RunWriter::format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string RunWriter::render_csv(const std::vector<SummaryRow>& rows) {
  std::string csv = "test,parameters,statistic,value,verdict\n";
  for (const auto& row : rows) {
    csv += sanitize(row.test) + ',' + sanitize(row.parameters) + ',' +
           sanitize(row.statistic) + ',' + format_value(row.value) + ',' +
           sanitize(row.verdict) + '\n';
  }
  return csv;
}

void RunWriter::finalize(const Json& manifest_extra) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir_) / "records", ec);
  if (ec)
    throw rost::ValidationError("cannot create output directory '" + out_dir_ +
                                "': " + ec.message());

  for (const auto& [fname, record] : records_)
    rost::write_file_atomic((fs::path(out_dir_) / "records" / fname).string(),
                            record.dump(2) + "\n");
  rost::write_file_atomic((fs::path(out_dir_) / "summary.csv").string(),
                          render_csv(rows_));

  Json manifest;
  for (const auto& item : manifest_extra.items())
    manifest[item.key()] = item.value();
  manifest["records"] = Json::array();
  for (const auto& [fname, record] : records_)
    manifest["records"].push_back(fname);
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ",
                std::gmtime(&now));
  manifest["timestamp_utc"] = stamp;
  rost::write_file_atomic((fs::path(out_dir_) / "manifest.json").string(),
                          manifest.dump(2) + "\n");

  std::printf("%-34s %-38s %-26s %12s  %s\n", "test", "parameters",
              "statistic", "value", "verdict");
  for (const auto& row : rows_)
    std::printf("%-34s %-38s %-26s %12s  %s\n", row.test.c_str(),
                row.parameters.c_str(), row.statistic.c_str(),
                format_value(row.value).c_str(), row.verdict.c_str());
}

Json rows_to_json(const std::vector<SummaryRow>& rows) {
  Json arr = Json::array();
  for (const auto& row : rows) {
    Json r;
    r["test"] = row.test;
    r["parameters"] = row.parameters;
    r["statistic"] = row.statistic;
    r["value"] = row.value;
    r["verdict"] = row.verdict;
    arr.push_back(std::move(r));
  }
  return arr;
}

std::vector<SummaryRow> rows_from_json(const Json& rows) {
  if (!rows.is_array())
    throw rost::ValidationError("record rows must be an array");
  std::vector<SummaryRow> out;
  for (const Json& r : rows) {
    if (!r.is_object() || !r.contains("test") || !r.contains("verdict"))
      throw rost::ValidationError("malformed summary row in record");
    SummaryRow row;
    row.test = r["test"].get<std::string>();
    row.parameters = r.value("parameters", std::string());
    row.statistic = r.value("statistic", std::string());
    row.value = r.value("value", 0.0);
    row.verdict = r["verdict"].get<std::string>();
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace rostcli
