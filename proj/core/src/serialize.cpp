#include "rost/serialize.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rost/errors.hpp"
#include "rost/version.hpp"

namespace rost {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json parse_kind(const std::string& text, const char* kind) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError("malformed JSON record");
  if (!j.is_object() || j.value("kind", "") != kind)
    throw ValidationError(std::string("expected a ") + kind + " record");
  if (j.value("schema_version", -1) != kRecordSchemaVersion)
    throw ValidationError("unsupported record schema version");
  return j;
}

ordered_json header(const char* kind) {
  ordered_json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["kind"] = kind;
  return j;
}

}  // namespace

std::string mass_partition_to_json(const MassPartition& p) {
  ordered_json j = header("mass_partition");
  j["atoms"] = p.atoms;
  j["residual_mass"] = p.residual_mass;
  return j.dump(2) + "\n";
}

MassPartition mass_partition_from_json(const std::string& text) {
  ordered_json j = parse_kind(text, "mass_partition");
  MassPartition p;
  p.atoms = j.at("atoms").get<std::vector<double>>();
  p.residual_mass = j.at("residual_mass").get<double>();
  return p;
}

std::string rost_to_json(const Rost& r) {
  ordered_json j = header("rost");
  j["atoms"] = r.masses.atoms;
  j["residual_mass"] = r.masses.residual_mass;
  ordered_json rows = ordered_json::array();
  const std::size_t n = r.overlaps.size();
  for (std::size_t i = 0; i < n; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t k = 0; k < n; ++k) row.push_back(r.overlaps(i, k));
    rows.push_back(std::move(row));
  }
  j["overlaps"] = std::move(rows);
  return j.dump(2) + "\n";
}

Rost rost_from_json(const std::string& text) {
  ordered_json j = parse_kind(text, "rost");
  Rost r;
  r.masses.atoms = j.at("atoms").get<std::vector<double>>();
  r.masses.residual_mass = j.at("residual_mass").get<double>();
  const auto& rows = j.at("overlaps");
  r.overlaps = OverlapMatrix(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw ValidationError("overlap matrix rows must be square");
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (i != k) r.overlaps.set(i, k, rows[i][k].get<double>());
  }
  return r;
}

std::string structure_to_json(const LevelStructure& s) {
  ordered_json j = header("level_structure");
  j["q_levels"] = s.q_levels;
  j["atoms"] = s.atoms;
  j["residual_mass"] = s.residual_mass;
  j["groups"] = s.groups;
  return j.dump(2) + "\n";
}

LevelStructure structure_from_json(const std::string& text) {
  ordered_json j = parse_kind(text, "level_structure");
  LevelStructure s;
  s.q_levels = j.at("q_levels").get<std::vector<double>>();
  s.atoms = j.at("atoms").get<std::vector<double>>();
  s.residual_mass = j.at("residual_mass").get<double>();
  s.groups =
      j.at("groups").get<std::vector<std::vector<std::uint32_t>>>();
  return s;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + tmp);
    out.write(contents.data(),
              static_cast<std::streamsize>(contents.size()));
    if (!out) throw ValidationError("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ValidationError("cannot move record into place: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace rost
