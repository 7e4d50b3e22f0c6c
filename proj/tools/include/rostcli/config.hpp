#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rost/cascade.hpp"
#include "rost/evolution.hpp"

namespace rostcli {

using Json = nlohmann::ordered_json;

// Effective run options after merging (highest wins): command-line flag,
// config file entry, environment, built-in default.
struct RunOptions {
  std::string subcommand;
  std::string out_dir;
  std::uint64_t seed = 20240915;
  int workers = 1;
  std::optional<std::uint64_t> replicas;  // subcommand-specific meaning
  std::optional<int> r_max;               // counterexample --R
  Json config;                            // subcommand section, possibly empty
  std::string config_path;                // empty when no file given
  std::string config_hash = "none";       // fnv1a64 of raw file bytes
};

// Sampler plus the metadata commands need to describe and test it.
struct ModelSpec {
  rost::RostSampler sampler;
  std::string label;                   // short human-readable description
  std::vector<double> default_refs;    // reference overlaps for QS batteries
  std::optional<rost::RpcParams> params;  // set for single-ladder kinds
};

// Reads and parses the config file, enforcing schema_version 1.
Json load_config_file(const std::string& path);

// Throws ValidationError when `obj` holds a key outside `allowed`.
void check_keys(const Json& obj, const std::string& where,
                std::initializer_list<const char*> allowed);

// Typed accessors; throw ValidationError on wrong type or bad value.
double get_double(const Json& obj, const char* key, double fallback);
std::uint64_t get_u64(const Json& obj, const char* key, std::uint64_t fallback);
bool get_bool(const Json& obj, const char* key, bool fallback);
std::string get_string(const Json& obj, const char* key,
                       const std::string& fallback);
std::vector<double> get_double_list(const Json& obj, const char* key,
                                    const std::vector<double>& fallback);
std::vector<int> get_int_list(const Json& obj, const char* key,
                              const std::vector<int>& fallback);

// Builds a model from a config section ("cascade", "continuous",
// "superposition", or "perturbed"). Validates parameters before returning.
ModelSpec parse_model(const Json& section, const rost::RpcParams& fallback);

// FNV-1a 64-bit hex digest used to fingerprint config files in manifests.
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace rostcli
