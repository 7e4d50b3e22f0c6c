#include "rostcli/config.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

#include "rost/coalescent.hpp"
#include "rost/errors.hpp"
#include "rost/serialize.hpp"

namespace rostcli {
namespace {

[[noreturn]] void bad(const std::string& msg) {
  throw rost::ValidationError("config: " + msg);
}

std::string type_name(const Json& v) { return std::string(v.type_name()); }

}  // namespace

Json load_config_file(const std::string& path) {
  std::string text;
  try {
    text = rost::read_file(path);
  } catch (const std::exception& e) {
    bad(std::string("cannot read '") + path + "': " + e.what());
  }
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) bad("'" + path + "' is not valid JSON");
  if (!doc.is_object()) bad("'" + path + "' must hold a JSON object");
  if (!doc.contains("schema_version")) bad("missing key 'schema_version'");
  const Json& sv = doc["schema_version"];
  if (!sv.is_number_integer() || sv.get<std::int64_t>() != 1)
    bad("unsupported schema_version, expected 1");
  return doc;
}

void check_keys(const Json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) bad("unknown key '" + item.key() + "' in " + where);
  }
}

double get_double(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj[key];
  if (!v.is_number()) bad(std::string("'") + key + "' must be a number, got " +
                          type_name(v));
  return v.get<double>();
}

std::uint64_t get_u64(const Json& obj, const char* key,
                      std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj[key];
  if (!v.is_number_integer() ||
      (v.is_number_integer() && !v.is_number_unsigned() &&
       v.get<std::int64_t>() < 0))
    bad(std::string("'") + key + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const Json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj[key];
  if (!v.is_boolean()) bad(std::string("'") + key + "' must be a boolean");
  return v.get<bool>();
}

std::string get_string(const Json& obj, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj[key];
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> get_double_list(const Json& obj, const char* key,
                                    const std::vector<double>& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj[key];
  if (!v.is_array()) bad(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const Json& e : v) {
    if (!e.is_number())
      bad(std::string("'") + key + "' must hold numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> get_int_list(const Json& obj, const char* key,
                              const std::vector<int>& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj[key];
  if (!v.is_array()) bad(std::string("'") + key + "' must be an array");
  std::vector<int> out;
  for (const Json& e : v) {
    if (!e.is_number_integer())
      bad(std::string("'") + key + "' must hold integers only");
    out.push_back(e.get<int>());
  }
  return out;
}

namespace {

rost::RpcParams parse_ladder(const Json& section,
                             const rost::RpcParams& fallback,
                             const std::string& where) {
  rost::RpcParams p;
  p.q_levels = get_double_list(section, "q_levels", fallback.q_levels);
  p.x_levels = get_double_list(section, "x_levels", fallback.x_levels);
  try {
    p.validate();
  } catch (const rost::ValidationError& e) {
    bad(where + ": " + e.what());
  }
  return p;
}

std::string ladder_label(const rost::RpcParams& p) {
  std::string s = "q=";
  char buf[32];
  for (std::size_t i = 0; i < p.q_levels.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.6g", i ? ";" : "", p.q_levels[i]);
    s += buf;
  }
  s += " x=";
  for (std::size_t i = 0; i < p.x_levels.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.6g", i ? ";" : "", p.x_levels[i]);
    s += buf;
  }
  return s;
}

}  // namespace

ModelSpec parse_model(const Json& section, const rost::RpcParams& fallback) {
  if (!section.is_null() && !section.is_object())
    bad("'model' must be a JSON object");
  Json model = section.is_object() ? section : Json::object();
  check_keys(model, "model",
             {"kind", "q_levels", "x_levels", "cap", "power", "block_a",
              "block_b"});
  const std::string kind = get_string(model, "kind", "cascade");
  const std::size_t cap =
      static_cast<std::size_t>(get_u64(model, "cap", 2048));
  if (cap == 0) bad("model cap must be positive");

  ModelSpec spec;
  if (kind == "cascade" || kind == "perturbed" || kind == "continuous") {
    for (const char* key : {"block_a", "block_b"})
      if (model.contains(key))
        bad(std::string("'") + key + "' only applies to kind 'superposition'");
    rost::RpcParams params = parse_ladder(model, fallback, "model");
    spec.params = params;
    spec.default_refs = params.q_levels;
    if (kind == "cascade") {
      if (model.contains("power"))
        bad("'power' only applies to kind 'perturbed'");
      spec.sampler = rost::make_cascade_sampler(params, cap);
      spec.label = "cascade " + ladder_label(params);
    } else if (kind == "perturbed") {
      const double power = get_double(model, "power", 1.2);
      if (!(power > 0.0)) bad("model power must be positive");
      spec.sampler = rost::make_perturbed_cascade_sampler(params, cap, power);
      char buf[32];
      std::snprintf(buf, sizeof(buf), " power=%.6g", power);
      spec.label = "perturbed " + ladder_label(params) + buf;
    } else {
      if (model.contains("power"))
        bad("'power' only applies to kind 'perturbed'");
      spec.sampler = rost::make_continuous_sampler(params.order_param(), cap);
      spec.label = "continuous " + ladder_label(params);
    }
  } else if (kind == "superposition") {
    for (const char* key : {"q_levels", "x_levels", "power"})
      if (model.contains(key))
        bad(std::string("'") + key +
            "' does not apply to kind 'superposition'");
    if (!model.contains("block_a") || !model.contains("block_b"))
      bad("kind 'superposition' needs 'block_a' and 'block_b'");
    check_keys(model["block_a"], "model.block_a", {"q_levels", "x_levels"});
    check_keys(model["block_b"], "model.block_b", {"q_levels", "x_levels"});
    rost::SuperpositionSpec sp;
    sp.block_a = parse_ladder(model["block_a"], fallback, "model.block_a");
    sp.block_b = parse_ladder(model["block_b"], fallback, "model.block_b");
    sp.cap = cap;
    try {
      sp.validate();
    } catch (const rost::ValidationError& e) {
      bad(std::string("model: ") + e.what());
    }
    spec.sampler = rost::make_superposition_sampler(sp);
    spec.label = "superposition A(" + ladder_label(sp.block_a) + ") B(" +
                 ladder_label(sp.block_b) + ")";
    spec.default_refs.push_back(0.0);
    for (double q : sp.block_a.q_levels) spec.default_refs.push_back(q);
    for (double q : sp.block_b.q_levels) spec.default_refs.push_back(q);
    std::sort(spec.default_refs.begin(), spec.default_refs.end());
    spec.default_refs.erase(
        std::unique(spec.default_refs.begin(), spec.default_refs.end()),
        spec.default_refs.end());
  } else {
    bad("unknown model kind '" + kind +
        "' (expected cascade, continuous, superposition, or perturbed)");
  }
  return spec;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, rost::fnv1a64(bytes));
  return buf;
}

}  // namespace rostcli
