#include "rostcli/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rost/errors.hpp"
#include "rost/serialize.hpp"
#include "rost/version.hpp"
#include "rostcli/commands.hpp"
#include "rostcli/config.hpp"
#include "rostcli/output.hpp"

namespace rostcli {
namespace {

const char* const kSubcommands[] = {"sample",         "evolve",
                                    "qs-test",        "velocity",
                                    "counterexample", "coalescent",
                                    "continuity",     "report"};

std::string default_out_dir() {
  if (const char* env = std::getenv("ROSTLAB_OUT"); env && *env)
    return env;
  return "rost-out";
}

RunOptions resolve(const std::string& sub, const std::string& config_path,
                   std::optional<std::uint64_t> seed_flag,
                   std::optional<int> workers_flag,
                   const std::string& out_flag,
                   std::optional<std::uint64_t> replicas_flag,
                   std::optional<int> r_flag) {
  RunOptions opt;
  opt.subcommand = sub;
  if (!config_path.empty()) {
    opt.config_path = config_path;
    opt.config = load_config_file(config_path);
    opt.config_hash = fnv1a64_hex(rost::read_file(config_path));
    check_keys(opt.config, "top level",
               {"schema_version", "seed", "workers", "out_dir", "sample",
                "evolve", "qs-test", "velocity", "counterexample",
                "coalescent", "continuity", "report"});
  } else {
    opt.config = Json();
  }
  const Json& top = opt.config.is_object() ? opt.config : Json::object();
  opt.seed = seed_flag.value_or(get_u64(top, "seed", 20240915));
  opt.workers =
      workers_flag.value_or(static_cast<int>(get_u64(top, "workers", 1)));
  if (opt.workers < 0)
    throw rost::ValidationError("config: workers must be >= 0");
  opt.out_dir = !out_flag.empty()
                    ? out_flag
                    : get_string(top, "out_dir", default_out_dir());
  opt.replicas = replicas_flag;
  if (r_flag) {
    if (*r_flag < 1)
      throw rost::ValidationError("config: --R must be >= 1");
    opt.r_max = r_flag;
  }
  return opt;
}

int dispatch(const RunOptions& opt) {
  if (opt.subcommand == "report")
    return cmd_report(opt) ? 0 : 1;

  RunWriter writer(opt.out_dir);
  Json effective;
  if (opt.subcommand == "sample")
    effective = cmd_sample(opt, writer);
  else if (opt.subcommand == "evolve")
    effective = cmd_evolve(opt, writer);
  else if (opt.subcommand == "qs-test")
    effective = cmd_qs_test(opt, writer);
  else if (opt.subcommand == "velocity")
    effective = cmd_velocity(opt, writer);
  else if (opt.subcommand == "counterexample")
    effective = cmd_counterexample(opt, writer);
  else if (opt.subcommand == "coalescent")
    effective = cmd_coalescent(opt, writer);
  else if (opt.subcommand == "continuity")
    effective = cmd_continuity(opt, writer);
  else
    throw rost::ValidationError("unknown subcommand '" + opt.subcommand + "'");

  Json manifest;
  manifest["schema_version"] = rost::kRecordSchemaVersion;
  manifest["kind"] = "run-manifest";
  manifest["tool"] = rost::kLibraryName;
  manifest["version"] = rost::kLibraryVersion;
  manifest["rng_scheme"] = rost::kRngScheme;
  manifest["subcommand"] = opt.subcommand;
  manifest["seed"] = opt.seed;
  manifest["workers"] = opt.workers;
  manifest["config_path"] = opt.config_path.empty() ? "none" : opt.config_path;
  manifest["config_fnv1a64"] = opt.config_hash;
  manifest["effective"] = effective;
  writer.finalize(manifest);

  const bool failed = writer.any_failure();
  std::printf("%s: %s (results under %s)\n", opt.subcommand.c_str(),
              failed ? "FAIL" : "PASS", opt.out_dir.c_str());
  return failed ? 1 : 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Cascade laboratory: sampling, evolution, and statistical "
               "verification of hierarchical overlap structures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::uint64_t seed_value = 0;
  int workers_value = 0;
  std::uint64_t replicas_value = 0;
  int r_value = 0;

  bool seed_set = false, workers_set = false, replicas_set = false,
       r_set = false;

  for (const char* name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed_value, "master seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--workers", workers_value,
                    "worker threads (0 = hardware)")
        ->each([&](const std::string&) { workers_set = true; });
    sub->add_option("--out", out_flag, "output directory");
    sub->add_option("--replicas", replicas_value,
                    "replica count override")
        ->each([&](const std::string&) { replicas_set = true; });
    if (std::string(name) == "counterexample")
      sub->add_option("--R", r_value, "match velocities up to this order")
          ->each([&](const std::string&) { r_set = true; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return 2;
  }

  try {
    RunOptions opt = resolve(
        app.get_subcommands().front()->get_name(), config_path,
        seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
        workers_set ? std::optional<int>(workers_value) : std::nullopt,
        out_flag,
        replicas_set ? std::optional<std::uint64_t>(replicas_value)
                     : std::nullopt,
        r_set ? std::optional<int>(r_value) : std::nullopt);
    return dispatch(opt);
  } catch (const rost::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace rostcli
