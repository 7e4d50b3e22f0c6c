#include "rostcli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rost/cascade.hpp"
#include "rost/coalescent.hpp"
#include "rost/errors.hpp"
#include "rost/evolution.hpp"
#include "rost/overlap.hpp"
#include "rost/parallel.hpp"
#include "rost/rng.hpp"
#include "rost/serialize.hpp"
#include "rost/stats.hpp"

namespace rostcli {
namespace {

// Stream-id namespaces, one per subcommand, expanded with derive_stream so
// replica streams never collide across commands sharing one master seed.
constexpr std::uint64_t kTagSample = 0x73616d70;
constexpr std::uint64_t kTagEvolve = 0x65766f6c;
constexpr std::uint64_t kTagQs = 0x71737465;
constexpr std::uint64_t kTagVelocity = 0x76656c6f;
constexpr std::uint64_t kTagCounter = 0x636f7578;
constexpr std::uint64_t kTagCoalescent = 0x636f616c;
constexpr std::uint64_t kTagContinuity = 0x636f6e74;

// Two-sided z threshold used for CLI pass/fail gates (alpha ~ 0.001).
constexpr double kGateZ = 3.29;

std::string fmt(const char* pattern, double a, double b = 0.0,
                double c = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

Json section_of(const RunOptions& opt) {
  if (opt.config.is_null()) return Json::object();
  if (!opt.config.contains(opt.subcommand)) return Json::object();
  return opt.config[opt.subcommand];
}

Json levels_json(const std::vector<double>& v) {
  Json arr = Json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

rost::RpcParams reference_params() {
  rost::RpcParams p;
  p.q_levels = {0.2, 0.5};
  p.x_levels = {0.3, 0.6};
  return p;
}

std::uint64_t sub_seed(const RunOptions& opt, std::uint64_t tag,
                       std::uint64_t idx) {
  return rost::derive_stream(rost::derive_stream(tag, idx), opt.seed);
}

}  // namespace

Json cmd_sample(const RunOptions& opt, RunWriter& out) {
  Json section = section_of(opt);
  check_keys(section, "sample", {"model", "count", "top", "replicas"});
  ModelSpec model = parse_model(section.contains("model") ? section["model"]
                                                          : Json(),
                                reference_params());
  std::size_t count = static_cast<std::size_t>(
      opt.replicas.value_or(get_u64(section, "count", 4)));
  if (section.contains("count") && section.contains("replicas"))
    throw rost::ValidationError(
        "config: sample takes 'count' or 'replicas', not both");
  if (!section.contains("count"))
    count = static_cast<std::size_t>(
        opt.replicas.value_or(get_u64(section, "replicas", count)));
  std::size_t top = static_cast<std::size_t>(get_u64(section, "top", 16));
  if (count == 0 || top == 0)
    throw rost::ValidationError("config: sample count and top must be positive");

  Json draws = Json::array();
  std::vector<SummaryRow> rows;
  std::size_t valid = 0;
  double mean_top1 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    rost::RngStream rng(opt.seed, sub_seed(opt, kTagSample, i));
    rost::LevelStructure s = model.sampler.draw(rng);
    s.validate();
    rost::LevelStructure head = s.top(std::min(top, s.size()));
    rost::Rost r = head.to_rost(head.size());
    r.validate();
    bool ok = rost::is_ultrametric(r.overlaps).ok;
    valid += ok ? 1 : 0;
    mean_top1 += s.atoms.empty() ? 0.0 : s.atoms[0];
    draws.push_back(Json::parse(rost::structure_to_json(head)));
    rows.push_back({"sample", model.label, fmt("draw-%g-top1-mass", double(i)),
                    s.atoms.empty() ? 0.0 : s.atoms[0], "info"});
  }
  mean_top1 /= static_cast<double>(count);
  rows.push_back({"sample", model.label, "structures-valid-ultrametric",
                  static_cast<double>(valid),
                  valid == count ? "pass" : "fail"});

  Json payload;
  payload["model"] = model.label;
  payload["count"] = count;
  payload["top"] = top;
  payload["mean_top1_mass"] = mean_top1;
  payload["draws"] = std::move(draws);
  out.add_record("sample", std::move(payload), std::move(rows));

  Json effective;
  effective["model"] = model.label;
  effective["count"] = count;
  effective["top"] = top;
  return effective;
}

Json cmd_evolve(const RunOptions& opt, RunWriter& out) {
  Json section = section_of(opt);
  check_keys(section, "evolve", {"model", "r", "lambda", "steps", "top"});
  ModelSpec model = parse_model(section.contains("model") ? section["model"]
                                                          : Json(),
                                reference_params());
  rost::EvolutionConfig cfg;
  cfg.r = static_cast<int>(get_u64(section, "r", 1));
  cfg.lambda = get_double(section, "lambda", 1.0);
  cfg.validate();
  std::size_t steps = static_cast<std::size_t>(
      opt.replicas.value_or(get_u64(section, "steps", 8)));
  std::size_t top = static_cast<std::size_t>(get_u64(section, "top", 8));
  if (steps == 0 || top == 0)
    throw rost::ValidationError("config: evolve steps and top must be positive");

  rost::RngStream draw_rng(opt.seed, sub_seed(opt, kTagEvolve, 0));
  rost::LevelStructure state = model.sampler.draw(draw_rng);
  state.validate();

  std::vector<SummaryRow> rows;
  Json trajectory = Json::array();
  Json initial = Json::parse(
      rost::structure_to_json(state.top(std::min(top, state.size()))));
  rost::RngStream step_rng(opt.seed, sub_seed(opt, kTagEvolve, 1));
  double total_log = 0.0;
  bool all_valid = true;
  for (std::size_t k = 0; k < steps; ++k) {
    rost::PhiResult res = rost::phi(state, cfg, step_rng);
    state = std::move(res.state);
    state.validate();
    all_valid = all_valid && std::is_sorted(state.atoms.rbegin(),
                                            state.atoms.rend());
    total_log += res.log_total;
    Json step;
    step["step"] = k + 1;
    step["log_total"] = res.log_total;
    step["top1_mass"] = state.atoms.empty() ? 0.0 : state.atoms[0];
    trajectory.push_back(std::move(step));
    rows.push_back({"evolve",
                    fmt("r=%g lambda=%g step=%g", double(cfg.r), cfg.lambda,
                        double(k + 1)),
                    "log-total", res.log_total, "info"});
  }
  rows.push_back({"evolve", fmt("r=%g lambda=%g", double(cfg.r), cfg.lambda),
                  "mean-log-total", total_log / double(steps), "info"});
  rows.push_back({"evolve", fmt("r=%g lambda=%g", double(cfg.r), cfg.lambda),
                  "states-valid", double(steps), all_valid ? "pass" : "fail"});

  Json payload;
  payload["model"] = model.label;
  payload["r"] = cfg.r;
  payload["lambda"] = cfg.lambda;
  payload["steps"] = steps;
  payload["initial"] = std::move(initial);
  payload["trajectory"] = std::move(trajectory);
  payload["final"] = Json::parse(
      rost::structure_to_json(state.top(std::min(top, state.size()))));
  out.add_record("evolve", std::move(payload), std::move(rows));

  Json effective;
  effective["model"] = model.label;
  effective["r"] = cfg.r;
  effective["lambda"] = cfg.lambda;
  effective["steps"] = steps;
  effective["top"] = top;
  return effective;
}

Json cmd_qs_test(const RunOptions& opt, RunWriter& out) {
  Json section = section_of(opt);
  check_keys(section, "qs-test",
             {"model", "rs", "lambdas", "refs", "by_level", "alpha",
              "replicas"});
  ModelSpec model = parse_model(section.contains("model") ? section["model"]
                                                          : Json(),
                                reference_params());
  std::vector<int> rs = get_int_list(section, "rs", {1, 2, 3});
  std::vector<double> lambdas = get_double_list(section, "lambdas", {0.5, 1.0});
  std::vector<double> refs =
      get_double_list(section, "refs", model.default_refs);
  bool by_level = get_bool(section, "by_level", false);
  double alpha = get_double(section, "alpha", 0.01);
  std::size_t replicas = static_cast<std::size_t>(
      opt.replicas.value_or(get_u64(section, "replicas", 400)));
  if (rs.empty() || lambdas.empty() || replicas == 0)
    throw rost::ValidationError(
        "config: qs-test needs nonempty rs, lambdas, and replicas > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw rost::ValidationError("config: qs-test alpha must lie in (0,1)");

  Json batteries = Json::array();
  std::vector<SummaryRow> rows;
  std::size_t idx = 0;
  for (int r : rs)
    for (double lambda : lambdas) {
      rost::EvolutionConfig cfg;
      cfg.r = r;
      cfg.lambda = lambda;
      cfg.validate();
      rost::QsReport rep = rost::qs_test(
          model.sampler, cfg, replicas, sub_seed(opt, kTagQs, idx++), refs,
          by_level, alpha, opt.workers);
      double min_p = 1.0;
      Json tests = Json::array();
      for (const auto& t : rep.tests) {
        min_p = std::min(min_p, t.p_value);
        Json tj;
        tj["name"] = t.name;
        tj["d"] = t.d;
        tj["p_value"] = t.p_value;
        tj["mean_pre"] = t.mean_pre;
        tj["mean_post"] = t.mean_post;
        tj["pass"] = t.pass;
        tests.push_back(std::move(tj));
      }
      Json bj;
      bj["r"] = r;
      bj["lambda"] = lambda;
      bj["replicas"] = replicas;
      bj["alpha_total"] = rep.alpha_total;
      bj["alpha_each"] = rep.alpha_each;
      bj["pass"] = rep.pass;
      bj["tests"] = std::move(tests);
      batteries.push_back(std::move(bj));
      rows.push_back({"qs-invariance", fmt("r=%g lambda=%g", double(r), lambda),
                      "min-p-across-functionals", min_p,
                      rep.pass ? "pass" : "fail"});
    }

  Json payload;
  payload["model"] = model.label;
  payload["refs"] = levels_json(refs);
  payload["by_level"] = by_level;
  payload["batteries"] = std::move(batteries);
  out.add_record("qs-test", std::move(payload), std::move(rows));

  Json effective;
  effective["model"] = model.label;
  effective["rs"] = rs;
  effective["lambdas"] = levels_json(lambdas);
  effective["refs"] = levels_json(refs);
  effective["by_level"] = by_level;
  effective["alpha"] = alpha;
  effective["replicas"] = replicas;
  return effective;
}

Json cmd_velocity(const RunOptions& opt, RunWriter& out) {
  Json section = section_of(opt);
  check_keys(section, "velocity",
             {"q_levels", "x_levels", "cap", "rs", "lambdas", "rel_tol",
              "replicas"});
  rost::RpcParams params;
  params.q_levels = get_double_list(section, "q_levels", {0.0});
  params.x_levels = get_double_list(section, "x_levels", {0.5});
  params.validate();
  std::size_t cap = static_cast<std::size_t>(get_u64(section, "cap", 4096));
  std::vector<int> rs = get_int_list(section, "rs", {1, 2});
  std::vector<double> lambdas = get_double_list(section, "lambdas", {1.0, 2.0});
  double rel_tol = get_double(section, "rel_tol", 0.05);
  std::size_t replicas = static_cast<std::size_t>(
      opt.replicas.value_or(get_u64(section, "replicas", 4000)));
  if (cap == 0 || replicas == 0 || rs.empty() || lambdas.empty())
    throw rost::ValidationError(
        "config: velocity needs cap, replicas, rs, lambdas all nonempty");

  Json table = Json::array();
  std::vector<SummaryRow> rows;
  std::size_t idx = 0;
  for (int r : rs)
    for (double lambda : lambdas) {
      rost::EvolutionConfig cfg;
      cfg.r = r;
      cfg.lambda = lambda;
      cfg.validate();
      rost::RngStream rng(opt.seed, sub_seed(opt, kTagVelocity, idx++));
      rost::VelocityEstimate est =
          rost::estimate_velocity(params, cfg, cap, replicas, rng, rel_tol);
      std::string verdict_name =
          est.matches_crowd && est.matches_past
              ? "both"
              : est.matches_crowd ? "crowd"
                                  : est.matches_past ? "past" : "neither";
      Json row;
      row["r"] = r;
      row["lambda"] = lambda;
      row["v_hat"] = est.v_hat;
      row["stderr"] = est.stderr_;
      row["crowd_formula"] = est.crowd;
      row["past_formula"] = est.past;
      row["adjudication"] = verdict_name;
      table.push_back(std::move(row));
      std::string pars = fmt("r=%g lambda=%g", double(r), lambda);
      rows.push_back({"velocity", pars, "v-hat", est.v_hat, "info"});
      rows.push_back({"velocity", pars, "crowd-formula", est.crowd, "info"});
      rows.push_back({"velocity", pars, "past-formula", est.past, "info"});
      rows.push_back({"velocity", pars, "adjudication=" + verdict_name,
                      est.stderr_ > 0.0 ? (est.v_hat - est.crowd) / est.stderr_
                                        : 0.0,
                      est.matches_crowd ? "pass" : "fail"});
    }

  Json payload;
  payload["q_levels"] = levels_json(params.q_levels);
  payload["x_levels"] = levels_json(params.x_levels);
  payload["cap"] = cap;
  payload["replicas"] = replicas;
  payload["rel_tol"] = rel_tol;
  payload["table"] = std::move(table);
  out.add_record("velocity", std::move(payload), std::move(rows));

  Json effective;
  effective["q_levels"] = levels_json(params.q_levels);
  effective["x_levels"] = levels_json(params.x_levels);
  effective["cap"] = cap;
  effective["rs"] = rs;
  effective["lambdas"] = levels_json(lambdas);
  effective["rel_tol"] = rel_tol;
  effective["replicas"] = replicas;
  return effective;
}

Json cmd_counterexample(const RunOptions& opt, RunWriter& out) {
  Json section = section_of(opt);
  check_keys(section, "counterexample",
             {"block_a", "q_levels_b", "tail_jumps", "r_max", "lambda", "cap",
              "pairs", "drift_seeds", "battery_replicas", "refs", "alpha",
              "replicas"});
  rost::RpcParams block_a;
  if (section.contains("block_a")) {
    check_keys(section["block_a"], "counterexample.block_a",
               {"q_levels", "x_levels"});
    block_a.q_levels = get_double_list(section["block_a"], "q_levels", {0.2});
    block_a.x_levels = get_double_list(section["block_a"], "x_levels", {0.3});
  } else {
    block_a.q_levels = {0.2};
    block_a.x_levels = {0.3};
  }
  block_a.validate();
  std::vector<double> q_levels_b =
      get_double_list(section, "q_levels_b", {0.4});
  std::vector<double> tail_jumps = get_double_list(section, "tail_jumps", {});
  std::size_t r_max = static_cast<std::size_t>(static_cast<std::uint64_t>(
      opt.r_max.value_or(static_cast<int>(get_u64(section, "r_max", 1)))));
  double lambda = get_double(section, "lambda", 2.0);
  std::size_t cap = static_cast<std::size_t>(get_u64(section, "cap", 4096));
  std::size_t pairs = static_cast<std::size_t>(
      opt.replicas.value_or(get_u64(section, "pairs", 8000)));
  std::size_t drift_seeds =
      static_cast<std::size_t>(get_u64(section, "drift_seeds", 3));
  std::size_t battery_replicas =
      static_cast<std::size_t>(get_u64(section, "battery_replicas", 400));
  double alpha = get_double(section, "alpha", 0.01);
  if (r_max == 0 || cap == 0 || pairs == 0 || drift_seeds == 0)
    throw rost::ValidationError(
        "config: counterexample needs r_max, cap, pairs, drift_seeds > 0");
  if (!(lambda > 0.0))
    throw rost::ValidationError("config: counterexample lambda must be > 0");

  // Solve for ladder B so crowd velocities match ladder A for r <= r_max.
  rost::MatchResult mr =
      rost::match_velocities(block_a, q_levels_b, r_max, tail_jumps);
  rost::RpcParams block_b;
  block_b.q_levels = q_levels_b;
  block_b.x_levels = mr.x_levels;
  block_b.validate();
  rost::SuperpositionSpec spec;
  spec.block_a = block_a;
  spec.block_b = block_b;
  spec.cap = cap;
  spec.validate();

  std::vector<double> refs;
  if (section.contains("refs")) {
    refs = get_double_list(section, "refs", {});
  } else {
    refs.push_back(0.0);
    for (double q : block_a.q_levels) refs.push_back(q);
    for (double q : block_b.q_levels) refs.push_back(q);
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  }

  std::vector<SummaryRow> rows;
  rows.push_back({"velocity-match", fmt("r_max=%g", double(r_max)),
                  "max-residual", mr.max_residual,
                  mr.max_residual < 1e-9 ? "pass" : "fail"});
  for (std::size_t l = 0; l < block_b.x_levels.size(); ++l)
    rows.push_back({"velocity-match", fmt("q_b=%.6g", block_b.q_levels[l]),
                    fmt("x-b-level-%g", double(l + 1)), block_b.x_levels[l],
                    "info"});

  // Invariance batteries at the matched orders: expected to pass, since the
  // block weight is drift-free there and each block is itself invariant.
  Json batteries = Json::array();
  rost::RostSampler sampler = rost::make_superposition_sampler(spec);
  for (std::size_t r = 1; r <= r_max; ++r) {
    rost::EvolutionConfig cfg;
    cfg.r = static_cast<int>(r);
    cfg.lambda = lambda;
    rost::QsReport rep = rost::qs_test(sampler, cfg, battery_replicas,
                                       sub_seed(opt, kTagCounter, 100 + r),
                                       refs, false, alpha, opt.workers);
    double min_p = 1.0;
    for (const auto& t : rep.tests) min_p = std::min(min_p, t.p_value);
    Json bj;
    bj["r"] = r;
    bj["lambda"] = lambda;
    bj["replicas"] = battery_replicas;
    bj["min_p"] = min_p;
    bj["pass"] = rep.pass;
    batteries.push_back(std::move(bj));
    rows.push_back({"qs-invariance", fmt("r=%g lambda=%g", double(r), lambda),
                    "min-p-across-functionals", min_p,
                    rep.pass ? "pass" : "fail"});
  }

  // Paired drift of the log block-mass ratio: zero mean for r <= r_max by
  // construction, nonzero mean at r_max + 1 where the velocities separate.
  Json drift = Json::array();
  for (std::size_t r = 1; r <= r_max + 1; ++r) {
    rost::EvolutionConfig cfg;
    cfg.r = static_cast<int>(r);
    cfg.lambda = lambda;
    double z_sum = 0.0;
    double predicted = 0.0;
    std::size_t matches = 0;
    for (std::size_t s = 0; s < drift_seeds; ++s) {
      rost::DriftReport dr = rost::superposition_drift_test(
          spec, cfg, pairs, sub_seed(opt, kTagCounter, 200 + 16 * r + s),
          alpha, opt.workers);
      z_sum += dr.z;
      predicted = dr.predicted;
      matches += dr.drift_matches_predicted ? 1 : 0;
      Json dj;
      dj["r"] = r;
      dj["seed_index"] = s;
      dj["predicted"] = dr.predicted;
      dj["delta_mean"] = dr.delta_mean;
      dj["delta_se"] = dr.delta_se;
      dj["z"] = dr.z;
      dj["reject"] = dr.reject;
      dj["matches_predicted"] = dr.drift_matches_predicted;
      drift.push_back(std::move(dj));
      rows.push_back({"block-weight-drift",
                      fmt("r=%g seed=%g predicted=%.4g", double(r), double(s),
                          dr.predicted),
                      "z", dr.z, "info"});
    }
    double combined = z_sum / std::sqrt(double(drift_seeds));
    if (r <= r_max) {
      rows.push_back({"drift-absent", fmt("r=%g lambda=%g", double(r), lambda),
                      "combined-z", combined,
                      std::abs(combined) < kGateZ ? "pass" : "fail"});
    } else {
      bool detected = predicted < 0.0 ? combined <= -kGateZ
                                      : combined >= kGateZ;
      rows.push_back({"drift-detected",
                      fmt("r=%g lambda=%g predicted=%.4g", double(r), lambda,
                          predicted),
                      "combined-z", combined, detected ? "pass" : "fail"});
      rows.push_back({"drift-detected", fmt("r=%g lambda=%g", double(r),
                                            lambda),
                      "seeds-matching-predicted", double(matches), "info"});
    }
  }

  Json payload;
  payload["block_a_q"] = levels_json(block_a.q_levels);
  payload["block_a_x"] = levels_json(block_a.x_levels);
  payload["block_b_q"] = levels_json(block_b.q_levels);
  payload["block_b_x"] = levels_json(block_b.x_levels);
  payload["match_residual"] = mr.max_residual;
  payload["r_max"] = r_max;
  payload["lambda"] = lambda;
  payload["cap"] = cap;
  payload["pairs"] = pairs;
  payload["drift_seeds"] = drift_seeds;
  payload["refs"] = levels_json(refs);
  payload["batteries"] = std::move(batteries);
  payload["drift"] = std::move(drift);
  out.add_record("counterexample", std::move(payload), std::move(rows));

  Json effective;
  effective["block_a_q"] = levels_json(block_a.q_levels);
  effective["block_a_x"] = levels_json(block_a.x_levels);
  effective["q_levels_b"] = levels_json(q_levels_b);
  effective["tail_jumps"] = levels_json(tail_jumps);
  effective["r_max"] = r_max;
  effective["lambda"] = lambda;
  effective["cap"] = cap;
  effective["pairs"] = pairs;
  effective["drift_seeds"] = drift_seeds;
  effective["battery_replicas"] = battery_replicas;
  effective["refs"] = levels_json(refs);
  effective["alpha"] = alpha;
  return effective;
}

Json cmd_coalescent(const RunOptions& opt, RunWriter& out) {
  Json section = section_of(opt);
  check_keys(section, "coalescent",
             {"us", "replicas", "pair", "m", "checkpoints", "du", "sizes",
              "scaling_replicas", "scaling_u"});
  std::vector<double> us = get_double_list(section, "us", {0.5, 1.0, 2.0});
  std::size_t replicas = static_cast<std::size_t>(
      opt.replicas.value_or(get_u64(section, "replicas", 10000)));
  std::vector<double> pair = get_double_list(section, "pair", {0.5, 0.7});
  std::size_t m = static_cast<std::size_t>(get_u64(section, "m", 64));
  std::vector<double> checkpoints =
      get_double_list(section, "checkpoints", {0.25, 0.5, 1.0});
  double du = get_double(section, "du",
                         std::numeric_limits<double>::infinity());
  std::vector<int> sizes_in = get_int_list(section, "sizes", {256, 1024, 4096});
  std::size_t scaling_replicas =
      static_cast<std::size_t>(get_u64(section, "scaling_replicas", 60));
  double scaling_u = get_double(section, "scaling_u", std::log(2.0));
  if (pair.size() != 2 || !(pair[0] > 0.0) || !(pair[1] > 0.0))
    throw rost::ValidationError(
        "config: coalescent pair must hold two positive widths");
  if (us.empty() || replicas == 0 || m < 2)
    throw rost::ValidationError(
        "config: coalescent needs us nonempty, replicas > 0, m >= 2");
  for (double u : us)
    if (!(u > 0.0))
      throw rost::ValidationError("config: coalescent widths must be > 0");
  std::vector<std::size_t> sizes;
  for (int s : sizes_in) {
    if (s < 2)
      throw rost::ValidationError("config: coalescent sizes must be >= 2");
    sizes.push_back(static_cast<std::size_t>(s));
  }

  std::vector<SummaryRow> rows;
  Json merges = Json::array();
  // Pair-merge frequency against 1 - exp(-u), one stream per width.
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double u = us[i];
    std::vector<char> hit(replicas, 0);
    rost::replica_map(replicas, opt.workers, [&](std::size_t k) {
      rost::RngStream sub(opt.seed,
                          rost::derive_stream(
                              sub_seed(opt, kTagCoalescent, 100 * (i + 1)), k));
      rost::CoalescentState st = rost::make_singletons(2);
      rost::semigroup_step(st, u, sub);
      hit[k] = st.block_count() == 1 ? 1 : 0;
    });
    double p_hat = 0.0;
    for (char h : hit) p_hat += h;
    p_hat /= double(replicas);
    const double expect = rost::pair_merge_prob(u);
    const double se = std::sqrt(std::max(expect * (1.0 - expect),
                                         1e-12) / double(replicas));
    const double z = (p_hat - expect) / se;
    Json mj;
    mj["u"] = u;
    mj["p_hat"] = p_hat;
    mj["expected"] = expect;
    mj["z"] = z;
    merges.push_back(std::move(mj));
    rows.push_back({"pair-merge", fmt("u=%g replicas=%g", u, double(replicas)),
                    "z-vs-1-minus-exp(-u)", z,
                    std::abs(z) <= kGateZ ? "pass" : "fail"});
  }

  // Semigroup composition: stepping u1 then u2 matches one step of u1+u2.
  {
    const double u1 = pair[0], u2 = pair[1];
    std::vector<char> hit(replicas, 0);
    rost::replica_map(replicas, opt.workers, [&](std::size_t k) {
      rost::RngStream sub(opt.seed,
                          rost::derive_stream(
                              sub_seed(opt, kTagCoalescent, 9000), k));
      rost::CoalescentState st = rost::make_singletons(2);
      rost::semigroup_step(st, u1, sub);
      rost::semigroup_step(st, u2, sub);
      hit[k] = st.block_count() == 1 ? 1 : 0;
    });
    double p_hat = 0.0;
    for (char h : hit) p_hat += h;
    p_hat /= double(replicas);
    const double expect = rost::pair_merge_prob(u1 + u2);
    const double se = std::sqrt(std::max(expect * (1.0 - expect),
                                         1e-12) / double(replicas));
    const double z = (p_hat - expect) / se;
    rows.push_back({"semigroup-composition",
                    fmt("u1=%g u2=%g replicas=%g", u1, u2, double(replicas)),
                    "z-vs-merged-width", z,
                    std::abs(z) <= kGateZ ? "pass" : "fail"});
  }

  // One full run with checkpoints: block counts must be nonincreasing.
  Json run_json;
  {
    rost::RngStream rng(opt.seed, sub_seed(opt, kTagCoalescent, 9100));
    rost::CoalescentRun run = rost::run_coalescent(m, du, checkpoints, rng);
    bool monotone = true;
    for (std::size_t i = 1; i < run.block_counts.size(); ++i)
      monotone = monotone && run.block_counts[i] <= run.block_counts[i - 1];
    run_json["m"] = m;
    run_json["times"] = levels_json(run.times);
    Json counts = Json::array();
    for (std::size_t c : run.block_counts) counts.push_back(c);
    run_json["block_counts"] = std::move(counts);
    for (std::size_t i = 0; i < run.times.size(); ++i)
      rows.push_back({"coalescent-run",
                      fmt("m=%g t=%g", double(m), run.times[i]),
                      "block-count", double(run.block_counts[i]), "info"});
    rows.push_back({"coalescent-run", fmt("m=%g", double(m)),
                    "block-counts-monotone", monotone ? 1.0 : 0.0,
                    monotone ? "pass" : "fail"});
  }

  // Mean block count growth exponent across ground-set sizes.
  rost::BlockScalingReport scaling = rost::block_count_scaling(
      scaling_u, sizes, scaling_replicas, sub_seed(opt, kTagCoalescent, 9200),
      0.02);
  rows.push_back({"block-count-scaling",
                  fmt("u=%g replicas=%g", scaling_u, double(scaling_replicas)),
                  "slope-minus-exp(-u)", scaling.slope - scaling.expected,
                  scaling.pass ? "pass" : "fail"});

  Json payload;
  payload["merges"] = std::move(merges);
  payload["run"] = std::move(run_json);
  Json sj;
  sj["u"] = scaling.u;
  sj["sizes"] = Json::array();
  for (std::size_t s : scaling.sizes) sj["sizes"].push_back(s);
  sj["mean_blocks"] = levels_json(scaling.mean_blocks);
  sj["slope"] = scaling.slope;
  sj["slope_se"] = scaling.slope_se;
  sj["expected"] = scaling.expected;
  sj["pass"] = scaling.pass;
  payload["scaling"] = std::move(sj);
  out.add_record("coalescent", std::move(payload), std::move(rows));

  Json effective;
  effective["us"] = levels_json(us);
  effective["replicas"] = replicas;
  effective["pair"] = levels_json(pair);
  effective["m"] = m;
  effective["checkpoints"] = levels_json(checkpoints);
  effective["du"] = std::isfinite(du) ? Json(du) : Json("infinity");
  effective["sizes"] = sizes_in;
  effective["scaling_replicas"] = scaling_replicas;
  effective["scaling_u"] = scaling_u;
  return effective;
}

Json cmd_continuity(const RunOptions& opt, RunWriter& out) {
  Json section = section_of(opt);
  check_keys(section, "continuity",
             {"f", "g", "epsilons", "n", "replicas"});
  rost::OrderParam f;
  if (section.contains("f")) {
    check_keys(section["f"], "continuity.f", {"x_breaks", "q_values"});
    f = rost::OrderParam(
        get_double_list(section["f"], "x_breaks", {0.6}),
        get_double_list(section["f"], "q_values", {0.3}));
  } else {
    f = rost::OrderParam({0.6}, {0.3});
  }
  std::vector<double> epsilons =
      get_double_list(section, "epsilons", {0.05, 0.01});
  std::size_t n = static_cast<std::size_t>(get_u64(section, "n", 8));
  std::size_t replicas = static_cast<std::size_t>(
      opt.replicas.value_or(get_u64(section, "replicas", 10000)));
  if (epsilons.empty() || n < 2 || replicas == 0)
    throw rost::ValidationError(
        "config: continuity needs epsilons nonempty, n >= 2, replicas > 0");
  for (double eps : epsilons)
    if (!(eps > 0.0 && eps < 1.0))
      throw rost::ValidationError(
          "config: continuity epsilons must lie in (0,1)");

  bool user_g = section.contains("g");
  rost::OrderParam g_user;
  if (user_g) {
    check_keys(section["g"], "continuity.g", {"x_breaks", "q_values"});
    g_user = rost::OrderParam(
        get_double_list(section["g"], "x_breaks", f.x_breaks()),
        get_double_list(section["g"], "q_values", f.q_values()));
  }

  Json results = Json::array();
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double eps = epsilons[i];
    rost::OrderParam g;
    if (user_g) {
      g = g_user;
    } else {
      // Move the first overlap value by eps^2 / (first jump height of x(q)),
      // which makes the L1 distance exactly eps^2.
      std::vector<double> qv = f.q_values();
      const double delta = eps * eps / f.x_breaks().front();
      qv[0] += delta;
      const double limit = qv.size() > 1 ? qv[1] : 1.0;
      if (!(qv[0] < limit))
        throw rost::ValidationError(
            "config: continuity auto-perturbation leaves the valid ladder; "
            "provide 'g' explicitly");
      g = rost::OrderParam(f.x_breaks(), qv);
    }
    rost::ContinuityReport rep = rost::coupling_continuity_test(
        f, g, eps, n, replicas, sub_seed(opt, kTagContinuity, i));
    Json rj;
    rj["epsilon"] = eps;
    rj["l1"] = rep.l1;
    rj["precondition_ok"] = rep.precondition_ok;
    rj["bound"] = rep.bound;
    rj["vacuous"] = rep.vacuous;
    rj["p_hat"] = rep.p_hat;
    rj["stderr"] = rep.stderr_;
    rj["pass"] = rep.pass;
    results.push_back(std::move(rj));
    std::string pars = fmt("eps=%g n=%g replicas=%g", eps, double(n),
                           double(replicas));
    rows.push_back({"coupling-continuity", pars, "bound", rep.bound, "info"});
    rows.push_back({"coupling-continuity", pars, "p-hat", rep.p_hat, "info"});
    std::string verdict = !rep.precondition_ok
                              ? "fail"
                              : rep.vacuous ? "vacuous"
                                            : (rep.pass ? "pass" : "fail");
    rows.push_back({"coupling-continuity", pars, "bound-minus-p-hat",
                    rep.bound - rep.p_hat, verdict});
  }

  Json payload;
  payload["f_x_breaks"] = levels_json(f.x_breaks());
  payload["f_q_values"] = levels_json(f.q_values());
  payload["n"] = n;
  payload["replicas"] = replicas;
  payload["results"] = std::move(results);
  out.add_record("continuity", std::move(payload), std::move(rows));

  Json effective;
  effective["f_x_breaks"] = levels_json(f.x_breaks());
  effective["f_q_values"] = levels_json(f.q_values());
  effective["g"] = user_g ? "explicit" : "auto";
  effective["epsilons"] = levels_json(epsilons);
  effective["n"] = n;
  effective["replicas"] = replicas;
  return effective;
}

bool cmd_report(const RunOptions& opt) {
  namespace fs = std::filesystem;
  Json section = section_of(opt);
  check_keys(section, "report", {"in_dir"});
  std::string dir = get_string(section, "in_dir", opt.out_dir);
  fs::path records = fs::path(dir) / "records";
  std::error_code ec;
  std::vector<fs::path> files;
  if (fs::is_directory(records, ec))
    for (const auto& entry : fs::directory_iterator(records, ec))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
  if (files.empty())
    throw rost::ValidationError("report: no records found under '" + dir +
                                "'");
  std::sort(files.begin(), files.end());

  std::vector<SummaryRow> rows;
  for (const auto& file : files) {
    Json record = Json::parse(rost::read_file(file.string()), nullptr, false);
    if (record.is_discarded() || !record.is_object() ||
        !record.contains("rows"))
      throw rost::ValidationError("report: malformed record '" +
                                  file.string() + "'");
    if (record.value("kind", std::string()) != "test-record")
      throw rost::ValidationError("report: '" + file.string() +
                                  "' is not a test record");
    for (auto& row : rows_from_json(record["rows"]))
      rows.push_back(std::move(row));
  }

  rost::write_file_atomic((fs::path(dir) / "summary.csv").string(),
                          RunWriter::render_csv(rows));
  std::printf("%-34s %-38s %-26s %12s  %s\n", "test", "parameters",
              "statistic", "value", "verdict");
  bool ok = true;
  for (const auto& row : rows) {
    std::printf("%-34s %-38s %-26s %12s  %s\n", row.test.c_str(),
                row.parameters.c_str(), row.statistic.c_str(),
                RunWriter::format_value(row.value).c_str(),
                row.verdict.c_str());
    ok = ok && row.verdict != "fail";
  }
  std::printf("report: %zu rows from %zu records, %s\n", rows.size(),
              files.size(), ok ? "all stored verdicts pass" : "failures present");
  return ok;
}

}  // namespace rostcli
