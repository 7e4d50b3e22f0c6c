#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "rost/errors.hpp"
#include "rost/evolution.hpp"
#include "rost/rng.hpp"

using namespace rost;

namespace {

LevelStructure hand_structure() {
  LevelStructure s;
  s.q_levels = {0.1, 0.4, 0.7};
  s.atoms = {0.4, 0.3, 0.2, 0.1};
  s.residual_mass = 0.0;
  s.groups = {{0, 0, 1, 1}, {0, 1, 2, 2}};
  return s;
}

OverlapMatrix toeplitz3(double a, double b) {
  OverlapMatrix q(3);
  q.set(0, 1, a);
  q.set(1, 2, a);
  q.set(0, 2, b);
  return q;
}

void check_close(const std::vector<double>& got,
                 const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("evolution config validation") {
  EvolutionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.r = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.r = 3;
  cfg.lambda = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(psi_value(Psi::linear, 3.7) == doctest::Approx(3.7));
}

TEST_CASE("reweighting, normalization and re-ranking") {
  EvolveResult r = reweight_ranked({0.6, 0.4}, {0.0, std::log(4.0)}, 1.0,
                                   Psi::linear);
  // Weights (0.6, 1.6): the lighter atom overtakes.
  REQUIRE(r.masses.size() == 2);
  CHECK(r.masses[0] == doctest::Approx(1.6 / 2.2).epsilon(1e-12));
  CHECK(r.masses[1] == doctest::Approx(0.6 / 2.2).epsilon(1e-12));
  CHECK(r.order == std::vector<std::size_t>{1, 0});
  CHECK(r.log_total == doctest::Approx(std::log(2.2)).epsilon(1e-12));

  // Exact tie: original positions win.
  EvolveResult tie = reweight_ranked({0.2, 0.8}, {std::log(4.0), 0.0}, 1.0,
                                     Psi::linear);
  CHECK(tie.masses[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tie.masses[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tie.order == std::vector<std::size_t>{0, 1});
  CHECK(tie.log_total == doctest::Approx(std::log(1.6)).epsilon(1e-12));

  // Lambda scales the field before exponentiation.
  EvolveResult hot = reweight_ranked({0.5, 0.5}, {0.1, -0.1}, 2.0,
                                     Psi::linear);
  CHECK(hot.masses[0] ==
        doctest::Approx(1.0 / (1.0 + std::exp(-0.4))).epsilon(1e-12));

  // All-zero input is a fixed point.
  EvolveResult zero = reweight_ranked({0.0, 0.0}, {1.0, 2.0}, 1.0,
                                      Psi::linear);
  CHECK(zero.masses == std::vector<double>{0.0, 0.0});
  CHECK(zero.order == std::vector<std::size_t>{0, 1});
  CHECK(std::isinf(zero.log_total));

  CHECK_THROWS_AS(reweight_ranked({0.5}, {0.0, 0.0}, 1.0, Psi::linear),
                  ValidationError);
  CHECK_THROWS_AS(reweight_ranked({-0.1, 1.1}, {0.0, 0.0}, 1.0, Psi::linear),
                  ValidationError);
}

TEST_CASE("hierarchical increments have the powered overlap covariance") {
  LevelStructure s = hand_structure();
  for (int r : {1, 2}) {
    RngStream rng(500 + r, 0);
    const std::size_t reps = 20000;
    std::array<std::array<double, 4>, 4> acc{};
    std::array<double, 4> mean{};
    for (std::size_t rep = 0; rep < reps; ++rep) {
      std::vector<double> k = sample_increments(s, r, rng);
      for (std::size_t i = 0; i < 4; ++i) {
        mean[i] += k[i] / reps;
        for (std::size_t j = 0; j < 4; ++j) acc[i][j] += k[i] * k[j] / reps;
      }
    }
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(mean[i]) < 0.03);
      for (std::size_t j = 0; j < 4; ++j) {
        double want = std::pow(s.overlap(i, j), r);
        CHECK(std::abs(acc[i][j] - want) < 0.04);
      }
    }
  }
  RngStream rng(1, 1);
  CHECK_THROWS_AS(sample_increments(s, 0, rng), ValidationError);
}

TEST_CASE("dense increments match a general covariance and reject non-psd") {
  OverlapMatrix q = toeplitz3(0.5, 0.25);
  REQUIRE(psd_min_eigenvalue(q) > 0.0);
  RngStream rng(502, 0);
  const std::size_t reps = 20000;
  std::array<std::array<double, 3>, 3> acc{};
  for (std::size_t rep = 0; rep < reps; ++rep) {
    std::vector<double> k = sample_increments(q, 2, rng);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) acc[i][j] += k[i] * k[j] / reps;
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(acc[i][j] - std::pow(q(i, j), 2)) < 0.04);

  OverlapMatrix bad = toeplitz3(0.9, 0.0);
  try {
    sample_increments(bad, 1, rng);
    FAIL("expected a numeric rejection");
  } catch (const NumericError& e) {
    CHECK(e.detail() ==
          doctest::Approx(1.0 - 0.9 * std::sqrt(2.0)).epsilon(1e-6));
  }
}

TEST_CASE("one evolution step permutes pair overlaps consistently") {
  LevelStructure s = hand_structure();
  EvolutionConfig cfg;
  std::vector<double> kappa{0.0, 0.0, std::log(5.0), 0.0};
  LevelStructure e = evolve(s, kappa, cfg);
  CHECK_NOTHROW(e.validate());
  // Weights (0.4, 0.3, 1.0, 0.1) => ranks (2, 0, 1, 3).
  CHECK(e.atoms[0] == doctest::Approx(1.0 / 1.8).epsilon(1e-12));
  CHECK(e.atoms[1] == doctest::Approx(0.4 / 1.8).epsilon(1e-12));
  CHECK(e.atoms[3] == doctest::Approx(0.1 / 1.8).epsilon(1e-12));
  std::vector<std::size_t> order{2, 0, 1, 3};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(e.overlap(i, j) == doctest::Approx(s.overlap(order[i], order[j])));

  Rost before = s.to_rost(4);
  Rost after = evolve(before, kappa, cfg);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(after.overlaps(i, j) == doctest::Approx(e.overlap(i, j)));

  CHECK_THROWS_AS(evolve(s, {0.0, 0.0}, cfg), ValidationError);
}

TEST_CASE("random evolution step is reproducible and mass preserving") {
  LevelStructure s = hand_structure();
  EvolutionConfig cfg;
  cfg.r = 2;
  cfg.lambda = 1.5;
  RngStream r1(503, 0), r2(503, 0);
  PhiResult a = phi(s, cfg, r1);
  PhiResult b = phi(s, cfg, r2);
  CHECK(a.state.atoms == b.state.atoms);
  CHECK(a.state.groups == b.state.groups);
  CHECK(a.log_total == doctest::Approx(b.log_total));
  CHECK(std::isfinite(a.log_total));
  CHECK_NOTHROW(a.state.validate());
  CHECK(a.state.q_levels == s.q_levels);
  CHECK(a.state.size() == s.size());

  RngStream r3(503, 0);
  PhiRostResult c = phi_rost(s.to_rost(4), cfg, r3);
  CHECK(std::isfinite(c.log_total));
  CHECK(c.state.masses.atoms.size() == 4);
  CHECK_NOTHROW(c.state.overlaps.validate());
}

TEST_CASE("velocity formulas over the ladder jumps") {
  OrderParam flat({0.5}, {0.0});
  CHECK(crowd_velocity(flat, 1, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(crowd_velocity(flat, 1, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(crowd_velocity(flat, 3, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(past_velocity_formula(flat, 1, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(past_velocity_formula(flat, 1, 2.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  OrderParam two({0.3, 0.6}, {0.2, 0.5});
  CHECK(crowd_velocity(two, 1, 1.0) ==
        doctest::Approx(0.195).epsilon(1e-12));
  CHECK(crowd_velocity(two, 2, 1.0) ==
        doctest::Approx(0.2565).epsilon(1e-12));
  CHECK_THROWS_AS(crowd_velocity(two, 0, 1.0), ValidationError);
}

TEST_CASE("measured drift follows the crowd formula, not the past one") {
  RpcParams p;
  p.q_levels = {0.2};
  p.x_levels = {0.5};
  EvolutionConfig cfg;  // r = 1, lambda = 1
  RngStream rng(504, 0);
  VelocityEstimate est = estimate_velocity(p, cfg, 4096, 1500, rng);
  CHECK(est.crowd == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(est.past == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(std::abs(est.v_hat - 0.2) < 0.01 + 4.0 * est.stderr_);
  CHECK(est.matches_crowd);
  CHECK_FALSE(est.matches_past);
}

TEST_CASE("velocity matching solves for ladder jumps") {
  RpcParams a;
  a.q_levels = {0.2};
  a.x_levels = {0.3};
  MatchResult one = match_velocities(a, {0.4}, 1);
  REQUIRE(one.x_levels.size() == 1);
  CHECK(one.x_levels[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(one.max_residual < 1e-12);

  // Matching a ladder to its own overlap levels returns its own weights.
  RpcParams two;
  two.q_levels = {0.2, 0.5};
  two.x_levels = {0.3, 0.6};
  MatchResult self = match_velocities(two, {0.2, 0.5}, 2);
  REQUIRE(self.x_levels.size() == 2);
  CHECK(self.x_levels[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(self.x_levels[1] == doctest::Approx(0.6).epsilon(1e-9));

  // One matched level plus one fixed tail jump.
  RpcParams src;
  src.q_levels = {0.0, 0.05};
  src.x_levels = {0.5, 0.6};
  MatchResult tail = match_velocities(src, {0.0, 0.5}, 1, {0.29});
  REQUIRE(tail.x_levels.size() == 2);
  CHECK(tail.x_levels[0] == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(tail.x_levels[1] == doctest::Approx(0.74).epsilon(1e-12));

  CHECK_THROWS_AS(match_velocities(a, {0.9}, 1), ValidationError);
  CHECK_THROWS_AS(match_velocities(a, {0.4}, 2), ValidationError);
  CHECK_THROWS_AS(match_velocities(a, {0.4, 0.6}, 1), ValidationError);
}

TEST_CASE("superposition pools atoms and zeroes cross overlaps") {
  Rost a;
  a.masses.atoms = {0.7, 0.3};
  a.overlaps = OverlapMatrix(2);
  a.overlaps.set(0, 1, 0.5);
  Rost b;
  b.masses.atoms = {1.0};
  b.overlaps = OverlapMatrix(1);

  Rost mix = superpose(a, b, 0.4);
  check_close(mix.masses.atoms, {0.6, 0.28, 0.12});
  CHECK(mix.overlaps(0, 1) == doctest::Approx(0.0));
  CHECK(mix.overlaps(0, 2) == doctest::Approx(0.0));
  CHECK(mix.overlaps(1, 2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(superpose(a, b, 1.5), ValidationError);

  // Equal pooled masses: block order breaks the tie.
  Rost one;
  one.masses.atoms = {1.0};
  one.overlaps = OverlapMatrix(1);
  Rost even = superpose(one, one, 0.5);
  CHECK(even.masses.atoms == std::vector<double>{0.5, 0.5});
  CHECK(even.overlaps(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("level structure superposition merges the ladders") {
  LevelStructure a;
  a.q_levels = {0.3};
  a.atoms = {0.7, 0.3};
  a.groups = {};
  LevelStructure b;
  b.q_levels = {0.6};
  b.atoms = {1.0};
  b.groups = {};

  LevelStructure mix = superpose(a, b, 0.4);
  CHECK_NOTHROW(mix.validate());
  CHECK(mix.q_levels == std::vector<double>{0.0, 0.3, 0.6});
  check_close(mix.atoms, {0.6, 0.28, 0.12});
  CHECK(mix.residual_mass == doctest::Approx(0.0));
  CHECK(mix.overlap(0, 1) == doctest::Approx(0.0));
  CHECK(mix.overlap(0, 2) == doctest::Approx(0.0));
  CHECK(mix.overlap(1, 2) == doctest::Approx(0.3));
  CHECK(mix.overlap(0, 0) == doctest::Approx(1.0));

  // Richer blocks: every within-block pair keeps its overlap.
  LevelStructure c;
  c.q_levels = {0.1, 0.4, 0.7};
  c.atoms = {0.4, 0.3, 0.2, 0.1};
  c.groups = {{0, 0, 1, 1}, {0, 1, 2, 2}};
  LevelStructure deep = superpose(c, a, 0.5);
  CHECK_NOTHROW(deep.validate());
  REQUIRE(deep.size() == 6);
  // Pooled masses sort to (0.35a, 0.2c, 0.15c, 0.15a, 0.1c, 0.05c); the
  // tie at 0.15 puts the first block first.
  check_close(deep.atoms, {0.35, 0.2, 0.15, 0.15, 0.1, 0.05});
  std::size_t a0 = 0, c0 = 1, c1 = 2, a1 = 3, c2 = 4, c3 = 5;
  CHECK(deep.overlap(c0, c1) == doctest::Approx(0.4));
  CHECK(deep.overlap(c2, c3) == doctest::Approx(0.7));
  CHECK(deep.overlap(c0, c2) == doctest::Approx(0.1));
  CHECK(deep.overlap(a0, a1) == doctest::Approx(0.3));
  CHECK(deep.overlap(c0, a0) == doctest::Approx(0.0));
  CHECK(deep.overlap(c3, a1) == doctest::Approx(0.0));
}

TEST_CASE("latent total mass scale of a cascade") {
  CHECK(cascade_total_scale({0.5}) ==
        doctest::Approx(std::acos(-1.0)).epsilon(1e-12));
  // Peeling the deepest level off a two-level cascade.
  double direct = cascade_total_scale({0.3, 0.6});
  double peeled = cascade_total_scale({0.6}) *
                  std::exp(std::lgamma(0.5) / 0.3);
  CHECK(direct == doctest::Approx(peeled).epsilon(1e-12));
  CHECK_THROWS_AS(cascade_total_scale({}), ValidationError);
  CHECK_THROWS_AS(cascade_total_scale({0.5, 0.4}), ValidationError);
  CHECK_THROWS_AS(cascade_total_scale({1.0}), ValidationError);
}

TEST_CASE("block weight of pooled equal cascades follows the arcsine law") {
  RpcParams p;
  p.q_levels = {0.3};
  p.x_levels = {0.5};
  RngStream rng(505, 0);
  const std::size_t reps = 4000;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t low = 0;
  for (std::size_t i = 0; i < reps; ++i) {
    double w = sample_block_weight(p, p, rng);
    CHECK(w > 0.0);
    CHECK(w < 1.0);
    sum += w;
    sum_sq += w * w;
    if (w < 0.2) ++low;
  }
  double mean = sum / reps;
  double var = sum_sq / reps - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.023);          // 4 se at var 1/8
  CHECK(std::abs(var - 0.125) < 0.012);
  double p_low = static_cast<double>(low) / reps;
  double want = 2.0 / std::acos(-1.0) * std::asin(std::sqrt(0.2));
  CHECK(std::abs(p_low - want) < 0.03);
}

TEST_CASE("superposition sampler") {
  SuperpositionSpec spec;
  spec.block_a.q_levels = {0.2, 0.5};
  spec.block_a.x_levels = {0.3, 0.6};
  spec.block_b.q_levels = {0.1};
  spec.block_b.x_levels = {0.4};
  spec.cap = 0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.cap = 128;
  CHECK_NOTHROW(spec.validate());

  RostSampler sampler = make_superposition_sampler(spec);
  CHECK_FALSE(sampler.name.empty());
  RngStream r1(506, 2), r2(506, 2);
  LevelStructure s = sampler.draw(r1);
  LevelStructure t = sampler.draw(r2);
  CHECK(s.atoms == t.atoms);
  CHECK_NOTHROW(s.validate());
  CHECK(s.q_levels.front() == doctest::Approx(0.0));
  CHECK(s.size() == 256);
}
