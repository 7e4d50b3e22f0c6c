#include <doctest.h>

#include <cmath>
#include <vector>

#include "rost/errors.hpp"
#include "rost/stats.hpp"

using namespace rost;

namespace {

RpcParams one_level() {
  RpcParams p;
  p.q_levels = {0.3};
  p.x_levels = {0.5};
  return p;
}

LevelStructure hand_structure() {
  LevelStructure s;
  s.q_levels = {0.1, 0.4, 0.7};
  s.atoms = {0.4, 0.3, 0.2, 0.1};
  s.residual_mass = 0.0;
  s.groups = {{0, 0, 1, 1}, {0, 1, 2, 2}};
  return s;
}

}  // namespace

TEST_CASE("two-sample statistic walks ties correctly") {
  KsResult r = ks_two_sample({1.0, 2.0, 3.0}, {1.5, 2.5, 3.5});
  CHECK(r.d == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_FALSE(r.asymptotic);  // permutation regime
  CHECK(r.p_value > 0.05);

  KsResult ties = ks_two_sample({0.0, 0.0, 1.0, 1.0}, {0.0, 1.0, 1.0, 1.0});
  CHECK(ties.d == doctest::Approx(0.25).epsilon(1e-12));

  KsResult same = ks_two_sample({1.0, 2.0}, {1.0, 2.0});
  CHECK(same.d == doctest::Approx(0.0));
  CHECK(same.p_value == doctest::Approx(1.0));

  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), ValidationError);

  // Fixed permutation stream means a reproducible p-value.
  RngStream p1(7, 0), p2(7, 0);
  KsResult a = ks_two_sample({1.0, 2.0, 3.0, 9.0}, {1.5, 2.5, 3.5}, &p1);
  KsResult b = ks_two_sample({1.0, 2.0, 3.0, 9.0}, {1.5, 2.5, 3.5}, &p2);
  CHECK(a.p_value == doctest::Approx(b.p_value));
}

TEST_CASE("large samples use the asymptotic tail") {
  RngStream rng(11, 0);
  std::vector<double> xs(200), ys(200), zs(200);
  for (double& v : xs) v = rng.next_unit();
  for (double& v : ys) v = rng.next_unit();
  for (double& v : zs) v = rng.next_unit() + 0.5;
  KsResult null_case = ks_two_sample(xs, ys);
  CHECK(null_case.asymptotic);
  CHECK(null_case.p_value > 1e-4);
  KsResult shifted = ks_two_sample(xs, zs);
  CHECK(shifted.d > 0.3);
  CHECK(shifted.p_value < 1e-6);
}

TEST_CASE("asymptotic tail values") {
  CHECK(ks_asymptotic_pvalue(0.0, 100, 100) == doctest::Approx(1.0));
  double p05 = ks_asymptotic_pvalue(0.05, 100, 100);
  double p10 = ks_asymptotic_pvalue(0.10, 100, 100);
  double p30 = ks_asymptotic_pvalue(0.30, 100, 100);
  CHECK(p05 > 0.9);
  CHECK(p10 > 0.5);
  CHECK(p10 < 0.8);
  CHECK(p30 < 1e-3);
  CHECK(p05 > p10);
  CHECK(p10 > p30);
}

TEST_CASE("normal distribution function") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-9));
  CHECK(normal_cdf(-1.96) ==
        doctest::Approx(0.0249978951482205).epsilon(1e-7));
}

TEST_CASE("functional battery names and values") {
  std::vector<std::string> value_names =
      qs_functional_names({0.2, 0.5}, false);
  REQUIRE(value_names.size() == 7);
  CHECK(value_names[0] == "mass-top1");
  CHECK(value_names[4] == "pair-overlap");
  CHECK(value_names[5] == "cum-mass-le-0.2");
  CHECK(value_names[6] == "cum-mass-le-0.5");
  std::vector<std::string> level_names = qs_functional_names({0.2, 0.5}, true);
  REQUIRE(level_names.size() == 7);
  CHECK(level_names[4] == "pair-level");
  CHECK(level_names[5] == "level-mass-0");

  LevelStructure s = hand_structure();
  RngStream rng(13, 0);
  std::vector<double> v = qs_functionals(s, {0.1, 0.4, 0.7}, false, rng);
  REQUIRE(v.size() == 8);
  CHECK(v[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(v[2] == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(v[3] == doctest::Approx(0.1).epsilon(1e-12));
  bool known = v[4] == 0.1 || v[4] == 0.4 || v[4] == 0.7 || v[4] == 1.0;
  CHECK(known);
  CHECK(v[5] == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(v[6] == doctest::Approx(0.66).epsilon(1e-12));
  CHECK(v[7] == doctest::Approx(0.70).epsilon(1e-12));

  std::vector<double> by_level =
      qs_functionals(s, {0.1, 0.4, 0.7}, true, rng);
  REQUIRE(by_level.size() == 8);
  CHECK(by_level[4] <= 3.0);
  CHECK(by_level[5] == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(by_level[6] == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(by_level[7] == doctest::Approx(0.04).epsilon(1e-12));

  CHECK_THROWS_AS(qs_functionals(s, {0.1, 0.4}, true, rng), ValidationError);
}

TEST_CASE("invariance battery passes on a cascade") {
  RostSampler sampler = make_cascade_sampler(one_level(), 512);
  EvolutionConfig cfg;  // r = 1, lambda = 1
  QsReport report = qs_test(sampler, cfg, 400, 9001, {0.3}, false);
  CHECK(report.model == "cascade");
  CHECK(report.replicas == 400);
  REQUIRE(report.tests.size() == 6);
  CHECK(report.alpha_each == doctest::Approx(0.01 / 6.0));
  for (const FunctionalTest& t : report.tests) {
    INFO(t.name, " p=", t.p_value);
    CHECK(t.pass);
  }
  CHECK(report.pass);
}

TEST_CASE("invariance battery rejects the pinned-mass control") {
  RostSampler control = make_perturbed_cascade_sampler(one_level(), 512, 1.2);
  EvolutionConfig cfg;
  QsReport report = qs_test(control, cfg, 200, 9002, {0.3}, false);
  CHECK_FALSE(report.pass);
  bool top1_failed = false;
  for (const FunctionalTest& t : report.tests)
    if (t.name == "mass-top1") top1_failed = !t.pass;
  CHECK(top1_failed);
}

TEST_CASE("battery results do not depend on the worker count") {
  RostSampler sampler = make_cascade_sampler(one_level(), 128);
  EvolutionConfig cfg;
  QsReport one = qs_test(sampler, cfg, 120, 31, {0.3}, false, 0.01, 1);
  QsReport two = qs_test(sampler, cfg, 120, 31, {0.3}, false, 0.01, 2);
  REQUIRE(one.tests.size() == two.tests.size());
  for (std::size_t f = 0; f < one.tests.size(); ++f) {
    CHECK(one.tests[f].d == doctest::Approx(two.tests[f].d));
    CHECK(one.tests[f].p_value == doctest::Approx(two.tests[f].p_value));
  }
}

TEST_CASE("sampled structures are ultrametric") {
  RpcParams p;
  p.q_levels = {0.2, 0.5};
  p.x_levels = {0.3, 0.6};
  UltrametricityReport rep =
      ultrametricity_report(make_cascade_sampler(p, 256), 6, 40, 77);
  CHECK(rep.replicas == 40);
  CHECK(rep.violations == 0);
  CHECK(rep.pass);
}

TEST_CASE("coupling two copies of one ladder never separates them") {
  OrderParam f({0.3, 0.6}, {0.2, 0.5});
  ContinuityReport rep = coupling_continuity_test(f, f, 0.01, 4, 500, 1234);
  CHECK(rep.l1 == doctest::Approx(0.0));
  CHECK(rep.precondition_ok);
  CHECK(rep.bound == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_FALSE(rep.vacuous);
  CHECK(rep.exceedances == 0);
  CHECK(rep.pass);
}

TEST_CASE("coupling close ladders stays under the distance bound") {
  const double eps = 0.05;
  const double delta = eps * eps / 0.3;
  OrderParam f({0.3, 0.6}, {0.2, 0.5});
  OrderParam g({0.3 + delta, 0.6}, {0.2, 0.5});
  ContinuityReport rep = coupling_continuity_test(f, g, eps, 4, 1000, 4321);
  CHECK(rep.l1 == doctest::Approx(eps * eps).epsilon(1e-9));
  CHECK(rep.precondition_ok);
  CHECK(rep.zeta == doctest::Approx(0.6));
  CHECK(rep.bound == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.pass);
  CHECK(rep.p_hat <= rep.bound);

  OrderParam far({0.45, 0.6}, {0.2, 0.5});
  ContinuityReport wide = coupling_continuity_test(f, far, eps, 4, 10, 1);
  CHECK_FALSE(wide.precondition_ok);

  ContinuityReport loose = coupling_continuity_test(f, g, 0.4, 8, 10, 1);
  CHECK(loose.vacuous);
  CHECK(loose.pass);

  OrderParam other_zeta({0.3, 0.7}, {0.2, 0.5});
  CHECK_THROWS_AS(coupling_continuity_test(f, other_zeta, eps, 4, 10, 1),
                  ValidationError);
  CHECK_THROWS_AS(coupling_continuity_test(f, g, 0.0, 4, 10, 1),
                  ValidationError);
  CHECK_THROWS_AS(coupling_continuity_test(f, g, eps, 1, 10, 1),
                  ValidationError);
}

TEST_CASE("superposition drift is flat for velocity-matched blocks") {
  SuperpositionSpec spec;
  spec.block_a.q_levels = {0.0, 0.05};
  spec.block_a.x_levels = {0.5, 0.6};
  spec.block_b.q_levels = {0.0, 0.5};
  spec.block_b.x_levels = {0.45, 0.74};
  spec.cap = 256;
  EvolutionConfig cfg;  // r = 1, lambda = 1

  DriftReport flat = superposition_drift_test(spec, cfg, 400, 4242);
  CHECK(flat.predicted == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(flat.pairs == 400);
  CHECK(flat.delta_se > 0.0);
  CHECK_FALSE(flat.reject);
  CHECK(flat.drift_matches_predicted);
  CHECK(flat.marginal.p_value > 1e-3);

  EvolutionConfig second;
  second.r = 2;
  DriftReport skew = superposition_drift_test(spec, second, 400, 4242);
  CHECK(skew.predicted == doctest::Approx(-0.033875).epsilon(1e-9));
  CHECK(skew.drift_matches_predicted);

  CHECK_THROWS_AS(superposition_drift_test(spec, cfg, 3, 1), ValidationError);
}

TEST_CASE("cluster count grows like the powered set size") {
  BlockScalingReport rep =
      block_count_scaling(std::log(2.0), {256, 1024, 4096}, 60, 555);
  CHECK(rep.expected == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(rep.mean_blocks.size() == 3);
  CHECK(rep.mean_blocks[0] < rep.mean_blocks[1]);
  CHECK(rep.mean_blocks[1] < rep.mean_blocks[2]);
  // The cluster count keeps a random limit profile, so the mean over a
  // few replicas is noisy; lean on the fitted standard error.
  CHECK(std::abs(rep.slope - 0.5) < 4.0 * rep.slope_se + 0.02);
  CHECK(rep.pass);

  CHECK_THROWS_AS(block_count_scaling(0.0, {16, 32}, 10, 1), ValidationError);
  CHECK_THROWS_AS(block_count_scaling(1.0, {16}, 10, 1), ValidationError);
}
