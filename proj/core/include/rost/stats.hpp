#pragma once

// Statistical verification drivers: two-sample distribution comparison,
// the invariance battery for one evolution step, distributional drift of
// superposition block weights, coupling continuity of the coalescent
// construction, and block-count scaling.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rost/cascade.hpp"
#include "rost/coalescent.hpp"
#include "rost/evolution.hpp"
#include "rost/order_param.hpp"
#include "rost/rng.hpp"

namespace rost {

// Two-sample Kolmogorov-Smirnov test.  Uses the asymptotic tail for
// comfortable sample sizes and a seeded permutation null otherwise; ties
// are handled by walking both empirical laws over the pooled values.
struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t m = 0;
  bool asymptotic = true;
};

KsResult ks_two_sample(std::vector<double> xs, std::vector<double> ys,
                       RngStream* perm_rng = nullptr);
double ks_asymptotic_pvalue(double d, std::size_t n, std::size_t m);

double normal_cdf(double z);

// Scalar functionals of a structure compared before and after a step.
// Value-based: heaviest and two heaviest masses, second and third moment
// sums, the overlap of a size-biased pair, and the pair mass at or below
// each reference overlap value.  Index-based replaces the last two kinds
// by ladder-level analogues so structures with different overlap values
// but equal depth can be compared.
std::vector<std::string> qs_functional_names(
    const std::vector<double>& ref_values, bool by_level_index);
std::vector<double> qs_functionals(const LevelStructure& s,
                                   const std::vector<double>& ref_values,
                                   bool by_level_index, RngStream& rng);

struct FunctionalTest {
  std::string name;
  double d = 0.0;
  double p_value = 1.0;
  double mean_pre = 0.0;
  double mean_post = 0.0;
  bool pass = true;
};

struct QsReport {
  std::string model;
  int r = 1;
  double lambda = 1.0;
  std::size_t replicas = 0;
  double alpha_total = 0.01;
  double alpha_each = 0.01;
  std::vector<FunctionalTest> tests;
  bool pass = true;
};

// Draws `replicas` fresh structures and, independently, `replicas`
// structures pushed through one evolution step, then compares every
// functional across the two sets.  Bonferroni-corrected within the
// battery; deterministic given the seed, regardless of worker count.
QsReport qs_test(const RostSampler& sampler, const EvolutionConfig& cfg,
                 std::size_t replicas, std::uint64_t seed,
                 const std::vector<double>& ref_values, bool by_level_index,
                 double alpha_total = 0.01, int workers = 1);

struct UltrametricityReport {
  std::size_t replicas = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  bool pass = true;
};

UltrametricityReport ultrametricity_report(const RostSampler& sampler,
                                           std::size_t n,
                                           std::size_t replicas,
                                           std::uint64_t seed,
                                           double tol = kUltrametricTol);

// Couples two ladders through one coalescent run per replica and checks
// the overlap-matrix distance of the two induced n-replica matrices
// against the bound n(n-1)epsilon/(2 zeta) for P(distance >= 2 epsilon),
// which applies whenever the ladders are epsilon^2-close in L1.
struct ContinuityReport {
  double epsilon = 0.0;
  std::size_t n = 0;
  double zeta = 0.0;
  double l1 = 0.0;
  bool precondition_ok = false;
  double bound = 0.0;
  bool vacuous = false;
  std::size_t replicas = 0;
  std::size_t exceedances = 0;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  bool pass = false;
};

ContinuityReport coupling_continuity_test(const OrderParam& f,
                                          const OrderParam& g, double epsilon,
                                          std::size_t n, std::size_t replicas,
                                          std::uint64_t seed);

// Drift of the block weight of a two-block superposition under one
// evolution step: paired test on the change of the log block-mass ratio
// (its mean equals the difference of the blocks' crowd velocities) plus a
// two-sample comparison of the weight marginal on split halves.
struct DriftReport {
  int r = 1;
  double lambda = 1.0;
  std::size_t pairs = 0;
  double predicted = 0.0;
  double delta_mean = 0.0;
  double delta_se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool reject = false;
  bool drift_matches_predicted = false;
  KsResult marginal;
  double alpha = 0.01;
};

DriftReport superposition_drift_test(const SuperpositionSpec& spec,
                                     const EvolutionConfig& cfg,
                                     std::size_t pairs, std::uint64_t seed,
                                     double alpha = 0.01, int workers = 1);

// Mean cluster count after one transition of width u, across ground-set
// sizes; the growth exponent (log-log slope) should approach exp(-u).
struct BlockScalingReport {
  double u = 0.0;
  std::vector<std::size_t> sizes;
  std::vector<double> mean_blocks;
  std::vector<double> stderr_;
  double slope = 0.0;
  double slope_se = 0.0;
  double expected = 0.0;
  bool pass = false;
};

BlockScalingReport block_count_scaling(double u,
                                       const std::vector<std::size_t>& sizes,
                                       std::size_t replicas,
                                       std::uint64_t seed, double tol = 0.02);

}  // namespace rost
