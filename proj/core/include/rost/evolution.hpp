#pragma once

// One-step evolution of an overlap structure: atoms are reweighted by the
// exponential of a Gaussian field whose covariance is the entrywise r-th
// power of the overlap matrix, then re-ranked.  Includes the associated
// velocity formulas, velocity matching across ladders, and superpositions
// of independent structures weighted by their latent total masses.

#include <cstddef>
#include <vector>

#include "rost/cascade.hpp"
#include "rost/order_param.hpp"
#include "rost/overlap.hpp"
#include "rost/rng.hpp"

namespace rost {

enum class Psi { linear };
double psi_value(Psi psi, double x);

struct EvolutionConfig {
  int r = 1;
  double lambda = 1.0;
  Psi psi = Psi::linear;
  void validate() const;
};

// Gaussian vector with covariance overlap(i,j)^r: hierarchical shared
// increments for ladder structures, dense spectral factorization for
// general matrices (rejects matrices that are not positive semidefinite).
std::vector<double> sample_increments(const LevelStructure& s, int r,
                                      RngStream& rng);
std::vector<double> sample_increments(const OverlapMatrix& q, int r,
                                      RngStream& rng);

// Reweighted, renormalized and re-ranked masses.  order[rank] is the
// original index (ties keep original position); log_total is the log of
// the unnormalized reweighted sum of the retained atoms.  An all-zero
// vector stays all-zero.
struct EvolveResult {
  std::vector<double> masses;
  std::vector<std::size_t> order;
  double log_total = 0.0;
};

EvolveResult reweight_ranked(const std::vector<double>& masses,
                             const std::vector<double>& kappa, double lambda,
                             Psi psi);

Rost evolve(const Rost& state, const std::vector<double>& kappa,
            const EvolutionConfig& cfg);
LevelStructure evolve(const LevelStructure& state,
                      const std::vector<double>& kappa,
                      const EvolutionConfig& cfg);

struct PhiResult {
  LevelStructure state;
  double log_total = 0.0;
};
PhiResult phi(const LevelStructure& state, const EvolutionConfig& cfg,
              RngStream& rng);

struct PhiRostResult {
  Rost state;
  double log_total = 0.0;
};
PhiRostResult phi_rost(const Rost& state, const EvolutionConfig& cfg,
                       RngStream& rng);

// (lambda^2/2) * sum (1 - q_l^r) dx_l over the jumps of x(q) below q = 1.
double crowd_velocity(const OrderParam& op, int r, double lambda);
// lambda * sum (1 - q_l^r) dx_l, the rate attributed to the receding past.
double past_velocity_formula(const OrderParam& op, int r, double lambda);

// Monte Carlo drift of log sum xi * exp(lambda kappa) per step.
struct VelocityEstimate {
  double v_hat = 0.0;
  double stderr_ = 0.0;
  double crowd = 0.0;
  double past = 0.0;
  std::size_t replicas = 0;
  bool matches_crowd = false;
  bool matches_past = false;
};

VelocityEstimate estimate_velocity(const RpcParams& params,
                                   const EvolutionConfig& cfg,
                                   std::size_t cap, std::size_t replicas,
                                   RngStream& rng, double rel_tol = 0.05);

// Solve for the first r_max jump widths of ladder B so that its crowd
// velocities match ladder A for r = 1..r_max; remaining jump widths of B
// are supplied.  Throws if the solution violates ordering or positivity.
struct MatchResult {
  std::vector<double> x_levels;
  double max_residual = 0.0;
};
MatchResult match_velocities(const RpcParams& a,
                             const std::vector<double>& q_levels_b,
                             std::size_t r_max,
                             const std::vector<double>& tail_jumps_b = {});

// Superposition with block weights (w, 1-w): atoms pooled and re-ranked,
// overlaps kept within blocks and zero across.
Rost superpose(const Rost& a, const Rost& b, double w);
LevelStructure superpose(const LevelStructure& a, const LevelStructure& b,
                         double w);

// Distribution constant of a cascade's unnormalized total mass: the total
// equals scale * S in law with S standard positive stable of index x_1.
double cascade_total_scale(const std::vector<double>& x_levels);

// Block weight w = T_a / (T_a + T_b) from independent latent totals, the
// exact law of pooling two independent unnormalized cascades.
double sample_block_weight(const RpcParams& a, const RpcParams& b,
                           RngStream& rng);

struct SuperpositionSpec {
  RpcParams block_a;
  RpcParams block_b;
  std::size_t cap = 0;
  void validate() const;
};

RostSampler make_superposition_sampler(const SuperpositionSpec& spec);

}  // namespace rost
