#pragma once

// Poisson-Dirichlet mass partitions PD(x,0) and the power-law Poisson
// process they are built from.
//
// The generator of the family is the Poisson point process on (0,inf) with
// intensity x * s^(-x-1) ds, 0 < x < 1.  Its atoms in decreasing order are
// G_i^(-1/x) where G_1 < G_2 < ... are the arrival times of a unit-rate
// Poisson process, which is how we sample the top of the process exactly.
// Normalizing the atoms by the total mass gives PD(x,0).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rost/rng.hpp"

namespace rost {

struct PdParams {
  double x = 0.5;  // stability index, in (0,1)

  void validate() const;
};

// Finitely many leading atoms of a normalized mass partition.
struct MassPartition {
  std::vector<double> atoms;   // nonincreasing, nonnegative
  double residual_mass = 0.0;  // estimated mass beyond the retained atoms

  std::size_t size() const { return atoms.size(); }
  double retained_mass() const;
  void validate() const;  // atoms sorted, retained + residual within 1 +- 1e-9
};

// Unnormalized top of the power-law process.
struct PowerLawSample {
  std::vector<double> atoms;      // strictly decreasing a.s.
  double discarded_bound = 0.0;   // E[mass below atoms.back() | atoms.back()]
};

// Top `cap` atoms of the Poisson process with intensity x s^(-x-1) ds.
// cap == 0 yields no atoms and an infinite discarded-mass bound (the process
// has infinite expected total mass).
PowerLawSample sample_power_law_ppp(const PdParams& params, std::size_t cap,
                                    RngStream& rng);

// PD(x,0) truncated to the top `cap` atoms.  Atoms are normalized by
// retained mass plus the discarded-mass bound, so retained + residual == 1
// up to rounding.  cap must be positive.
MassPartition sample_pd(const PdParams& params, std::size_t cap,
                        RngStream& rng);

// E sum_m gamma_m^n for gamma ~ PD(x,0):  prod_{j=1}^{n-1} (j - x) / (n-1)!
// Requires an integer n >= 2.
double pd_moment_exact(double x, int n);

struct MomentEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  // Mean over samples of the bound residual_mass * a_min^(n-1) on the
  // contribution the discarded atoms could have made to sum xi^n.
  double truncation_bound = 0.0;
  std::size_t samples = 0;
};

// Monte Carlo estimate of E sum_i xi_i^n from sampled partitions.
MomentEstimate estimate_partition_moment(
    const std::vector<MassPartition>& samples, int n);

}  // namespace rost
