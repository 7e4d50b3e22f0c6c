#pragma once

// Exchangeable coalescent on a finite set of individuals whose transition
// over a time increment u coarsens the current blocks by an independent
// partition with block sizes governed by index exp(-u).  The transition is
// sampled exactly through its sequential seating representation, so block
// merge events at grid times carry no discretization error and the kernels
// compose: stepping du1 then du2 has the law of one step of du1 + du2.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "rost/cascade.hpp"
#include "rost/order_param.hpp"
#include "rost/rng.hpp"

namespace rost {

struct CoalescentState {
  double time = 0.0;
  std::vector<std::uint32_t> block_of;  // individual -> block id, dense

  std::size_t individuals() const { return block_of.size(); }
  std::size_t block_count() const;
};

CoalescentState make_singletons(std::size_t m);

// One exact transition of width du (du = 0 is the identity).
void semigroup_step(CoalescentState& state, double du, RngStream& rng);

// Probability that two fixed individuals share a block at time u.
double pair_merge_prob(double u);

// Runs from singletons, stepping through the sorted union of the given
// checkpoint times and (when du is finite) the multiples of du below the
// largest checkpoint, and snapshots the partition at every checkpoint.
struct CoalescentRun {
  std::vector<double> times;  // ascending, deduplicated
  std::vector<std::vector<std::uint32_t>> blocks;
  std::vector<std::size_t> block_counts;
};

CoalescentRun run_coalescent(std::size_t m, double du,
                             const std::vector<double>& checkpoints,
                             RngStream& rng);

// Distinct overlap values of an order parameter together with the merge
// times at which a pair's overlap climbs past each value: a pair reaches
// at least values[t] exactly when its merge time is at most
// thresholds[t-1] = ln(zeta / x_t).
struct LadderThresholds {
  std::vector<double> values;      // strictly increasing, size K
  std::vector<double> thresholds;  // strictly decreasing, size K-1
};

LadderThresholds ladder_thresholds(const OrderParam& op);

// Cascade over the ladder of the given order parameter, built by running
// the coalescent on m mass atoms of index zeta and reading the overlap of
// a pair from its merge time: overlap(i,j) = q(zeta * exp(-tau_ij)).
// Group arrays are the partitions at the level-crossing times
// ln(zeta / x_l); with the default du the run steps straight between them.
LevelStructure build_continuous_structure(
    const OrderParam& op, std::size_t m, RngStream& rng,
    double du = std::numeric_limits<double>::infinity());

RostSampler make_continuous_sampler(const OrderParam& op, std::size_t m);

}  // namespace rost
