#pragma once

// Hierarchical cascades over a finite overlap ladder: direct tree
// construction, recursive construction with iid marks, and the shared
// level-structure carrier that records, for every retained atom, its
// ancestry group at each ladder level.  Pair statistics (level masses,
// overlap events, empirical order parameters) are computed from group
// aggregates rather than explicit pair loops wherever possible.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rost/order_param.hpp"
#include "rost/overlap.hpp"
#include "rost/partition.hpp"
#include "rost/rng.hpp"

namespace rost {

struct RpcParams {
  // Ladder 0 <= q_1 < ... < q_k < 1 and weights 0 < x_1 < ... < x_k < 1.
  std::vector<double> q_levels;
  std::vector<double> x_levels;

  std::size_t levels() const { return q_levels.size(); }
  double zeta() const { return x_levels.back(); }
  OrderParam order_param() const { return OrderParam(x_levels, q_levels); }
  void validate() const;
};

// Atoms of a hierarchical partition plus, for each atom, the id of its
// ancestor group at ladder levels 1..K-1 (groups[t] covers level t+1).
// Two distinct atoms sharing the group id at index t share it at every
// smaller index; their overlap is q_levels[L] where L is the deepest
// matching index + 1, or q_levels[0] if none match.  Diagonal overlap is 1.
struct LevelStructure {
  std::vector<double> q_levels;
  std::vector<double> atoms;  // nonincreasing, sum + residual_mass ~ 1
  double residual_mass = 0.0;
  std::vector<std::vector<std::uint32_t>> groups;

  std::size_t size() const { return atoms.size(); }
  std::size_t levels() const { return q_levels.size(); }

  // Deepest ladder level shared by atoms i and j: K for i == j, otherwise
  // a value in 0..K-1 (0 means only the root is shared).
  std::size_t overlap_level(std::size_t i, std::size_t j) const;
  double overlap(std::size_t i, std::size_t j) const {
    return i == j ? 1.0 : q_levels[overlap_level(i, j)];
  }

  // masses[l] = sum_{i != j} xi_i xi_j over pairs at ladder level l for
  // l < K; masses[K] = sum_i xi_i^2.  Computed from group mass aggregates.
  std::vector<double> level_pair_masses() const;

  Rost to_rost(std::size_t n) const;
  LevelStructure top(std::size_t n) const;
  void validate() const;
};

// Two indices drawn independently with probability proportional to atom
// mass (the retained part; the unresolved residual is excluded).
std::pair<std::size_t, std::size_t> size_biased_pair(const LevelStructure& s,
                                                     RngStream& rng);

// Direct construction: a depth-K tree where every node at depth l carries
// `per_node_cap` points of the power-law point process with index
// x_{l+1}, and a leaf's weight is the product of the points along its
// path, normalized over all retained leaves.
struct GenealogySample {
  RpcParams params;
  std::size_t per_node_cap = 0;
  // node_atoms[l] holds the atoms of all depth-l nodes concatenated; node
  // j owns the slice [j*cap, (j+1)*cap), in nonincreasing order.
  std::vector<std::vector<double>> node_atoms;
  std::vector<double> leaf_weights;  // lexicographic leaf order, sums to 1
  double normalization = 0.0;        // sum of retained leaf products
  double max_node_discard = 0.0;     // worst per-node relative tail bound
};

GenealogySample build_rpc(const RpcParams& params, std::size_t per_node_cap,
                          RngStream& rng, std::size_t leaf_budget = 1u << 21);

// Level pair masses of the full retained tree, same layout as
// LevelStructure::level_pair_masses.
std::vector<double> genealogy_level_masses(const GenealogySample& sample);

// Top-n leaves by weight (ties by lexicographic leaf order).
LevelStructure from_genealogy(const GenealogySample& sample, std::size_t n);
Rost overlaps_from_genealogy(const GenealogySample& sample, std::size_t n);

// Recursive construction: atoms from the deepest weight x_k, marked by an
// independently built (K-1)-level cascade with rescaled parameters.  Atom
// order is the mass order of the deepest partition, so atoms arrive
// sorted.  Exact in law, runs in O(cap * K).
LevelStructure sample_cascade_recursive(const RpcParams& params,
                                        std::size_t cap, RngStream& rng);
Rost build_rpc_recursive(const RpcParams& params, std::size_t cap,
                         std::size_t n, RngStream& rng);

// Empirical order parameter: mean and standard error across replicas of
// x_hat(q) = sum_{i,j} xi_i xi_j 1{q_ij <= q} on a fixed evaluation grid.
struct OrderParamEstimate {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::size_t replicas = 0;
};

class OrderParamAccumulator {
 public:
  explicit OrderParamAccumulator(std::vector<double> grid);
  void add(const LevelStructure& s);
  void add(const Rost& r);
  OrderParamEstimate finalize() const;
  void merge(const OrderParamAccumulator& other);

 private:
  void add_row(const std::vector<double>& values,
               const std::vector<double>& weights);
  std::vector<double> grid_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::size_t count_ = 0;
};

OrderParamEstimate empirical_order_param(const std::vector<Rost>& samples,
                                         const std::vector<double>& grid);

// Evaluation points placed strictly inside each constancy interval of
// x(q), avoiding the jump locations where the inverse is ambiguous.
std::vector<double> comparison_grid(const OrderParam& op,
                                    std::size_t per_interval);

// Probability that some pair among the n heaviest atoms overlaps at the
// given ladder level (0-based), with the distribution-free bracket
// [dx, n(n-1)/(2 zeta) * dx] where dx = x_{level+1} - x_{level}.
struct EventProbEstimate {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
  std::size_t level = 0;
  std::size_t replicas = 0;
  bool within_bounds = false;
};

EventProbEstimate overlap_event_prob(const RpcParams& params, std::size_t n,
                                     std::size_t level, std::size_t cap,
                                     std::size_t replicas, RngStream& rng);

// Conditional law of the ladder level of a size-biased pair given the two
// draws are distinct: exactly (x_{l+1} - x_l) / zeta per level.
struct PairLevelEstimate {
  std::vector<double> p_hat;
  std::vector<double> stderr_;
  std::vector<double> expected;
  std::size_t accepted = 0;
  std::size_t replicas = 0;
};

PairLevelEstimate size_biased_level_probs(const RpcParams& params,
                                          std::size_t cap,
                                          std::size_t replicas,
                                          RngStream& rng);

// Named sampler handle shared by the statistical test drivers.
struct RostSampler {
  std::string name;
  std::function<LevelStructure(RngStream&)> draw;
};

RostSampler make_cascade_sampler(const RpcParams& params, std::size_t cap);
// Deliberately non-invariant control model: the sampled genealogy keeps
// its group structure but the atom masses are replaced by the fixed
// sequence (i+1)^-power, renormalized.  Raising the atoms to a power
// would not do here: that maps a cascade of weights x to one of weights
// x / power in law, which is again a fixed point of the evolution.
RostSampler make_perturbed_cascade_sampler(const RpcParams& params,
                                           std::size_t cap, double power);

}  // namespace rost
