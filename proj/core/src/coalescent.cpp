#include "rost/coalescent.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rost/errors.hpp"
#include "rost/partition.hpp"

namespace rost {

namespace {

// Fenwick tree over nonnegative weights with prefix search.
class WeightIndex {
 public:
  explicit WeightIndex(std::size_t capacity) : tree_(capacity + 1, 0.0) {
    log2_ = 0;
    while ((std::size_t{1} << (log2_ + 1)) <= capacity) ++log2_;
  }

  void add(std::size_t i, double d) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += d;
  }

  // Smallest index whose inclusive prefix sum exceeds target.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    for (std::size_t step = std::size_t{1} << log2_; step > 0; step >>= 1) {
      std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= target) {
        target -= tree_[next];
        pos = next;
      }
    }
    return pos;  // 0-based element index
  }

 private:
  std::vector<double> tree_;
  std::size_t log2_;
};

}  // namespace

std::size_t CoalescentState::block_count() const {
  std::uint32_t max_id = 0;
  for (std::uint32_t b : block_of) max_id = std::max(max_id, b);
  return block_of.empty() ? 0 : static_cast<std::size_t>(max_id) + 1;
}

CoalescentState make_singletons(std::size_t m) {
  CoalescentState s;
  s.block_of.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    s.block_of[i] = static_cast<std::uint32_t>(i);
  return s;
}

void semigroup_step(CoalescentState& state, double du, RngStream& rng) {
  if (!(du >= 0.0)) throw ValidationError("coalescent step must be >= 0");
  state.time += du;
  if (du == 0.0) return;
  const std::size_t m = state.block_count();
  if (m <= 1) return;

  // Sequential seating over the current blocks: block j joins an existing
  // cluster t with weight (size_t - alpha) or opens a new one with weight
  // (#clusters * alpha); the weights total j, the number already seated.
  const double alpha = std::exp(-du);
  WeightIndex weights(m);
  std::vector<std::uint32_t> cluster_of_block(m);
  std::size_t clusters = 0;
  for (std::size_t j = 0; j < m; ++j) {
    bool open_new = true;
    if (j > 0) {
      double u = rng.next_unit() * static_cast<double>(j);
      double new_mass = static_cast<double>(clusters) * alpha;
      if (u >= new_mass) {
        open_new = false;
        std::size_t t = std::min(weights.find(u - new_mass), clusters - 1);
        cluster_of_block[j] = static_cast<std::uint32_t>(t);
        weights.add(t, 1.0);
      }
    }
    if (open_new) {
      cluster_of_block[j] = static_cast<std::uint32_t>(clusters);
      weights.add(clusters, 1.0 - alpha);
      ++clusters;
    }
  }
  for (std::uint32_t& b : state.block_of) b = cluster_of_block[b];
}

double pair_merge_prob(double u) { return 1.0 - std::exp(-u); }

CoalescentRun run_coalescent(std::size_t m, double du,
                             const std::vector<double>& checkpoints,
                             RngStream& rng) {
  if (m == 0) throw ValidationError("coalescent needs at least one individual");
  if (!(du > 0.0)) throw ValidationError("grid width must be positive");
  std::vector<double> stops = checkpoints;
  for (double t : stops)
    if (!(t >= 0.0)) throw ValidationError("checkpoint times must be >= 0");
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  if (stops.empty()) throw ValidationError("no checkpoint times given");

  std::vector<double> grid = stops;
  if (std::isfinite(du)) {
    double last = stops.back();
    for (std::size_t k = 1; static_cast<double>(k) * du < last; ++k)
      grid.push_back(static_cast<double>(k) * du);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }

  CoalescentRun out;
  out.times = stops;
  CoalescentState state = make_singletons(m);
  std::size_t next_stop = 0;
  if (stops.front() == 0.0) {
    out.blocks.push_back(state.block_of);
    out.block_counts.push_back(state.block_count());
    ++next_stop;
  }
  double now = 0.0;
  for (double t : grid) {
    if (t == 0.0) continue;
    semigroup_step(state, t - now, rng);
    now = t;
    if (next_stop < stops.size() && stops[next_stop] == t) {
      out.blocks.push_back(state.block_of);
      out.block_counts.push_back(state.block_count());
      ++next_stop;
    }
  }
  return out;
}

LadderThresholds ladder_thresholds(const OrderParam& op) {
  // Canonical ladder: strictly increasing overlap values with, for each,
  // the largest x-breakpoint at which that value is left behind.
  const double zeta = op.zeta();
  LadderThresholds out;
  std::vector<double> upper_break;
  for (std::size_t l = 0; l < op.levels(); ++l) {
    if (!out.values.empty() && op.q_values()[l] == out.values.back()) {
      upper_break.back() = op.x_breaks()[l];
    } else {
      out.values.push_back(op.q_values()[l]);
      upper_break.push_back(op.x_breaks()[l]);
    }
  }
  for (std::size_t t = 1; t < out.values.size(); ++t)
    out.thresholds.push_back(std::log(zeta / upper_break[t - 1]));
  return out;
}

LevelStructure build_continuous_structure(const OrderParam& op, std::size_t m,
                                          RngStream& rng, double du) {
  if (m == 0) throw ValidationError("cascade needs at least one atom");
  const double zeta = op.zeta();
  LadderThresholds ladder = ladder_thresholds(op);
  const std::size_t k = ladder.values.size();

  MassPartition pd = sample_pd({zeta}, m, rng);
  LevelStructure out;
  out.q_levels = ladder.values;
  out.atoms = std::move(pd.atoms);
  out.residual_mass = pd.residual_mass;
  if (k == 1) return out;

  // Pairs share ladder level >= t+1 exactly when their merge time is at
  // most ln(zeta / x_t), so the group array for that level is the
  // partition at that time.  Deeper levels have earlier thresholds.
  const std::vector<double>& thresholds = ladder.thresholds;
  CoalescentRun run = run_coalescent(m, du, thresholds, rng);

  out.groups.resize(k - 1);
  for (std::size_t t = 1; t < k; ++t) {
    double want = thresholds[t - 1];
    auto it = std::lower_bound(run.times.begin(), run.times.end(), want);
    out.groups[t - 1] = run.blocks[static_cast<std::size_t>(
        it - run.times.begin())];
  }
  return out;
}

RostSampler make_continuous_sampler(const OrderParam& op, std::size_t m) {
  return {"continuous-cascade", [op, m](RngStream& rng) {
            return build_continuous_structure(op, m, rng);
          }};
}

}  // namespace rost
