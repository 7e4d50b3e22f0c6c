#include "rost/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "rost/errors.hpp"

namespace rost {

void RpcParams::validate() const {
  if (q_levels.empty() || q_levels.size() != x_levels.size())
    throw ValidationError("cascade needs matching, nonempty level vectors");
  double prev_q = -1.0;
  for (double q : q_levels) {
    if (!(q >= 0.0) || !(q < 1.0) || !(q > prev_q))
      throw ValidationError(
          "cascade overlap levels must be strictly increasing in [0,1)");
    prev_q = q;
  }
  double prev_x = 0.0;
  for (double x : x_levels) {
    if (!(x > prev_x) || !(x < 1.0))
      throw ValidationError(
          "cascade weights must be strictly increasing in (0,1)");
    prev_x = x;
  }
}

std::size_t LevelStructure::overlap_level(std::size_t i, std::size_t j) const {
  if (i == j) return levels();
  for (std::size_t t = groups.size(); t > 0; --t)
    if (groups[t - 1][i] == groups[t - 1][j]) return t;
  return 0;
}

namespace {

// Sum of squared group masses for one id array; ids need not be dense.
double squared_group_mass(const std::vector<std::uint32_t>& ids,
                          const std::vector<double>& w) {
  std::uint32_t max_id = 0;
  for (std::uint32_t id : ids) max_id = std::max(max_id, id);
  double total = 0.0;
  if (static_cast<std::size_t>(max_id) < 4 * ids.size() + 16) {
    std::vector<double> acc(max_id + 1, 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) acc[ids[i]] += w[i];
    for (double m : acc) total += m * m;
  } else {
    std::unordered_map<std::uint32_t, double> acc;
    acc.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) acc[ids[i]] += w[i];
    for (const auto& [id, m] : acc) total += m * m;
  }
  return total;
}

}  // namespace

std::vector<double> LevelStructure::level_pair_masses() const {
  const std::size_t k = levels();
  std::vector<double> a(k + 1, 0.0);
  double sum = std::accumulate(atoms.begin(), atoms.end(), 0.0);
  a[0] = sum * sum;
  for (std::size_t t = 1; t < k; ++t)
    a[t] = squared_group_mass(groups[t - 1], atoms);
  for (double m : atoms) a[k] += m * m;
  std::vector<double> masses(k + 1, 0.0);
  for (std::size_t l = 0; l < k; ++l)
    masses[l] = std::max(0.0, a[l] - a[l + 1]);
  masses[k] = a[k];
  return masses;
}

Rost LevelStructure::to_rost(std::size_t n) const {
  n = std::min(n, size());
  Rost out;
  out.masses.atoms.assign(atoms.begin(), atoms.begin() + n);
  double sum = std::accumulate(out.masses.atoms.begin(),
                               out.masses.atoms.end(), 0.0);
  out.masses.residual_mass = std::max(0.0, 1.0 - sum);
  out.overlaps = OverlapMatrix(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      out.overlaps.set(i, j, overlap(i, j));
  return out;
}

LevelStructure LevelStructure::top(std::size_t n) const {
  n = std::min(n, size());
  LevelStructure out;
  out.q_levels = q_levels;
  out.atoms.assign(atoms.begin(), atoms.begin() + n);
  double sum = std::accumulate(out.atoms.begin(), out.atoms.end(), 0.0);
  out.residual_mass = std::max(0.0, 1.0 - sum);
  out.groups.reserve(groups.size());
  for (const auto& g : groups)
    out.groups.emplace_back(g.begin(), g.begin() + n);
  return out;
}

void LevelStructure::validate() const {
  if (q_levels.empty())
    throw ValidationError("level structure needs at least one ladder level");
  double prev_q = -1.0;
  for (double q : q_levels) {
    if (!(q >= 0.0) || !(q < 1.0) || !(q > prev_q))
      throw ValidationError(
          "level structure ladder must be strictly increasing in [0,1)");
    prev_q = q;
  }
  if (groups.size() + 1 != levels())
    throw ValidationError("level structure needs one group array per "
                          "ladder level past the first");
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  for (double m : atoms) {
    if (!(m >= 0.0) || m > prev)
      throw ValidationError("atoms must be nonnegative and nonincreasing");
    prev = m;
    sum += m;
  }
  if (residual_mass < 0.0 || std::abs(sum + residual_mass - 1.0) > 1e-6)
    throw ValidationError("atoms plus residual must carry unit mass");
  for (const auto& g : groups)
    if (g.size() != atoms.size())
      throw ValidationError("group array size must match atom count");
  // Nesting: the id at a deeper level determines the id one level up.
  for (std::size_t t = 1; t < groups.size(); ++t) {
    std::unordered_map<std::uint32_t, std::uint32_t> up;
    up.reserve(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      auto [it, inserted] = up.emplace(groups[t][i], groups[t - 1][i]);
      if (!inserted && it->second != groups[t - 1][i])
        throw ValidationError("group ids are not hierarchically nested");
    }
  }
}

std::pair<std::size_t, std::size_t> size_biased_pair(const LevelStructure& s,
                                                     RngStream& rng) {
  if (s.size() == 0)
    throw ValidationError("size-biased draw from an empty structure");
  std::vector<double> cum(s.size());
  std::partial_sum(s.atoms.begin(), s.atoms.end(), cum.begin());
  auto draw = [&]() -> std::size_t {
    double u = rng.next_unit() * cum.back();
    return static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  };
  std::size_t i = std::min(draw(), s.size() - 1);
  std::size_t j = std::min(draw(), s.size() - 1);
  return {i, j};
}

GenealogySample build_rpc(const RpcParams& params, std::size_t per_node_cap,
                          RngStream& rng, std::size_t leaf_budget) {
  params.validate();
  if (per_node_cap == 0)
    throw ValidationError("tree construction needs a positive per-node cap");
  const std::size_t k = params.levels();
  std::size_t leaves = 1;
  for (std::size_t l = 0; l < k; ++l) {
    if (leaves > leaf_budget / per_node_cap)
      throw ValidationError("leaf count exceeds the tree budget");
    leaves *= per_node_cap;
  }

  GenealogySample out;
  out.params = params;
  out.per_node_cap = per_node_cap;
  out.node_atoms.resize(k);
  std::size_t count = 1;
  for (std::size_t l = 0; l < k; ++l) {
    out.node_atoms[l].reserve(count * per_node_cap);
    for (std::size_t node = 0; node < count; ++node) {
      PowerLawSample s =
          sample_power_law_ppp({params.x_levels[l]}, per_node_cap, rng);
      double retained =
          std::accumulate(s.atoms.begin(), s.atoms.end(), 0.0);
      out.max_node_discard =
          std::max(out.max_node_discard,
                   s.discarded_bound / (retained + s.discarded_bound));
      out.node_atoms[l].insert(out.node_atoms[l].end(), s.atoms.begin(),
                               s.atoms.end());
    }
    count *= per_node_cap;
  }

  std::vector<double> w = out.node_atoms[0];
  for (std::size_t l = 1; l < k; ++l) {
    std::vector<double> next(w.size() * per_node_cap);
    for (std::size_t j = 0; j < w.size(); ++j)
      for (std::size_t c = 0; c < per_node_cap; ++c)
        next[j * per_node_cap + c] = w[j] * out.node_atoms[l][j * per_node_cap + c];
    w = std::move(next);
  }
  out.normalization = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(out.normalization > 0.0))
    throw NumericError("tree construction produced zero total weight",
                       out.normalization);
  for (double& v : w) v /= out.normalization;
  out.leaf_weights = std::move(w);
  return out;
}

std::vector<double> genealogy_level_masses(const GenealogySample& sample) {
  const std::size_t k = sample.params.levels();
  const std::size_t cap = sample.per_node_cap;
  const auto& w = sample.leaf_weights;
  std::vector<double> a(k + 1, 0.0);
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  a[0] = sum * sum;
  std::size_t stride = w.size();
  for (std::size_t t = 1; t < k; ++t) {
    stride /= cap;
    double total = 0.0;
    for (std::size_t start = 0; start < w.size(); start += stride) {
      double m = std::accumulate(w.begin() + start,
                                 w.begin() + start + stride, 0.0);
      total += m * m;
    }
    a[t] = total;
  }
  for (double v : w) a[k] += v * v;
  std::vector<double> masses(k + 1, 0.0);
  for (std::size_t l = 0; l < k; ++l)
    masses[l] = std::max(0.0, a[l] - a[l + 1]);
  masses[k] = a[k];
  return masses;
}

LevelStructure from_genealogy(const GenealogySample& sample, std::size_t n) {
  const std::size_t k = sample.params.levels();
  const std::size_t cap = sample.per_node_cap;
  const auto& w = sample.leaf_weights;
  n = std::min(n, w.size());
  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto heavier = [&](std::size_t a, std::size_t b) {
    return w[a] != w[b] ? w[a] > w[b] : a < b;
  };
  if (n < idx.size())
    std::nth_element(idx.begin(), idx.begin() + n, idx.end(), heavier);
  std::sort(idx.begin(), idx.begin() + n, heavier);
  idx.resize(n);

  LevelStructure out;
  out.q_levels = sample.params.q_levels;
  out.atoms.reserve(n);
  for (std::size_t i : idx) out.atoms.push_back(w[i]);
  double sum = std::accumulate(out.atoms.begin(), out.atoms.end(), 0.0);
  out.residual_mass = std::max(0.0, 1.0 - sum);
  out.groups.assign(k > 0 ? k - 1 : 0, {});
  std::size_t stride = w.size();
  for (std::size_t t = 1; t < k; ++t) {
    stride /= cap;
    std::unordered_map<std::size_t, std::uint32_t> dense;
    auto& g = out.groups[t - 1];
    g.reserve(n);
    for (std::size_t i : idx) {
      auto [it, _] = dense.emplace(i / stride,
                                   static_cast<std::uint32_t>(dense.size()));
      g.push_back(it->second);
    }
  }
  return out;
}

Rost overlaps_from_genealogy(const GenealogySample& sample, std::size_t n) {
  return from_genealogy(sample, n).to_rost(n);
}

LevelStructure sample_cascade_recursive(const RpcParams& params,
                                        std::size_t cap, RngStream& rng) {
  params.validate();
  if (cap == 0)
    throw ValidationError("recursive construction needs a positive cap");
  const std::size_t k = params.levels();
  if (k == 1) {
    MassPartition pd = sample_pd({params.x_levels[0]}, cap, rng);
    LevelStructure out;
    out.q_levels = params.q_levels;
    out.atoms = std::move(pd.atoms);
    out.residual_mass = pd.residual_mass;
    return out;
  }

  RpcParams coarse;
  const double q_deep = params.q_levels[k - 1];
  const double x_deep = params.x_levels[k - 1];
  for (std::size_t l = 0; l + 1 < k; ++l) {
    coarse.q_levels.push_back(q_deep > 0.0 ? params.q_levels[l] / q_deep
                                           : params.q_levels[l]);
    coarse.x_levels.push_back(params.x_levels[l] / x_deep);
  }
  LevelStructure sub = sample_cascade_recursive(coarse, cap, rng);

  MassPartition pd = sample_pd({x_deep}, cap, rng);
  std::vector<double> cum(sub.atoms.size());
  std::partial_sum(sub.atoms.begin(), sub.atoms.end(), cum.begin());

  LevelStructure out;
  out.q_levels = params.q_levels;
  out.atoms = std::move(pd.atoms);
  out.residual_mass = pd.residual_mass;
  out.groups.assign(k - 1, {});
  std::vector<std::uint32_t> marks(out.atoms.size());
  for (auto& m : marks) {
    double u = rng.next_unit() * cum.back();
    m = static_cast<std::uint32_t>(
        std::min<std::ptrdiff_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin(),
            static_cast<std::ptrdiff_t>(cum.size()) - 1));
  }
  for (std::size_t t = 0; t + 1 < k - 1; ++t) {
    out.groups[t].reserve(marks.size());
    for (std::uint32_t m : marks) out.groups[t].push_back(sub.groups[t][m]);
  }
  out.groups[k - 2] = std::move(marks);
  return out;
}

Rost build_rpc_recursive(const RpcParams& params, std::size_t cap,
                         std::size_t n, RngStream& rng) {
  return sample_cascade_recursive(params, cap, rng).to_rost(n);
}

OrderParamAccumulator::OrderParamAccumulator(std::vector<double> grid)
    : grid_(std::move(grid)),
      sum_(grid_.size(), 0.0),
      sum_sq_(grid_.size(), 0.0) {
  if (!std::is_sorted(grid_.begin(), grid_.end()))
    throw ValidationError("evaluation grid must be sorted ascending");
}

void OrderParamAccumulator::add_row(const std::vector<double>& values,
                                    const std::vector<double>& weights) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::size_t pos = 0;
  double running = 0.0;
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    while (pos < order.size() && values[order[pos]] <= grid_[g])
      running += weights[order[pos++]];
    sum_[g] += running;
    sum_sq_[g] += running * running;
  }
  ++count_;
}

void OrderParamAccumulator::add(const LevelStructure& s) {
  std::vector<double> values = s.q_levels;
  values.push_back(1.0);
  add_row(values, s.level_pair_masses());
}

void OrderParamAccumulator::add(const Rost& r) {
  const std::size_t n = r.masses.size();
  std::vector<double> values, weights;
  values.reserve(n * n);
  weights.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      values.push_back(r.overlaps(i, j));
      weights.push_back(r.masses.atoms[i] * r.masses.atoms[j]);
    }
  add_row(values, weights);
}

void OrderParamAccumulator::merge(const OrderParamAccumulator& other) {
  if (other.grid_ != grid_)
    throw ValidationError("cannot merge accumulators on different grids");
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    sum_[g] += other.sum_[g];
    sum_sq_[g] += other.sum_sq_[g];
  }
  count_ += other.count_;
}

OrderParamEstimate OrderParamAccumulator::finalize() const {
  if (count_ == 0) throw ValidationError("no replicas accumulated");
  OrderParamEstimate out;
  out.grid = grid_;
  out.replicas = count_;
  out.mean.resize(grid_.size());
  out.stderr_.resize(grid_.size());
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    double mean = sum_[g] / static_cast<double>(count_);
    out.mean[g] = mean;
    if (count_ > 1) {
      double var = (sum_sq_[g] - static_cast<double>(count_) * mean * mean) /
                   static_cast<double>(count_ - 1);
      out.stderr_[g] = std::sqrt(std::max(0.0, var) /
                                 static_cast<double>(count_));
    } else {
      out.stderr_[g] = 0.0;
    }
  }
  return out;
}

OrderParamEstimate empirical_order_param(const std::vector<Rost>& samples,
                                         const std::vector<double>& grid) {
  OrderParamAccumulator acc(grid);
  for (const Rost& r : samples) acc.add(r);
  return acc.finalize();
}

std::vector<double> comparison_grid(const OrderParam& op,
                                    std::size_t per_interval) {
  std::vector<double> cuts{0.0};
  for (double q : op.q_values())
    if (q > cuts.back()) cuts.push_back(q);
  cuts.push_back(1.0);
  std::vector<double> grid;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    for (std::size_t j = 0; j < per_interval; ++j)
      grid.push_back(a + (b - a) * (static_cast<double>(j) + 0.5) /
                             static_cast<double>(per_interval));
  }
  grid.push_back(1.0);
  return grid;
}

EventProbEstimate overlap_event_prob(const RpcParams& params, std::size_t n,
                                     std::size_t level, std::size_t cap,
                                     std::size_t replicas, RngStream& rng) {
  params.validate();
  if (n < 2) throw ValidationError("overlap events need at least two atoms");
  if (level >= params.levels())
    throw ValidationError("overlap event level out of range");
  if (cap < n)
    throw ValidationError("cap must retain at least the inspected atoms");
  std::size_t hits = 0;
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    LevelStructure s = sample_cascade_recursive(params, cap, rng);
    bool hit = false;
    for (std::size_t i = 0; i < n && !hit; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (s.overlap_level(i, j) == level) {
          hit = true;
          break;
        }
    hits += hit ? 1u : 0u;
  }
  EventProbEstimate out;
  out.n = n;
  out.level = level;
  out.replicas = replicas;
  out.p_hat = static_cast<double>(hits) / static_cast<double>(replicas);
  out.stderr_ = std::sqrt(out.p_hat * (1.0 - out.p_hat) /
                          static_cast<double>(replicas));
  double dx = params.x_levels[level] -
              (level > 0 ? params.x_levels[level - 1] : 0.0);
  out.lower = dx;
  out.upper = std::min(1.0, static_cast<double>(n) *
                                static_cast<double>(n - 1) * dx /
                                (2.0 * params.zeta()));
  out.within_bounds = out.p_hat >= out.lower - 3.0 * out.stderr_ &&
                      out.p_hat <= out.upper + 3.0 * out.stderr_;
  return out;
}

PairLevelEstimate size_biased_level_probs(const RpcParams& params,
                                          std::size_t cap,
                                          std::size_t replicas,
                                          RngStream& rng) {
  params.validate();
  const std::size_t k = params.levels();
  std::vector<std::size_t> counts(k, 0);
  std::size_t accepted = 0;
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    LevelStructure s = sample_cascade_recursive(params, cap, rng);
    auto [i, j] = size_biased_pair(s, rng);
    if (i == j) continue;
    ++accepted;
    ++counts[s.overlap_level(i, j)];
  }
  PairLevelEstimate out;
  out.replicas = replicas;
  out.accepted = accepted;
  out.p_hat.resize(k);
  out.stderr_.resize(k);
  out.expected.resize(k);
  for (std::size_t l = 0; l < k; ++l) {
    double p = accepted > 0
                   ? static_cast<double>(counts[l]) /
                         static_cast<double>(accepted)
                   : 0.0;
    out.p_hat[l] = p;
    out.stderr_[l] =
        accepted > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(accepted))
                     : 0.0;
    double dx = params.x_levels[l] - (l > 0 ? params.x_levels[l - 1] : 0.0);
    out.expected[l] = dx / params.zeta();
  }
  return out;
}

RostSampler make_cascade_sampler(const RpcParams& params, std::size_t cap) {
  params.validate();
  return {"cascade",
          [params, cap](RngStream& rng) {
            return sample_cascade_recursive(params, cap, rng);
          }};
}

RostSampler make_perturbed_cascade_sampler(const RpcParams& params,
                                           std::size_t cap, double power) {
  params.validate();
  if (!(power > 0.0))
    throw ValidationError("perturbation power must be positive");
  return {"cascade-perturbed",
          [params, cap, power](RngStream& rng) {
            LevelStructure s = sample_cascade_recursive(params, cap, rng);
            double sum = 0.0;
            for (std::size_t i = 0; i < s.atoms.size(); ++i) {
              s.atoms[i] = std::pow(static_cast<double>(i + 1), -power);
              sum += s.atoms[i];
            }
            for (double& a : s.atoms) a /= sum;
            s.residual_mass = 0.0;
            return s;
          }};
}

}  // namespace rost
