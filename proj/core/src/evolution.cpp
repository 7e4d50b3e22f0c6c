#include "rost/evolution.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "rost/errors.hpp"

namespace rost {

double psi_value(Psi psi, double x) {
  switch (psi) {
    case Psi::linear:
      return x;
  }
  throw ValidationError("unknown reweighting function");
}

void EvolutionConfig::validate() const {
  if (r < 1) throw ValidationError("correlation power r must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ValidationError("reweighting strength must be finite and >= 0");
}

namespace {

double clamped_pow(double q, int r) {
  return std::max(0.0, std::pow(q, r));
}

std::uint32_t max_id(const std::vector<std::uint32_t>& ids) {
  std::uint32_t m = 0;
  for (std::uint32_t id : ids) m = std::max(m, id);
  return m;
}

}  // namespace

std::vector<double> sample_increments(const LevelStructure& s, int r,
                                      RngStream& rng) {
  if (r < 1) throw ValidationError("correlation power r must be >= 1");
  const std::size_t n = s.size();
  const std::size_t k = s.levels();
  std::vector<double> kappa(n, 0.0);
  if (n == 0) return kappa;

  double var_root = clamped_pow(s.q_levels[0], r);
  if (var_root > 0.0) {
    double z = rng.next_normal() * std::sqrt(var_root);
    for (double& v : kappa) v += z;
  }
  for (std::size_t t = 0; t + 1 < k; ++t) {
    double dv = clamped_pow(s.q_levels[t + 1], r) -
                clamped_pow(s.q_levels[t], r);
    dv = std::max(0.0, dv);
    const auto& ids = s.groups[t];
    std::vector<double> z(static_cast<std::size_t>(max_id(ids)) + 1);
    for (double& v : z) v = rng.next_normal();
    double sd = std::sqrt(dv);
    for (std::size_t i = 0; i < n; ++i) kappa[i] += sd * z[ids[i]];
  }
  double var_leaf = std::max(0.0, 1.0 - clamped_pow(s.q_levels[k - 1], r));
  double sd = std::sqrt(var_leaf);
  for (std::size_t i = 0; i < n; ++i) kappa[i] += sd * rng.next_normal();
  return kappa;
}

std::vector<double> sample_increments(const OverlapMatrix& q, int r,
                                      RngStream& rng) {
  if (r < 1) throw ValidationError("correlation power r must be >= 1");
  const std::size_t n = q.size();
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          r == 1 ? q(i, j) : std::pow(q(i, j), r);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed", 0.0);
  double min_eig = n > 0 ? solver.eigenvalues().minCoeff() : 0.0;
  if (min_eig < -kPsdTol)
    throw NumericError("correlation matrix is not positive semidefinite",
                       min_eig);
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i)
    z(static_cast<Eigen::Index>(i)) = rng.next_normal();
  Eigen::VectorXd scaled =
      solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z;
  Eigen::VectorXd kappa = solver.eigenvectors() * scaled;
  return {kappa.data(), kappa.data() + n};
}

EvolveResult reweight_ranked(const std::vector<double>& masses,
                             const std::vector<double>& kappa, double lambda,
                             Psi psi) {
  if (masses.size() != kappa.size())
    throw ValidationError("mass and increment vectors must match in size");
  const std::size_t n = masses.size();
  EvolveResult out;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), 0);
  bool all_zero = true;
  for (double m : masses) {
    if (m < 0.0) throw ValidationError("masses must be nonnegative");
    if (m > 0.0) all_zero = false;
  }
  if (all_zero) {
    out.masses = masses;
    out.log_total = -std::numeric_limits<double>::infinity();
    return out;
  }

  std::vector<double> logw(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = masses[i] > 0.0
                  ? std::log(masses[i]) + lambda * psi_value(psi, kappa[i])
                  : -std::numeric_limits<double>::infinity();
    top = std::max(top, logw[i]);
  }
  double total = 0.0;
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(logw[i] - top);
    total += w[i];
  }
  out.log_total = top + std::log(total);
  std::sort(out.order.begin(), out.order.end(),
            [&](std::size_t a, std::size_t b) {
              return w[a] != w[b] ? w[a] > w[b] : a < b;
            });
  out.masses.resize(n);
  for (std::size_t rank = 0; rank < n; ++rank)
    out.masses[rank] = w[out.order[rank]] / total;
  return out;
}

Rost evolve(const Rost& state, const std::vector<double>& kappa,
            const EvolutionConfig& cfg) {
  cfg.validate();
  if (kappa.size() != state.masses.size())
    throw ValidationError("increment vector size must match atom count");
  EvolveResult res =
      reweight_ranked(state.masses.atoms, kappa, cfg.lambda, cfg.psi);
  Rost out;
  out.masses.atoms = res.masses;
  out.masses.residual_mass = 0.0;
  const std::size_t n = kappa.size();
  out.overlaps = OverlapMatrix(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      out.overlaps.set(i, j, state.overlaps(res.order[i], res.order[j]));
  return out;
}

LevelStructure evolve(const LevelStructure& state,
                      const std::vector<double>& kappa,
                      const EvolutionConfig& cfg) {
  cfg.validate();
  if (kappa.size() != state.size())
    throw ValidationError("increment vector size must match atom count");
  EvolveResult res =
      reweight_ranked(state.atoms, kappa, cfg.lambda, cfg.psi);
  LevelStructure out;
  out.q_levels = state.q_levels;
  out.atoms = res.masses;
  out.residual_mass = 0.0;
  out.groups.resize(state.groups.size());
  for (std::size_t t = 0; t < state.groups.size(); ++t) {
    out.groups[t].resize(state.size());
    for (std::size_t rank = 0; rank < state.size(); ++rank)
      out.groups[t][rank] = state.groups[t][res.order[rank]];
  }
  return out;
}

PhiResult phi(const LevelStructure& state, const EvolutionConfig& cfg,
              RngStream& rng) {
  cfg.validate();
  std::vector<double> kappa = sample_increments(state, cfg.r, rng);
  EvolveResult res =
      reweight_ranked(state.atoms, kappa, cfg.lambda, cfg.psi);
  PhiResult out;
  out.log_total = res.log_total;
  out.state.q_levels = state.q_levels;
  out.state.atoms = std::move(res.masses);
  out.state.residual_mass = 0.0;
  out.state.groups.resize(state.groups.size());
  for (std::size_t t = 0; t < state.groups.size(); ++t) {
    out.state.groups[t].resize(state.size());
    for (std::size_t rank = 0; rank < state.size(); ++rank)
      out.state.groups[t][rank] = state.groups[t][res.order[rank]];
  }
  return out;
}

PhiRostResult phi_rost(const Rost& state, const EvolutionConfig& cfg,
                       RngStream& rng) {
  cfg.validate();
  std::vector<double> kappa = sample_increments(state.overlaps, cfg.r, rng);
  PhiRostResult out;
  EvolveResult res =
      reweight_ranked(state.masses.atoms, kappa, cfg.lambda, cfg.psi);
  out.log_total = res.log_total;
  out.state.masses.atoms = res.masses;
  out.state.masses.residual_mass = 0.0;
  const std::size_t n = state.masses.size();
  out.state.overlaps = OverlapMatrix(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      out.state.overlaps.set(i, j, state.overlaps(res.order[i], res.order[j]));
  return out;
}

namespace {

double velocity_sum(const OrderParam& op, int r) {
  double total = 0.0;
  for (const auto& [q, dx] : op.jumps())
    total += (1.0 - std::pow(q, r)) * dx;
  return total;
}

}  // namespace

double crowd_velocity(const OrderParam& op, int r, double lambda) {
  if (r < 1) throw ValidationError("correlation power r must be >= 1");
  return 0.5 * lambda * lambda * velocity_sum(op, r);
}

double past_velocity_formula(const OrderParam& op, int r, double lambda) {
  if (r < 1) throw ValidationError("correlation power r must be >= 1");
  return lambda * velocity_sum(op, r);
}

VelocityEstimate estimate_velocity(const RpcParams& params,
                                   const EvolutionConfig& cfg,
                                   std::size_t cap, std::size_t replicas,
                                   RngStream& rng, double rel_tol) {
  params.validate();
  cfg.validate();
  if (replicas < 2) throw ValidationError("velocity needs >= 2 replicas");
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    LevelStructure s = sample_cascade_recursive(params, cap, rng);
    std::vector<double> kappa = sample_increments(s, cfg.r, rng);
    EvolveResult res =
        reweight_ranked(s.atoms, kappa, cfg.lambda, cfg.psi);
    // Drift of the unnormalized total: subtract the retained pre-step mass.
    double sum_pre = std::accumulate(s.atoms.begin(), s.atoms.end(), 0.0);
    double v = res.log_total - std::log(sum_pre);
    sum += v;
    sum_sq += v * v;
  }
  VelocityEstimate out;
  out.replicas = replicas;
  out.v_hat = sum / static_cast<double>(replicas);
  double var = (sum_sq - static_cast<double>(replicas) * out.v_hat * out.v_hat) /
               static_cast<double>(replicas - 1);
  out.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(replicas));
  OrderParam op = params.order_param();
  out.crowd = crowd_velocity(op, cfg.r, cfg.lambda);
  out.past = past_velocity_formula(op, cfg.r, cfg.lambda);
  auto close = [&](double target) {
    return std::abs(out.v_hat - target) <=
           rel_tol * std::abs(target) + 3.0 * out.stderr_;
  };
  out.matches_crowd = close(out.crowd);
  out.matches_past = close(out.past);
  return out;
}

MatchResult match_velocities(const RpcParams& a,
                             const std::vector<double>& q_levels_b,
                             std::size_t r_max,
                             const std::vector<double>& tail_jumps_b) {
  a.validate();
  const std::size_t kb = q_levels_b.size();
  double prev = -1.0;
  for (double q : q_levels_b) {
    if (!(q >= 0.0) || !(q < 1.0) || !(q > prev))
      throw ValidationError(
          "target ladder must be strictly increasing in [0,1)");
    prev = q;
  }
  if (r_max < 1 || r_max > kb)
    throw ValidationError("matched power range must be 1..levels");
  if (tail_jumps_b.size() != kb - r_max)
    throw ValidationError("need one fixed jump per unmatched level");
  for (double dx : tail_jumps_b)
    if (!(dx > 0.0)) throw ValidationError("fixed jumps must be positive");

  OrderParam op_a = a.order_param();
  Eigen::MatrixXd m(r_max, r_max);
  Eigen::VectorXd rhs(r_max);
  for (std::size_t r = 1; r <= r_max; ++r) {
    double target = velocity_sum(op_a, static_cast<int>(r));
    for (std::size_t l = r_max; l < kb; ++l)
      target -= (1.0 - std::pow(q_levels_b[l], static_cast<int>(r))) *
                tail_jumps_b[l - r_max];
    rhs(static_cast<Eigen::Index>(r - 1)) = target;
    for (std::size_t l = 0; l < r_max; ++l)
      m(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(l)) =
          1.0 - std::pow(q_levels_b[l], static_cast<int>(r));
  }
  Eigen::VectorXd jumps = m.fullPivLu().solve(rhs);
  double residual = (m * jumps - rhs).cwiseAbs().maxCoeff();

  MatchResult out;
  out.max_residual = residual;
  double x = 0.0;
  for (std::size_t l = 0; l < kb; ++l) {
    double dx = l < r_max ? jumps(static_cast<Eigen::Index>(l))
                          : tail_jumps_b[l - r_max];
    if (!(dx > 0.0))
      throw ValidationError("velocity matching requires positive jumps");
    x += dx;
    out.x_levels.push_back(x);
  }
  if (!(x < 1.0))
    throw ValidationError("matched weights must stay below one");
  return out;
}

namespace {

struct TaggedAtom {
  double mass;
  int block;
  std::size_t index;
};

std::vector<TaggedAtom> pooled_atoms(const std::vector<double>& a,
                                     const std::vector<double>& b, double w) {
  std::vector<TaggedAtom> atoms;
  atoms.reserve(a.size() + b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    atoms.push_back({w * a[i], 0, i});
  for (std::size_t i = 0; i < b.size(); ++i)
    atoms.push_back({(1.0 - w) * b[i], 1, i});
  std::sort(atoms.begin(), atoms.end(), [](const TaggedAtom& l,
                                           const TaggedAtom& r) {
    if (l.mass != r.mass) return l.mass > r.mass;
    if (l.block != r.block) return l.block < r.block;
    return l.index < r.index;
  });
  return atoms;
}

}  // namespace

Rost superpose(const Rost& a, const Rost& b, double w) {
  if (!(w >= 0.0) || !(w <= 1.0))
    throw ValidationError("block weight must lie in [0,1]");
  std::vector<TaggedAtom> atoms =
      pooled_atoms(a.masses.atoms, b.masses.atoms, w);
  Rost out;
  out.masses.atoms.reserve(atoms.size());
  for (const TaggedAtom& t : atoms) out.masses.atoms.push_back(t.mass);
  out.masses.residual_mass =
      w * a.masses.residual_mass + (1.0 - w) * b.masses.residual_mass;
  out.overlaps = OverlapMatrix(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      if (atoms[i].block != atoms[j].block) continue;
      const OverlapMatrix& q = atoms[i].block == 0 ? a.overlaps : b.overlaps;
      out.overlaps.set(i, j, q(atoms[i].index, atoms[j].index));
    }
  return out;
}

LevelStructure superpose(const LevelStructure& a, const LevelStructure& b,
                         double w) {
  if (!(w >= 0.0) || !(w <= 1.0))
    throw ValidationError("block weight must lie in [0,1]");
  std::vector<double> values{0.0};
  values.insert(values.end(), a.q_levels.begin(), a.q_levels.end());
  values.insert(values.end(), b.q_levels.begin(), b.q_levels.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t k = values.size();

  std::vector<TaggedAtom> atoms = pooled_atoms(a.atoms, b.atoms, w);
  LevelStructure out;
  out.q_levels = values;
  out.atoms.reserve(atoms.size());
  for (const TaggedAtom& t : atoms) out.atoms.push_back(t.mass);
  out.residual_mass = w * a.residual_mass + (1.0 - w) * b.residual_mass;

  // Group key for an atom of a block at pooled level t+1: the coarsest
  // block feature whose agreement forces block overlap >= values[t+1]
  // (whole block, a block group array, or the atom itself when the block
  // ladder never reaches that value).
  constexpr std::uint64_t kWhole = 0;
  constexpr std::uint64_t kSelfBase = std::uint64_t{1} << 40;
  out.groups.resize(k > 0 ? k - 1 : 0);
  for (std::size_t t = 0; t + 1 < k; ++t) {
    double threshold = values[t + 1];
    std::unordered_map<std::uint64_t, std::uint32_t> dense;
    dense.reserve(atoms.size());
    auto& g = out.groups[t];
    g.reserve(atoms.size());
    for (const TaggedAtom& atom : atoms) {
      const LevelStructure& block = atom.block == 0 ? a : b;
      const auto& ladder = block.q_levels;
      std::size_t c = static_cast<std::size_t>(
          std::lower_bound(ladder.begin(), ladder.end(), threshold) -
          ladder.begin());
      std::uint64_t key;
      if (c == 0)
        key = kWhole;
      else if (c < ladder.size())
        key = 1 + block.groups[c - 1][atom.index];
      else
        key = kSelfBase + atom.index;
      std::uint64_t composite =
          (static_cast<std::uint64_t>(atom.block) << 48) | key;
      auto [it, _] =
          dense.emplace(composite, static_cast<std::uint32_t>(dense.size()));
      g.push_back(it->second);
    }
  }
  return out;
}

double cascade_total_scale(const std::vector<double>& x_levels) {
  if (x_levels.empty())
    throw ValidationError("total scale needs at least one weight");
  double prev = 0.0;
  for (double x : x_levels) {
    if (!(x > prev) || !(x < 1.0))
      throw ValidationError(
          "cascade weights must be strictly increasing in (0,1)");
    prev = x;
  }
  const std::size_t k = x_levels.size();
  double log_scale = std::lgamma(1.0 - x_levels[k - 1]) / x_levels[k - 1];
  for (std::size_t l = 0; l + 1 < k; ++l)
    log_scale +=
        std::lgamma(1.0 - x_levels[l] / x_levels[l + 1]) / x_levels[l];
  return std::exp(log_scale);
}

double sample_block_weight(const RpcParams& a, const RpcParams& b,
                           RngStream& rng) {
  double ta = cascade_total_scale(a.x_levels) *
              rng.next_stable_positive(a.x_levels[0]);
  double tb = cascade_total_scale(b.x_levels) *
              rng.next_stable_positive(b.x_levels[0]);
  return ta / (ta + tb);
}

void SuperpositionSpec::validate() const {
  block_a.validate();
  block_b.validate();
  if (cap == 0)
    throw ValidationError("superposition sampler needs a positive cap");
}

RostSampler make_superposition_sampler(const SuperpositionSpec& spec) {
  spec.validate();
  return {"superposition", [spec](RngStream& rng) {
            double w = sample_block_weight(spec.block_a, spec.block_b, rng);
            LevelStructure a =
                sample_cascade_recursive(spec.block_a, spec.cap, rng);
            LevelStructure b =
                sample_cascade_recursive(spec.block_b, spec.cap, rng);
            return superpose(a, b, w);
          }};
}

}  // namespace rost
