#include "rost/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "rost/errors.hpp"
#include "rost/parallel.hpp"

namespace rost {

namespace {

double ks_statistic(const std::vector<double>& xs,
                    const std::vector<double>& ys) {
  const std::size_t n = xs.size(), m = ys.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < m) {
    double v = std::min(xs[i], ys[j]);
    while (i < n && xs[i] == v) ++i;
    while (j < m && ys[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(n) -
                             static_cast<double>(j) / static_cast<double>(m)));
  }
  return d;
}

}  // namespace

double ks_asymptotic_pvalue(double d, std::size_t n, std::size_t m) {
  if (d <= 0.0) return 1.0;
  double ne = static_cast<double>(n) * static_cast<double>(m) /
              static_cast<double>(n + m);
  double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * lam * lam * static_cast<double>(j) *
                           static_cast<double>(j));
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_two_sample(std::vector<double> xs, std::vector<double> ys,
                       RngStream* perm_rng) {
  if (xs.empty() || ys.empty())
    throw ValidationError("two-sample test needs nonempty samples");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  KsResult out;
  out.n = xs.size();
  out.m = ys.size();
  out.d = ks_statistic(xs, ys);
  if (std::min(xs.size(), ys.size()) >= 50) {
    out.asymptotic = true;
    out.p_value = ks_asymptotic_pvalue(out.d, xs.size(), ys.size());
    return out;
  }
  out.asymptotic = false;
  RngStream local(0x4b53u, xs.size() * 1000003u + ys.size());
  RngStream& rng = perm_rng ? *perm_rng : local;
  std::vector<double> pool = xs;
  pool.insert(pool.end(), ys.begin(), ys.end());
  const std::size_t perms = 2000;
  std::size_t at_least = 0;
  std::vector<double> a(xs.size()), b(ys.size());
  for (std::size_t p = 0; p < perms; ++p) {
    for (std::size_t i = pool.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(rng.next_unit() *
                                               static_cast<double>(i + 1));
      j = std::min(j, i);
      std::swap(pool[i], pool[j]);
    }
    std::copy(pool.begin(), pool.begin() + xs.size(), a.begin());
    std::copy(pool.begin() + xs.size(), pool.end(), b.begin());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (ks_statistic(a, b) >= out.d - 1e-15) ++at_least;
  }
  out.p_value = static_cast<double>(1 + at_least) /
                static_cast<double>(1 + perms);
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

std::string value_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::vector<std::string> qs_functional_names(
    const std::vector<double>& ref_values, bool by_level_index) {
  std::vector<std::string> names{"mass-top1", "mass-top2", "mass-sq-sum",
                                 "mass-cube-sum"};
  if (by_level_index) {
    names.push_back("pair-level");
    for (std::size_t l = 0; l < ref_values.size(); ++l)
      names.push_back("level-mass-" + std::to_string(l));
  } else {
    names.push_back("pair-overlap");
    for (double v : ref_values)
      names.push_back("cum-mass-le-" + value_label(v));
  }
  return names;
}

std::vector<double> qs_functionals(const LevelStructure& s,
                                   const std::vector<double>& ref_values,
                                   bool by_level_index, RngStream& rng) {
  std::vector<double> out;
  out.reserve(5 + ref_values.size());
  out.push_back(s.size() > 0 ? s.atoms[0] : 0.0);
  out.push_back(s.size() > 1 ? s.atoms[0] + s.atoms[1] : out.back());
  double msq = 0.0, mcb = 0.0;
  for (double a : s.atoms) {
    msq += a * a;
    mcb += a * a * a;
  }
  out.push_back(msq);
  out.push_back(mcb);
  auto [i, j] = size_biased_pair(s, rng);
  std::vector<double> masses = s.level_pair_masses();
  if (by_level_index) {
    if (s.levels() != ref_values.size())
      throw ValidationError(
          "level-indexed battery needs matching ladder depth");
    out.push_back(static_cast<double>(s.overlap_level(i, j)));
    for (std::size_t l = 0; l < s.levels(); ++l) out.push_back(masses[l]);
  } else {
    out.push_back(s.overlap(i, j));
    for (double v : ref_values) {
      double cum = 0.0;
      for (std::size_t l = 0; l < s.levels(); ++l)
        if (s.q_levels[l] <= v) cum += masses[l];
      out.push_back(cum);
    }
  }
  return out;
}

QsReport qs_test(const RostSampler& sampler, const EvolutionConfig& cfg,
                 std::size_t replicas, std::uint64_t seed,
                 const std::vector<double>& ref_values, bool by_level_index,
                 double alpha_total, int workers) {
  cfg.validate();
  if (replicas < 2) throw ValidationError("battery needs >= 2 replicas");
  std::vector<std::string> names =
      qs_functional_names(ref_values, by_level_index);
  const std::size_t nf = names.size();
  std::vector<double> pre(replicas * nf), post(replicas * nf);
  replica_map(replicas, workers, [&](std::size_t rep) {
    {
      RngStream rng(seed, 2 * rep);
      LevelStructure s = sampler.draw(rng);
      std::vector<double> row =
          qs_functionals(s, ref_values, by_level_index, rng);
      std::copy(row.begin(), row.end(), pre.begin() + rep * nf);
    }
    {
      RngStream rng(seed, 2 * rep + 1);
      LevelStructure s = sampler.draw(rng);
      PhiResult stepped = phi(s, cfg, rng);
      std::vector<double> row =
          qs_functionals(stepped.state, ref_values, by_level_index, rng);
      std::copy(row.begin(), row.end(), post.begin() + rep * nf);
    }
  });

  QsReport report;
  report.model = sampler.name;
  report.r = cfg.r;
  report.lambda = cfg.lambda;
  report.replicas = replicas;
  report.alpha_total = alpha_total;
  report.alpha_each = alpha_total / static_cast<double>(nf);
  report.pass = true;
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<double> xs(replicas), ys(replicas);
    for (std::size_t rep = 0; rep < replicas; ++rep) {
      xs[rep] = pre[rep * nf + f];
      ys[rep] = post[rep * nf + f];
    }
    FunctionalTest t;
    t.name = names[f];
    t.mean_pre = std::accumulate(xs.begin(), xs.end(), 0.0) /
                 static_cast<double>(replicas);
    t.mean_post = std::accumulate(ys.begin(), ys.end(), 0.0) /
                  static_cast<double>(replicas);
    RngStream perm(seed ^ 0x6b73u, f);
    KsResult ks = ks_two_sample(std::move(xs), std::move(ys), &perm);
    t.d = ks.d;
    t.p_value = ks.p_value;
    t.pass = ks.p_value >= report.alpha_each;
    report.pass = report.pass && t.pass;
    report.tests.push_back(std::move(t));
  }
  return report;
}

UltrametricityReport ultrametricity_report(const RostSampler& sampler,
                                           std::size_t n,
                                           std::size_t replicas,
                                           std::uint64_t seed, double tol) {
  UltrametricityReport out;
  out.replicas = replicas;
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    RngStream rng(seed, rep);
    LevelStructure s = sampler.draw(rng);
    Rost r = s.to_rost(n);
    UltrametricCheck check = is_ultrametric(r.overlaps, tol);
    if (!check.ok) {
      ++out.violations;
      out.worst = std::max(out.worst, check.violation);
    }
  }
  out.pass = out.violations == 0;
  return out;
}

namespace {

// Merge times at which a replica pair's entry steps up to each value.
// A pair merged by time -ln(x_t) shares the ladder at the next value, and
// merging by -ln(zeta) means the replicas sit in the same atom (entry 1).
struct ReplicaLadder {
  std::vector<double> times;   // merge cutoff per depth; deeper comes earlier
  std::vector<double> values;  // entry once merged by times[t]; default below
  double base = 0.0;           // entry when never merged within the ladder
};

ReplicaLadder replica_ladder(const OrderParam& op) {
  LadderThresholds lad = ladder_thresholds(op);
  const double zeta = op.zeta();
  const std::size_t k = lad.values.size();
  ReplicaLadder out;
  out.base = lad.values[0];
  for (std::size_t t = 0; t + 1 < k; ++t) {
    out.times.push_back(lad.thresholds[t] - std::log(zeta));
    out.values.push_back(lad.values[t + 1]);
  }
  out.times.push_back(-std::log(zeta));
  out.values.push_back(1.0);
  return out;
}

OverlapMatrix matrix_from_run(const CoalescentRun& run,
                              const ReplicaLadder& ladder, std::size_t n) {
  // Partition snapshots at the ladder's merge times; deeper values have
  // earlier times, so the scan below starts from the last (deepest) one.
  std::vector<const std::vector<std::uint32_t>*> snaps;
  for (double u : ladder.times) {
    auto it = std::lower_bound(run.times.begin(), run.times.end(), u);
    snaps.push_back(&run.blocks[static_cast<std::size_t>(
        it - run.times.begin())]);
  }
  OverlapMatrix q(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double value = ladder.base;
      for (std::size_t t = ladder.times.size(); t > 0; --t)
        if ((*snaps[t - 1])[i] == (*snaps[t - 1])[j]) {
          value = ladder.values[t - 1];
          break;
        }
      q.set(i, j, value);
    }
  return q;
}

}  // namespace

ContinuityReport coupling_continuity_test(const OrderParam& f,
                                          const OrderParam& g, double epsilon,
                                          std::size_t n, std::size_t replicas,
                                          std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (n < 2) throw ValidationError("continuity needs >= 2 replicas drawn");
  if (std::abs(f.zeta() - g.zeta()) > 1e-12)
    throw ValidationError("coupled ladders must share the top weight");

  ContinuityReport out;
  out.epsilon = epsilon;
  out.n = n;
  out.zeta = f.zeta();
  out.l1 = l1_distance(f, g);
  out.precondition_ok = out.l1 <= epsilon * epsilon + 1e-15;
  out.bound = static_cast<double>(n) * static_cast<double>(n - 1) * epsilon /
              (2.0 * out.zeta);
  out.vacuous = out.bound >= 1.0;
  out.replicas = replicas;

  ReplicaLadder lf = replica_ladder(f);
  ReplicaLadder lg = replica_ladder(g);
  std::vector<double> stops = lf.times;
  stops.insert(stops.end(), lg.times.begin(), lg.times.end());
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  for (std::size_t rep = 0; rep < replicas; ++rep) {
    RngStream rng(seed, rep);
    Rost a, b;
    CoalescentRun run = run_coalescent(n, stops.back() + 1.0, stops, rng);
    a.overlaps = matrix_from_run(run, lf, n);
    b.overlaps = matrix_from_run(run, lg, n);
    // Distance of the observed n-by-n matrices; it can only undershoot
    // the full-matrix distance, so the bound check stays conservative.
    RostDistance d = rost_distance(a, b);
    if (d.value >= 2.0 * epsilon - 1e-15) ++out.exceedances;
  }
  out.p_hat = static_cast<double>(out.exceedances) /
              static_cast<double>(replicas);
  out.stderr_ = std::sqrt(out.p_hat * (1.0 - out.p_hat) /
                          static_cast<double>(replicas));
  out.pass = out.vacuous || out.p_hat <= out.bound + 3.0 * out.stderr_;
  return out;
}

namespace {

double log_weight_drift(const std::vector<double>& atoms,
                        const std::vector<double>& kappa, double lambda) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (atoms[i] > 0.0)
      top = std::max(top, std::log(atoms[i]) + lambda * kappa[i]);
  double total = 0.0, base = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i] > 0.0)
      total += std::exp(std::log(atoms[i]) + lambda * kappa[i] - top);
    base += atoms[i];
  }
  return top + std::log(total) - std::log(base);
}

}  // namespace

DriftReport superposition_drift_test(const SuperpositionSpec& spec,
                                     const EvolutionConfig& cfg,
                                     std::size_t pairs, std::uint64_t seed,
                                     double alpha, int workers) {
  spec.validate();
  cfg.validate();
  if (pairs < 4) throw ValidationError("drift test needs >= 4 pairs");
  std::vector<double> w_pre(pairs), w_post(pairs), delta(pairs);
  replica_map(pairs, workers, [&](std::size_t rep) {
    RngStream rng(seed, rep);
    double w = sample_block_weight(spec.block_a, spec.block_b, rng);
    LevelStructure a = sample_cascade_recursive(spec.block_a, spec.cap, rng);
    LevelStructure b = sample_cascade_recursive(spec.block_b, spec.cap, rng);
    std::vector<double> ka = sample_increments(a, cfg.r, rng);
    std::vector<double> kb = sample_increments(b, cfg.r, rng);
    double ra = log_weight_drift(a.atoms, ka, cfg.lambda);
    double rb = log_weight_drift(b.atoms, kb, cfg.lambda);
    w_pre[rep] = w;
    delta[rep] = ra - rb;
    double la = std::log(w) + ra, lb = std::log1p(-w) + rb;
    double top = std::max(la, lb);
    w_post[rep] = std::exp(la - top) /
                  (std::exp(la - top) + std::exp(lb - top));
  });

  DriftReport out;
  out.r = cfg.r;
  out.lambda = cfg.lambda;
  out.pairs = pairs;
  out.alpha = alpha;
  out.predicted =
      crowd_velocity(spec.block_a.order_param(), cfg.r, cfg.lambda) -
      crowd_velocity(spec.block_b.order_param(), cfg.r, cfg.lambda);
  double mean = std::accumulate(delta.begin(), delta.end(), 0.0) /
                static_cast<double>(pairs);
  double ss = 0.0;
  for (double d : delta) ss += (d - mean) * (d - mean);
  double se = std::sqrt(ss / static_cast<double>(pairs - 1) /
                        static_cast<double>(pairs));
  out.delta_mean = mean;
  out.delta_se = se;
  out.z = se > 0.0 ? mean / se : 0.0;
  out.p_value = std::erfc(std::abs(out.z) / std::sqrt(2.0));
  out.reject = out.p_value < alpha;
  out.drift_matches_predicted =
      std::abs(mean - out.predicted) <=
      3.0 * se + 0.05 * std::abs(out.predicted);
  std::size_t half = pairs / 2;
  std::vector<double> xs(w_pre.begin(), w_pre.begin() + half);
  std::vector<double> ys(w_post.begin() + half, w_post.end());
  RngStream perm(seed ^ 0x647266u, 0);
  out.marginal = ks_two_sample(std::move(xs), std::move(ys), &perm);
  return out;
}

BlockScalingReport block_count_scaling(double u,
                                       const std::vector<std::size_t>& sizes,
                                       std::size_t replicas,
                                       std::uint64_t seed, double tol) {
  if (!(u > 0.0)) throw ValidationError("transition width must be positive");
  if (sizes.size() < 2)
    throw ValidationError("scaling fit needs at least two sizes");
  if (replicas < 2) throw ValidationError("scaling needs >= 2 replicas");
  BlockScalingReport out;
  out.u = u;
  out.sizes = sizes;
  out.expected = std::exp(-u);
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t rep = 0; rep < replicas; ++rep) {
      RngStream rng(seed, (static_cast<std::uint64_t>(s) << 32) | rep);
      CoalescentState state = make_singletons(sizes[s]);
      semigroup_step(state, u, rng);
      double b = static_cast<double>(state.block_count());
      sum += b;
      sum_sq += b * b;
    }
    double mean = sum / static_cast<double>(replicas);
    double var = (sum_sq - static_cast<double>(replicas) * mean * mean) /
                 static_cast<double>(replicas - 1);
    out.mean_blocks.push_back(mean);
    out.stderr_.push_back(
        std::sqrt(std::max(0.0, var) / static_cast<double>(replicas)));
  }
  // Least squares of log(mean blocks) on log(size).
  std::vector<double> t(sizes.size()), y(sizes.size()), vy(sizes.size());
  double t_bar = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    t[i] = std::log(static_cast<double>(sizes[i]));
    y[i] = std::log(out.mean_blocks[i]);
    double rel = out.stderr_[i] / out.mean_blocks[i];
    vy[i] = rel * rel;
    t_bar += t[i];
  }
  t_bar /= static_cast<double>(sizes.size());
  double stt = 0.0, sty = 0.0, var_slope = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    stt += (t[i] - t_bar) * (t[i] - t_bar);
    sty += (t[i] - t_bar) * y[i];
  }
  out.slope = sty / stt;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    double wgt = (t[i] - t_bar) / stt;
    var_slope += wgt * wgt * vy[i];
  }
  out.slope_se = std::sqrt(var_slope);
  out.pass = std::abs(out.slope - out.expected) <= tol + 3.0 * out.slope_se;
  return out;
}

}  // namespace rost
