#include "rost/partition.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rost/errors.hpp"

namespace rost {

void PdParams::validate() const {
  if (!(x > 0.0) || !(x < 1.0) || !std::isfinite(x)) {
    throw ValidationError("PdParams.x must lie in (0,1), got " +
                          std::to_string(x));
  }
}

double MassPartition::retained_mass() const {
  double s = 0.0;
  for (double a : atoms) s += a;
  return s;
}

void MassPartition::validate() const {
  double prev = std::numeric_limits<double>::infinity();
  for (double a : atoms) {
    if (!(a >= 0.0) || a > prev) {
      throw ValidationError("MassPartition atoms must be nonincreasing and nonnegative");
    }
    prev = a;
  }
  if (residual_mass < 0.0) {
    throw ValidationError("MassPartition residual_mass must be nonnegative");
  }
  const double total = retained_mass() + residual_mass;
  if (!atoms.empty() && std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("MassPartition mass must sum to 1, got " +
                          std::to_string(total));
  }
}

PowerLawSample sample_power_law_ppp(const PdParams& params, std::size_t cap,
                                    RngStream& rng) {
  params.validate();
  PowerLawSample out;
  if (cap == 0) {
    out.discarded_bound = std::numeric_limits<double>::infinity();
    return out;
  }
  out.atoms.resize(cap);
  const double inv_x = 1.0 / params.x;
  double arrival = 0.0;
  for (std::size_t i = 0; i < cap; ++i) {
    arrival += rng.next_exp();
    out.atoms[i] = std::pow(arrival, -inv_x);
  }
  // Mean mass below the cutoff a:  integral_0^a s x s^(-x-1) ds.
  const double a = out.atoms.back();
  out.discarded_bound =
      params.x / (1.0 - params.x) * std::pow(a, 1.0 - params.x);
  return out;
}

MassPartition sample_pd(const PdParams& params, std::size_t cap,
                        RngStream& rng) {
  if (cap == 0) {
    throw ValidationError("sample_pd requires a positive atom cap");
  }
  PowerLawSample raw = sample_power_law_ppp(params, cap, rng);
  double total = 0.0;
  for (double a : raw.atoms) total += a;
  const double denom = total + raw.discarded_bound;
  MassPartition out;
  out.atoms.resize(raw.atoms.size());
  for (std::size_t i = 0; i < raw.atoms.size(); ++i) {
    out.atoms[i] = raw.atoms[i] / denom;
  }
  out.residual_mass = raw.discarded_bound / denom;
  return out;
}

double pd_moment_exact(double x, int n) {
  PdParams{x}.validate();
  if (n < 2) {
    throw ValidationError("pd_moment_exact requires n >= 2");
  }
  double value = 1.0;
  for (int j = 1; j <= n - 1; ++j) {
    value *= (j - x) / j;
  }
  return value;
}

MomentEstimate estimate_partition_moment(
    const std::vector<MassPartition>& samples, int n) {
  if (n < 1) {
    throw ValidationError("estimate_partition_moment requires n >= 1");
  }
  if (samples.empty()) {
    throw ValidationError("estimate_partition_moment requires samples");
  }
  MomentEstimate est;
  est.samples = samples.size();
  double sum = 0.0, sumsq = 0.0, bound = 0.0;
  for (const MassPartition& p : samples) {
    double m = 0.0;
    for (double a : p.atoms) m += std::pow(a, n);
    sum += m;
    sumsq += m * m;
    const double a_min = p.atoms.empty() ? 0.0 : p.atoms.back();
    bound += p.residual_mass * std::pow(a_min, n - 1);
  }
  const double k = static_cast<double>(samples.size());
  est.mean = sum / k;
  const double var = (sumsq - sum * sum / k) / (k > 1 ? k - 1 : 1);
  est.stderr_ = std::sqrt(var > 0 ? var / k : 0.0);
  est.truncation_bound = bound / k;
  return est;
}

}  // namespace rost
