#include "rost/overlap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "rost/errors.hpp"

namespace rost {

OverlapMatrix::OverlapMatrix(std::size_t n, double off_diagonal)
    : n_(n), a_(n * n, off_diagonal) {
  for (std::size_t i = 0; i < n_; ++i) a_[i * n_ + i] = 1.0;
}

void OverlapMatrix::validate() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (a_[i * n_ + i] != 1.0) {
      throw ValidationError("overlap matrix must have unit diagonal");
    }
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double v = a_[i * n_ + j];
      if (v != a_[j * n_ + i]) {
        throw ValidationError("overlap matrix must be symmetric");
      }
      if (!(v >= -1.0 && v <= 1.0)) {
        throw ValidationError("overlap entries must lie in [-1,1]");
      }
    }
  }
}

void Rost::validate() const {
  masses.validate();
  overlaps.validate();
  if (overlaps.size() != masses.atoms.size()) {
    throw ValidationError(
        "overlap order " + std::to_string(overlaps.size()) +
        " does not match atom count " + std::to_string(masses.atoms.size()));
  }
}

OverlapMatrix schur_power(const OverlapMatrix& q, int r) {
  if (r < 1) throw ValidationError("schur_power requires r >= 1");
  OverlapMatrix out = q;
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 1.0;
      const double base = q(i, j);
      for (int t = 0; t < r; ++t) v *= base;
      out.set(i, j, v);
    }
  }
  return out;
}

UltrametricCheck is_ultrametric(const OverlapMatrix& q, double tol) {
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = q(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("is_ultrametric requires entries in [0,1]");
      }
    }
  }
  auto d = [&](std::size_t i, std::size_t j) {
    return i == j ? 0.0 : 1.0 - q(i, j);
  };
  UltrametricCheck check;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double lhs = d(i, j);
        const double rhs = std::max(d(i, k), d(k, j));
        if (lhs > rhs + tol) {
          check.ok = false;
          check.i = i;
          check.j = j;
          check.k = k;
          check.violation = lhs - rhs;
          return check;
        }
      }
    }
  }
  return check;
}

RostDistance rost_distance(const Rost& a, const Rost& b) {
  RostDistance d;
  const std::size_t na = a.masses.atoms.size();
  const std::size_t nb = b.masses.atoms.size();
  const std::size_t nm = std::max(na, nb);
  for (std::size_t i = 0; i < nm; ++i) {
    const double xa = i < na ? a.masses.atoms[i] : 0.0;
    const double xb = i < nb ? b.masses.atoms[i] : 0.0;
    d.mass_part = std::max(d.mass_part, std::abs(xa - xb));
  }
  const std::size_t qa = a.overlaps.size();
  const std::size_t qb = b.overlaps.size();
  const std::size_t n = std::max(qa, qb);
  auto entry = [](const OverlapMatrix& m, std::size_t order, std::size_t i,
                  std::size_t j) {
    if (i < order && j < order) return m(i, j);
    return i == j ? 1.0 : 0.0;  // identity beyond the retained block
  };
  double series = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double diff =
          std::abs(entry(a.overlaps, qa, i, j) - entry(b.overlaps, qb, i, j));
      if (diff != 0.0) {
        series += std::ldexp(diff, -static_cast<int>(i + j + 2));
      }
    }
  }
  d.matrix_part = series;
  const double covered = 1.0 - std::ldexp(1.0, -static_cast<int>(n));
  d.tail_bound = 2.0 * (1.0 - covered * covered);
  d.value = d.mass_part + d.matrix_part;
  return d;
}

OverlapMatrix apply_overlap_function(const OverlapMatrix& q,
                                     const std::function<double(double)>& f) {
  if (std::abs(f(1.0) - 1.0) > 1e-12) {
    throw ValidationError("overlap function must fix 1");
  }
  const std::size_t n = q.size();
  // Monotonicity spot-check on the realized entries.
  std::vector<double> entries;
  entries.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) entries.push_back(q(i, j));
  }
  std::sort(entries.begin(), entries.end());
  double prev_image = -std::numeric_limits<double>::infinity();
  for (double v : entries) {
    const double image = f(v);
    if (image < prev_image - 1e-12) {
      throw ValidationError("overlap function must be nondecreasing");
    }
    prev_image = std::max(prev_image, image);
  }
  OverlapMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.set(i, j, f(q(i, j)));
  }
  const double min_eig = psd_min_eigenvalue(out);
  if (min_eig < -kPsdTol) {
    throw NumericError("overlap function image is not positive semidefinite",
                       min_eig);
  }
  return out;
}

std::function<double(double)> overlap_scaling_map(double alpha) {
  const double a2 = alpha * alpha;
  if (a2 > 1.0) {
    throw ValidationError("overlap_scaling_map requires |alpha| <= 1");
  }
  return [a2](double s) {
    if (s >= 1.0) return 1.0;
    if (s <= -1.0) return -1.0;
    return a2 * s;
  };
}

std::vector<double> state_space(const OverlapMatrix& q, double tol) {
  std::vector<double> values;
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) values.push_back(q(i, j));
  }
  std::sort(values.begin(), values.end());
  std::vector<double> merged;
  std::size_t run_start = 0;
  for (std::size_t i = 0; i <= values.size(); ++i) {
    if (i == values.size() || (i > run_start && values[i] - values[i - 1] > tol)) {
      double sum = 0.0;
      for (std::size_t t = run_start; t < i; ++t) sum += values[t];
      merged.push_back(sum / static_cast<double>(i - run_start));
      run_start = i;
    }
  }
  return merged;
}

bool is_indecomposable(const OverlapMatrix& q, double tol) {
  const std::size_t n = q.size();
  if (n <= 1) return true;
  const std::vector<double> space = state_space(q, tol);
  auto value_index = [&](double v) {
    std::size_t best = 0;
    double best_dist = std::abs(v - space[0]);
    for (std::size_t s = 1; s < space.size(); ++s) {
      const double dist = std::abs(v - space[s]);
      if (dist < best_dist) {
        best = s;
        best_dist = dist;
      }
    }
    return best;
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<bool> seen(space.size(), false);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      seen[value_index(q(i, j))] = true;
    }
    for (bool s : seen) {
      if (!s) return false;
    }
  }
  return true;
}

double psd_min_eigenvalue(const OverlapMatrix& q) {
  const std::size_t n = q.size();
  if (n == 0) return 0.0;
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = q(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace rost
