#pragma once

// Random overlap structures: a mass partition together with a symmetric
// positive semidefinite overlap matrix with unit diagonal.  This header
// holds the matrix type and the deterministic predicates and maps used
// throughout the library; sampling lives in cascade.hpp / coalescent.hpp.

#include <cstddef>
#include <functional>
#include <vector>

#include "rost/partition.hpp"

namespace rost {

// Default numerical tolerances, pinned once so every caller and test agrees.
inline constexpr double kPsdTol = 1e-8;          // eigenvalue slack for PSD checks
inline constexpr double kUltrametricTol = 1e-9;  // for exactly constructed matrices
inline constexpr double kStateSpaceTol = 1e-9;   // merging exactly constructed values
inline constexpr double kStateSpaceTolLoose = 1e-6;  // after accumulated arithmetic

class OverlapMatrix {
 public:
  OverlapMatrix() = default;
  explicit OverlapMatrix(std::size_t n, double off_diagonal = 0.0);

  static OverlapMatrix identity(std::size_t n) { return OverlapMatrix(n); }

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return a_[i * n_ + j];
  }
  void set(std::size_t i, std::size_t j, double value) {
    a_[i * n_ + j] = value;
    a_[j * n_ + i] = value;
  }
  const std::vector<double>& data() const { return a_; }

  // Symmetry, unit diagonal, entries in [-1,1].
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

struct Rost {
  MassPartition masses;
  OverlapMatrix overlaps;

  void validate() const;  // overlap order must equal number of atoms
};

// Entrywise r-th power, r >= 1.  Schur products of PSD matrices are PSD, so
// the result is again an overlap matrix.
OverlapMatrix schur_power(const OverlapMatrix& q, int r);

struct UltrametricCheck {
  bool ok = true;
  // First triple (scan order: i < j, then k) violating
  // d(i,j) <= max(d(i,k), d(k,j)) + tol, with d = 1{i==j} ? 0 : 1 - q.
  std::size_t i = 0, j = 0, k = 0;
  double violation = 0.0;
};

// Requires entries in [0,1].
UltrametricCheck is_ultrametric(const OverlapMatrix& q,
                                double tol = kUltrametricTol);

struct RostDistance {
  double value = 0.0;        // mass sup-distance + weighted matrix series
  double mass_part = 0.0;    // sup_i |xi_i - eta_i| over padded atom lists
  double matrix_part = 0.0;  // sum_{i,j <= N} 2^(-i-j) |q_ij - p_ij|, 1-based
  // The retained matrices are finite truncations; entries beyond order N
  // could contribute at most this much to the full series.  Reported, never
  // silently dropped.
  double tail_bound = 0.0;
};

// Distance between two structures.  Missing matrix entries (when sizes
// differ) are treated as identity entries.
RostDistance rost_distance(const Rost& a, const Rost& b);

// Applies a nondecreasing map f with f(1) = 1 entrywise to the off-diagonal
// entries (diagonal stays 1) and verifies the result is PSD within kPsdTol.
// Monotonicity is checked on the realized entries; violations raise
// ValidationError, a non-PSD image raises NumericError carrying the minimum
// eigenvalue in detail().
OverlapMatrix apply_overlap_function(const OverlapMatrix& q,
                                     const std::function<double(double)>& f);

// The admissible rescaling s -> alpha^2 s on (-1,1), fixing +-1.
std::function<double(double)> overlap_scaling_map(double alpha);

// Sorted distinct off-diagonal values, merging values closer than tol.
std::vector<double> state_space(const OverlapMatrix& q,
                                double tol = kStateSpaceTol);

// True when every particle sees every state-space value, i.e. the set
// {q_ij : j != i} equals the global state space for all i.  Trivially true
// for n <= 1.
bool is_indecomposable(const OverlapMatrix& q, double tol = kStateSpaceTol);

// Smallest eigenvalue of the symmetric matrix.
double psd_min_eigenvalue(const OverlapMatrix& q);

}  // namespace rost
