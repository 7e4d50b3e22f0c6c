#pragma once

// Order parameter of a hierarchical overlap structure: the nondecreasing
// right-continuous step function q(x) on [0,1] with q(x) = 1 for x >= zeta,
// together with its generalized inverse x(q).  Both directions are stored
// from one canonical representation (interior x-breakpoints and the q-value
// held to the left of each breakpoint), so conversions are exact.

#include <cstddef>
#include <utility>
#include <vector>

namespace rost {

class OrderParam {
 public:
  OrderParam() = default;

  // q(x) = values[l] on [breaks[l-1], breaks[l]) with breaks[-1] := 0, and
  // q(x) = 1 on [breaks.back(), 1].  Requires 0 < breaks[0] < ... < 1,
  // 0 <= values[0] <= ... < 1, equal sizes, at least one level.
  OrderParam(std::vector<double> x_breaks, std::vector<double> q_values);

  // Representation of the inverse x(q): pairs (q_l, x_l) meaning x(q) jumps
  // to x_l at q_l; x(q) = 0 before the first jump and 1 at q = 1.
  static OrderParam from_x_of_q(
      const std::vector<std::pair<double, double>>& steps);
  std::vector<std::pair<double, double>> x_of_q_steps() const;

  std::size_t levels() const { return q_values_.size(); }
  const std::vector<double>& x_breaks() const { return x_breaks_; }
  const std::vector<double>& q_values() const { return q_values_; }
  double zeta() const { return x_breaks_.back(); }

  double q_of_x(double x) const;
  double x_of_q(double q) const;

  // Jump locations (q_l) and sizes (x_l - x_{l-1}) of x(q) strictly below
  // q = 1; the remaining jump of size 1 - zeta sits at q = 1.
  std::vector<std::pair<double, double>> jumps() const;

  bool operator==(const OrderParam& other) const = default;

 private:
  std::vector<double> x_breaks_;
  std::vector<double> q_values_;
};

// Exact sup and L1 distances between two step order parameters on [0,1].
double sup_distance(const OrderParam& a, const OrderParam& b);
double l1_distance(const OrderParam& a, const OrderParam& b);

}  // namespace rost
