#include "rost/order_param.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rost/errors.hpp"

namespace rost {

OrderParam::OrderParam(std::vector<double> x_breaks,
                       std::vector<double> q_values)
    : x_breaks_(std::move(x_breaks)), q_values_(std::move(q_values)) {
  if (x_breaks_.empty())
    throw ValidationError("order parameter needs at least one level");
  if (x_breaks_.size() != q_values_.size())
    throw ValidationError("order parameter breakpoint/value size mismatch");
  double prev_x = 0.0;
  for (double x : x_breaks_) {
    if (!(x > prev_x) || !(x < 1.0))
      throw ValidationError(
          "order parameter x-breakpoints must be strictly increasing in "
          "(0,1)");
    prev_x = x;
  }
  double prev_q = 0.0;
  for (double q : q_values_) {
    if (!(q >= prev_q) || !(q < 1.0))
      throw ValidationError(
          "order parameter q-values must be nondecreasing in [0,1)");
    prev_q = q;
  }
}

OrderParam OrderParam::from_x_of_q(
    const std::vector<std::pair<double, double>>& steps) {
  std::vector<double> breaks, values;
  breaks.reserve(steps.size());
  values.reserve(steps.size());
  for (const auto& [q, x] : steps) {
    values.push_back(q);
    breaks.push_back(x);
  }
  return OrderParam(std::move(breaks), std::move(values));
}

std::vector<std::pair<double, double>> OrderParam::x_of_q_steps() const {
  std::vector<std::pair<double, double>> steps;
  steps.reserve(levels());
  for (std::size_t l = 0; l < levels(); ++l)
    steps.emplace_back(q_values_[l], x_breaks_[l]);
  return steps;
}

double OrderParam::q_of_x(double x) const {
  if (x < 0.0 || x > 1.0)
    throw ValidationError("q(x) evaluated outside [0,1]");
  auto it = std::upper_bound(x_breaks_.begin(), x_breaks_.end(), x);
  if (it == x_breaks_.end()) return 1.0;
  return q_values_[static_cast<std::size_t>(it - x_breaks_.begin())];
}

double OrderParam::x_of_q(double q) const {
  if (q < 0.0 || q > 1.0)
    throw ValidationError("x(q) evaluated outside [0,1]");
  if (q >= 1.0) return 1.0;
  // Largest level with q_values_[l] <= q; x(q) = its breakpoint.
  auto it = std::upper_bound(q_values_.begin(), q_values_.end(), q);
  if (it == q_values_.begin()) return 0.0;
  return x_breaks_[static_cast<std::size_t>(it - q_values_.begin()) - 1];
}

std::vector<std::pair<double, double>> OrderParam::jumps() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(levels());
  double prev_x = 0.0;
  for (std::size_t l = 0; l < levels(); ++l) {
    double dx = x_breaks_[l] - prev_x;
    prev_x = x_breaks_[l];
    if (!out.empty() && out.back().first == q_values_[l])
      out.back().second += dx;
    else
      out.emplace_back(q_values_[l], dx);
  }
  return out;
}

namespace {

// Merged breakpoint walk; calls fn(width, qa, qb) per constant piece.
template <typename Fn>
void walk_pieces(const OrderParam& a, const OrderParam& b, Fn&& fn) {
  std::vector<double> cuts{0.0, 1.0};
  cuts.insert(cuts.end(), a.x_breaks().begin(), a.x_breaks().end());
  cuts.insert(cuts.end(), b.x_breaks().begin(), b.x_breaks().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double mid = cuts[i];
    fn(cuts[i + 1] - cuts[i], a.q_of_x(mid), b.q_of_x(mid));
  }
}

}  // namespace

double sup_distance(const OrderParam& a, const OrderParam& b) {
  double worst = 0.0;
  walk_pieces(a, b, [&](double, double qa, double qb) {
    worst = std::max(worst, std::abs(qa - qb));
  });
  return worst;
}

double l1_distance(const OrderParam& a, const OrderParam& b) {
  double total = 0.0;
  walk_pieces(a, b, [&](double w, double qa, double qb) {
    total += w * std::abs(qa - qb);
  });
  return total;
}

}  // namespace rost
