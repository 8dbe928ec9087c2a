#include "psvm/label_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "psvm/errors.hpp"

namespace psvm {

namespace {

constexpr double kFeasibleSlack = 1e-12;
constexpr double kNearTie = 1e-9;

double theta(std::size_t positives, std::size_t n) {
  return static_cast<double>(positives) / static_cast<double>(n);
}

std::vector<int> top_r_labels(const std::vector<std::size_t>& order, std::size_t r) {
  std::vector<int> y(order.size(), -1);
  for (std::size_t k = 0; k < r; ++k) y[order[k]] = 1;
  return y;
}

// Objective in instance order. Candidates close to the running-sum optimum are
// re-scored with this so the reported value does not depend on summation order.
double penalized_value(std::span<const double> f, const std::vector<int>& y, std::size_t r, double p, double ratio) {
  double loss = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) loss += hinge(y[i], f[i]);
  return loss + ratio * std::abs(theta(r, f.size()) - p);
}

double linear_value(std::span<const double> c, const std::vector<int>& y) {
  double v = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * y[i];
  return v;
}

}  // namespace

bool proportion_feasible(std::size_t positives, std::size_t n, double p, double eps) {
  return std::abs(theta(positives, n) - p) <= eps + kFeasibleSlack;
}

BagLabeling optimize_bag_penalized(std::span<const double> scores, double p, double ratio) {
  if (ratio < 0.0) throw ConfigError("proportion penalty ratio must be non-negative");
  const std::size_t n = scores.size();
  if (n == 0) return {};

  std::vector<double> gain(n);
  double base = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    gain[i] = hinge(-1.0, scores[i]) - hinge(1.0, scores[i]);
    base += hinge(-1.0, scores[i]);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });

  std::vector<double> cand(n + 1);
  double running = base;
  cand[0] = running + ratio * std::abs(theta(0, n) - p);
  for (std::size_t r = 1; r <= n; ++r) {
    running -= gain[order[r - 1]];
    cand[r] = running + ratio * std::abs(theta(r, n) - p);
  }
  const double fast_best = *std::min_element(cand.begin(), cand.end());

  BagLabeling best;
  bool have = false;
  for (std::size_t r = 0; r <= n; ++r) {
    if (cand[r] > fast_best + kNearTie * (1.0 + std::abs(fast_best))) continue;
    auto y = top_r_labels(order, r);
    const double v = penalized_value(scores, y, r, p, ratio);
    if (!have || v <= best.objective) {
      best = {std::move(y), v, r};
      have = true;
    }
  }
  return best;
}

BagLabeling optimize_bag_linear_constrained(std::span<const double> coeffs, double p, double eps) {
  if (eps < 0.0) throw ConfigError("proportion tolerance must be non-negative");
  const std::size_t n = coeffs.size();
  if (n == 0) return {};

  std::vector<std::size_t> feasible;
  for (std::size_t r = 0; r <= n; ++r) {
    if (proportion_feasible(r, n, p, eps)) feasible.push_back(r);
  }
  if (feasible.empty()) {
    std::size_t nearest = 0;
    for (std::size_t r = 1; r <= n; ++r) {
      if (std::abs(theta(r, n) - p) < std::abs(theta(nearest, n) - p)) nearest = r;
    }
    feasible.push_back(nearest);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coeffs[a] < coeffs[b]; });

  double all_negative = 0.0;
  for (double c : coeffs) all_negative -= c;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + coeffs[order[k]];

  double fast_best = std::numeric_limits<double>::infinity();
  for (auto r : feasible) fast_best = std::min(fast_best, all_negative + 2.0 * prefix[r]);

  BagLabeling best;
  bool have = false;
  for (auto r : feasible) {
    const double fast = all_negative + 2.0 * prefix[r];
    if (fast > fast_best + kNearTie * (1.0 + std::abs(fast_best))) continue;
    auto y = top_r_labels(order, r);
    const double v = linear_value(coeffs, y);
    const bool better = !have || v < best.objective ||
                        (v == best.objective &&
                         std::abs(theta(r, n) - p) < std::abs(theta(best.positives, n) - p));
    if (better) {
      best = {std::move(y), v, r};
      have = true;
    }
  }
  return best;
}

Labeling optimize_all_bags(std::span<const double> scores, const BagPartition& part, double ratio) {
  Labeling out;
  out.labels.assign(scores.size(), -1);
  std::vector<double> f;
  for (std::size_t k = 0; k < part.bags.size(); ++k) {
    const auto& bag = part.bags[k];
    f.clear();
    for (auto i : bag) f.push_back(scores[i]);
    BagLabeling b = optimize_bag_penalized(f, part.proportions[k], ratio);
    for (std::size_t t = 0; t < bag.size(); ++t) out.labels[bag[t]] = b.labels[t];
    out.objective += b.objective;
  }
  return out;
}

}  // namespace psvm
