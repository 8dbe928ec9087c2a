#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "psvm/data.hpp"

namespace psvm {

/// Instance labels, every entry -1 or +1.
using LabelVector = std::vector<int>;

inline double hinge(double y, double f) {
  const double v = 1.0 - y * f;
  return v > 0.0 ? v : 0.0;
}

/// Labels for one bag plus the optimal value of the bag subproblem.
struct BagLabeling {
  std::vector<int> labels;
  double objective = 0.0;
  std::size_t positives = 0;
};

/// Whether a bag of `n` instances with `positives` of them labeled +1 keeps
/// its proportion within `eps` of `p`.
bool proportion_feasible(std::size_t positives, std::size_t n, double p, double eps);

/// Exact minimizer over y in {-1,+1}^|B| of
///
///   sum_i hinge(y_i, f_i) + ratio * |p~(y) - p|.
///
/// Start from all -1 and rank instances by the hinge reduction of flipping
/// them to +1. For every candidate proportion R/|B| the best labeling flips
/// the top R, so one sort plus a running sum covers the whole grid. Equal
/// gains are ordered by instance position; equal objectives prefer more
/// positives.
BagLabeling optimize_bag_penalized(std::span<const double> scores, double p, double ratio);

/// Exact minimizer of sum_i c_i y_i subject to |p~(y) - p| <= eps. The R
/// smallest coefficients get +1. When no grid proportion is feasible the one
/// nearest p is used. Equal values prefer the proportion nearest p, then
/// fewer positives.
BagLabeling optimize_bag_linear_constrained(std::span<const double> coeffs, double p, double eps);

struct Labeling {
  LabelVector labels;
  double objective = 0.0;
};

/// Bag-wise optimize_bag_penalized over a whole partition; the objective is
/// the sum of per-bag optima.
Labeling optimize_all_bags(std::span<const double> scores, const BagPartition& part, double ratio);

}  // namespace psvm
