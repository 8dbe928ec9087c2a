#include "psvm/invcal.hpp"

#include <algorithm>
#include <cmath>

#include "psvm/errors.hpp"

namespace psvm {

void InvCalParams::validate() const {
  if (!(C_p > 0.0)) throw ConfigError("C_p must be positive");
  if (!(eps_margin >= 0.0)) throw ConfigError("eps must be non-negative");
  kernel.validate();
}

Eigen::MatrixXd super_instance_gram(const Eigen::MatrixXd& gram, const BagPartition& part) {
  const auto K = static_cast<Eigen::Index>(part.num_bags());
  // Row sums per bag first, then column sums: O(N^2) overall.
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(K, gram.cols());
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& bag = part.bags[static_cast<std::size_t>(k)];
    for (auto i : bag) rows.row(k) += gram.row(static_cast<Eigen::Index>(i));
    rows.row(k) /= static_cast<double>(bag.size());
  }
  Eigen::MatrixXd g(K, K);
  for (Eigen::Index l = 0; l < K; ++l) {
    const auto& bag = part.bags[static_cast<std::size_t>(l)];
    Eigen::VectorXd col = Eigen::VectorXd::Zero(K);
    for (auto j : bag) col += rows.col(static_cast<Eigen::Index>(j));
    g.col(l) = col / static_cast<double>(bag.size());
  }
  return 0.5 * (g + g.transpose());
}

Eigen::VectorXd invcal_targets(const std::vector<double>& proportions, const std::vector<std::size_t>& bag_sizes) {
  if (proportions.size() != bag_sizes.size()) throw ConfigError("one bag size per proportion");
  Eigen::VectorXd z(static_cast<Eigen::Index>(proportions.size()));
  for (std::size_t k = 0; k < proportions.size(); ++k) {
    if (bag_sizes[k] == 0) throw ConfigError("bag sizes must be positive");
    const double half = 0.5 / static_cast<double>(bag_sizes[k]);
    const double p = std::clamp(proportions[k], half, 1.0 - half);
    z(static_cast<Eigen::Index>(k)) = -std::log(1.0 / p - 1.0);
  }
  return z;
}

InvCalFit train_invcal_gram(const Eigen::MatrixXd& gram, const BagPartition& part, const InvCalParams& params) {
  params.validate();
  const auto n = static_cast<std::size_t>(gram.rows());
  part.validate(n);
  const auto K = static_cast<Eigen::Index>(part.num_bags());
  if (K < 1) throw ConfigError("at least one bag is required");

  InvCalFit fit;
  fit.targets = invcal_targets(part.proportions, part.bag_sizes());
  const Eigen::MatrixXd g = super_instance_gram(gram, part);

  // Stacked multipliers (a, a*): maximize c'beta - 1/2 beta'((s s') .* [G G; G G]) beta
  // with s = (+1, -1) and s'beta = 0, so that eta = a - a*.
  Eigen::MatrixXd big(2 * K, 2 * K);
  big << g, g, g, g;
  Eigen::VectorXd s(2 * K), c(2 * K);
  s.head(K).setOnes();
  s.tail(K).setConstant(-1.0);
  c.head(K) = fit.targets.array() - params.eps_margin;
  c.tail(K) = -fit.targets.array() - params.eps_margin;
  fit.qp = solve_box_qp(big, s, c, params.C_p, true, params.solver.tol, params.solver);
  fit.eta = fit.qp.beta.head(K) - fit.qp.beta.tail(K);
  fit.bias = fit.qp.multiplier;

  PsvmModel& m = fit.model;
  m.method = Method::invcal;
  m.kernel = params.kernel;
  m.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& bag = part.bags[static_cast<std::size_t>(k)];
    const double w = fit.eta(k) / static_cast<double>(bag.size());
    for (auto i : bag) m.coefficients(static_cast<Eigen::Index>(i)) = w;
  }
  m.bias = fit.bias;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.coefficients(static_cast<Eigen::Index>(i)) != 0.0) m.support_indices.push_back(i);
  }
  m.objective = fit.qp.objective;
  m.labels = sign_labels(gram * m.coefficients + Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), m.bias));
  return fit;
}

InvCalFit train_invcal(const Eigen::MatrixXd& features, const BagPartition& part, const InvCalParams& params) {
  InvCalFit fit = train_invcal_gram(gram(features, params.kernel), part, params);
  fit.model.train_features = features;
  return fit;
}

}  // namespace psvm
