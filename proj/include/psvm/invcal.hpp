#pragma once

#include <vector>

#include <Eigen/Core>

#include "psvm/data.hpp"
#include "psvm/kernels.hpp"
#include "psvm/model.hpp"
#include "psvm/svm.hpp"

namespace psvm {

struct InvCalParams {
  double C_p = 1.0;
  double eps_margin = 0.0;  // tube width, shared by all bags
  KernelConfig kernel;
  SolverOptions solver{1e-6, 1000, false};

  void validate() const;
};

/// G_kl = mean over i in B_k, j in B_l of K_ij: inner products of the bag
/// means in feature space.
Eigen::MatrixXd super_instance_gram(const Eigen::MatrixXd& gram, const BagPartition& part);

/// Inverse-sigmoid regression targets -log(1/p - 1), with p clamped to
/// [1/(2|B|), 1 - 1/(2|B|)] so empty and full bags stay finite.
Eigen::VectorXd invcal_targets(const std::vector<double>& proportions, const std::vector<std::size_t>& bag_sizes);

struct InvCalFit {
  PsvmModel model;
  Eigen::VectorXd eta;  // net dual coefficient per bag
  double bias = 0.0;
  Eigen::VectorXd targets;
  BoxQpResult qp;
};

/// Epsilon-insensitive regression of the targets on the bag means, solved in
/// the dual over 2K box-constrained multipliers. The instance predictor is
/// sign(sum_k eta_k mean_{i in B_k} k(x_i, x) + b), expanded back onto the
/// training instances.
InvCalFit train_invcal_gram(const Eigen::MatrixXd& gram, const BagPartition& part, const InvCalParams& params);
InvCalFit train_invcal(const Eigen::MatrixXd& features, const BagPartition& part, const InvCalParams& params);

}  // namespace psvm
