#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "psvm/data.hpp"
#include "psvm/kernels.hpp"
#include "psvm/label_opt.hpp"
#include "psvm/model.hpp"
#include "psvm/svm.hpp"

namespace psvm {

struct AlterParams {
  double C = 1.0;
  double C_p = 10.0;
  KernelConfig kernel;
  std::size_t restarts = 10;
  double anneal_delta = 0.5;
  double anneal_start_factor = 1e-5;
  double convergence_threshold = 1e-4;
  std::uint64_t seed = 0;
  std::size_t max_inner_iters = 100;
  std::size_t threads = 1;  // restarts run concurrently when > 1
  SolverOptions solver;

  void validate() const;
};

/// Full objective at labels `y`, with w and b taken from `sol`:
///
///   1/2 ||w||^2 + C sum_i hinge(y_i, f(x_i)) + C_p sum_k |p~_k(y) - p_k|
///
/// where w = sum_i alpha_i y'_i phi(x_i) uses the labels the SVM was solved
/// with, which may differ from `y`.
double psvm_objective(const Eigen::MatrixXd& gram, const DualSolution& sol, const LabelVector& y,
                      const BagPartition& part, double C, double C_p);

/// Objective values inside one annealing stage, recorded after every
/// half-step (SVM step, then label step).
struct AnnealStage {
  double c_star = 0.0;
  std::vector<double> objectives;
  bool converged = true;
};

struct RestartTrace {
  std::vector<AnnealStage> stages;
  double final_objective = 0.0;
};

struct AlterFit {
  PsvmModel model;
  std::vector<RestartTrace> restarts;
  std::size_t best_restart = 0;
};

/// Alternating minimization with annealing on the loss weight, repeated from
/// random labelings; the restart with the lowest final objective wins (ties go
/// to the lower restart index).
AlterFit train_alter_gram(const Eigen::MatrixXd& gram, const BagPartition& part, const AlterParams& params);
AlterFit train_alter(const Eigen::MatrixXd& features, const BagPartition& part, const AlterParams& params);

}  // namespace psvm
