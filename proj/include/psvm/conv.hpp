#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "psvm/data.hpp"
#include "psvm/kernels.hpp"
#include "psvm/label_opt.hpp"
#include "psvm/model.hpp"

namespace psvm {

struct ConvParams {
  double C = 1.0;
  double eps = 0.0;  // proportion tolerance of every feasible labeling
  KernelConfig kernel;
  double variance_frac = 0.9;
  double convergence_threshold = 1e-4;
  std::size_t max_cuts = 50;
  double mkl_tol = 1e-5;
  std::size_t mkl_max_iters = 100;
  double svm_tol = 1e-6;  // inner SVM solves of the MKL step
  std::uint64_t seed = 0;

  void validate() const;
};

/// Working set of the cutting-plane loop. The combined label matrix is
/// M = sum_t weights_t y_t y_t'; it is never formed explicitly.
struct ActiveSet {
  std::vector<LabelVector> labelings;
  Eigen::VectorXd weights;  // on the simplex
  Eigen::VectorXd alpha;
  double objective = 0.0;
  double beta = 0.0;  // cutting-plane bound, tracked as the running objective
};

struct ViolatedLabeling {
  LabelVector labels;
  double value = 0.0;  // |sum_i alpha_i y_i x_i^(j)| for the winning dimension
  std::size_t dim = 0;
  int sign = 1;
};

/// Feasible labeling maximizing max_j |sum_i alpha_i y_i x_i^(j)|, the
/// l-infinity stand-in for alpha'(K .* yy')alpha. Every (dimension, sign)
/// pair decomposes into independent per-bag linear problems. Ties go to the
/// lowest dimension, then the + sign.
ViolatedLabeling find_violated_labeling(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& features,
                                        const BagPartition& part, double eps);

struct MklResult {
  Eigen::VectorXd weights;
  Eigen::VectorXd alpha;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;   // accepted objective values
  double max_simplex_error = 0.0;        // worst |sum w - 1| or negative weight seen
};

/// J(w) = max_{0<=a<=C} 1'a - 1/2 a'(K .* sum_t w_t y_t y_t')a, no bias.
double mkl_objective(std::span<const LabelVector> active, const Eigen::MatrixXd& gram, const Eigen::VectorXd& weights,
                     double C, double svm_tol = 1e-6);

/// Minimizes J over the simplex by projected gradient descent with
/// backtracking. Gradient entries are -1/2 (a .* y_t)' K (a .* y_t) at the
/// inner SVM optimum. Stops when the projected-gradient step is shorter than
/// `tol` or after `max_iters` accepted steps. `start` warm-starts the weights.
MklResult solve_mkl(std::span<const LabelVector> active, const Eigen::MatrixXd& gram, double C, double tol,
                    std::size_t max_iters, const Eigen::VectorXd* start = nullptr, double svm_tol = 1e-6);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

/// Real-valued labels sqrt(lambda_1) v_1 from the top eigenpair of M. The
/// orientation with the smaller bag-level error of its signs on `part` wins;
/// ties go to the orientation whose first nonzero entry is positive.
Eigen::VectorXd recover_labels(const ActiveSet& active, const BagPartition& part);

struct ConvFit {
  PsvmModel model;
  ActiveSet active;
  Eigen::VectorXd recovered;             // real-valued labels
  std::vector<double> objective_trace;   // restricted objective after each cut
  std::vector<std::size_t> mkl_iterations;
  double max_simplex_error = 0.0;
  std::size_t cuts = 0;
  bool stopped_on_duplicate = false;
};

/// Cutting-plane training: alternate the violated-labeling search with the
/// MKL solve over the active labelings until the objective stops decreasing,
/// then recover real-valued labels and retrain a bias-free SVM on them. The
/// kernel is centered in feature space.
ConvFit train_conv_gram(const Eigen::MatrixXd& gram, const BagPartition& part, const ConvParams& params);
ConvFit train_conv(const Eigen::MatrixXd& features, const BagPartition& part, const ConvParams& params);

}  // namespace psvm
