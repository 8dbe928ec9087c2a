#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace psvm {

struct SolverOptions {
  double tol = 1e-3;             // KKT violation and relative duality gap
  std::size_t max_sweeps = 1000; // iteration cap is max_sweeps * N
  bool record_trace = false;     // keep the dual objective after every update
};

/// Box-constrained concave QP
///
///   maximize    c'b - 1/2 b'Qb,   Q = (a a') .* K
///   subject to  0 <= b <= upper,  a'b = 0 (only when `equality`)
///
/// solved by maximal-violating-pair SMO (two coordinates) with an equality
/// constraint, or single-coordinate ascent without one. `multiplier` is the
/// Lagrange multiplier of a'b = 0, which is the bias for SVM and SVR duals.
struct BoxQpResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd gradient;  // c - Q beta
  double multiplier = 0.0;
  double objective = 0.0;
  double violation = 0.0;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

BoxQpResult solve_box_qp(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                         double upper, bool equality, double tol, const SolverOptions& opts,
                         const Eigen::VectorXd* start = nullptr);

/// Soft-margin SVM dual over a fixed kernel. Labels may be real valued; the
/// dual then uses Q = K .* y y'.
struct DualSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  double objective_dual = 0.0;
  Eigen::VectorXd labels_used;
  double C = 0.0;
  bool with_bias = false;
  std::size_t iterations = 0;
  std::vector<double> trace;

  /// alpha_i * y_i, the expansion weights of w.
  Eigen::VectorXd coefficients() const { return alpha.cwiseProduct(labels_used); }
  std::vector<std::size_t> support() const;
};

/// Maximizes 1'a - 1/2 a'(K .* yy')a over [0,C]^N, with y'a = 0 when
/// `with_bias`. The bias is averaged over free support vectors, or taken from
/// the feasible interval left by bound ones. Throws SolverError when the
/// iteration cap is reached.
DualSolution solve_dual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double C, bool with_bias,
                        const SolverOptions& opts = {});

/// f_m = sum_i alpha_i y_i K(x_m, x_i) + b for rows of `cross_kernel`.
Eigen::VectorXd decision_values(const DualSolution& sol, const Eigen::MatrixXd& cross_kernel);

/// sign with sign(0) = +1.
std::vector<int> sign_labels(const Eigen::VectorXd& values);

/// Largest KKT residual over instances, in margin units y_i f(x_i).
double kkt_residual(const Eigen::MatrixXd& gram, const DualSolution& sol);

/// 1/2 ||w||^2 + C * sum hinge(y_i, f(x_i)).
double primal_objective(const Eigen::MatrixXd& gram, const DualSolution& sol);

}  // namespace psvm
