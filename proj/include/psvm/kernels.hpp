#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Core>

namespace psvm {

struct KernelConfig {
  enum class Kind { linear, rbf };
  Kind kind = Kind::linear;
  double gamma = 1.0;  // rbf only

  static KernelConfig linear() { return {}; }
  static KernelConfig rbf(double gamma) { return {Kind::rbf, gamma}; }

  /// Throws ConfigError when gamma is not positive for an rbf kernel.
  void validate() const;
  std::string name() const;
  static KernelConfig parse(const std::string& kind, double gamma = 1.0);

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) const;
};

/// N x N kernel matrix over the rows of `x`. Each pair is evaluated once and
/// mirrored, so the result is exactly symmetric; rbf diagonals are exactly 1.
Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const KernelConfig& cfg);

/// M x N matrix of k(a_m, b_n).
Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelConfig& cfg);

/// Explicit features whose inner products approximate a kernel matrix.
struct FactorizedFeatures {
  Eigen::MatrixXd vectors;        // N x d
  double retained_variance = 1.0; // eigenvalue mass kept by the d columns
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
};

/// Keeps the smallest number d of leading eigenpairs whose eigenvalue mass
/// reaches `frac` of the total (negative eigenvalues clipped to zero) and
/// returns V_d * sqrt(Lambda_d). Throws DegenerateKernelError when no
/// eigenvalue is positive or the matrix is clearly indefinite.
FactorizedFeatures factorize(const Eigen::MatrixXd& gram, double frac = 0.9);

/// Subtracts column means.
FactorizedFeatures center_features(const FactorizedFeatures& f);
Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x);

/// Centering of a kernel in feature space (H K H with H = I - 11'/N), kept so
/// test points can be centered against the same training mean.
struct KernelCentering {
  Eigen::VectorXd row_means;
  double grand_mean = 0.0;

  static KernelCentering fit(const Eigen::MatrixXd& train_gram);
  Eigen::MatrixXd center_train(const Eigen::MatrixXd& train_gram) const;
  /// `cross` is M x N with rows k(x_test, x_train_i).
  Eigen::MatrixXd center_cross(const Eigen::MatrixXd& cross) const;
};

}  // namespace psvm
