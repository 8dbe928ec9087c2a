#include "psvm/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "psvm/errors.hpp"

namespace psvm {

void KernelConfig::validate() const {
  if (kind == Kind::rbf && !(gamma > 0.0)) throw ConfigError("rbf gamma must be positive");
}

std::string KernelConfig::name() const { return kind == Kind::linear ? "linear" : "rbf"; }

KernelConfig KernelConfig::parse(const std::string& kind, double gamma) {
  if (kind == "linear") return linear();
  if (kind == "rbf") {
    KernelConfig cfg = rbf(gamma);
    cfg.validate();
    return cfg;
  }
  throw ConfigError("unknown kernel '" + kind + "' (expected linear or rbf)");
}

double KernelConfig::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
  if (kind == Kind::linear) return a.dot(b);
  return std::exp(-gamma * (a - b).squaredNorm());
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const KernelConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = cfg.kind == KernelConfig::Kind::rbf ? 1.0 : x.row(i).squaredNorm();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = cfg(x.row(i), x.row(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelConfig& cfg) {
  cfg.validate();
  if (a.cols() != b.cols()) throw ConfigError("feature dimensions differ in cross kernel");
  if (cfg.kind == KernelConfig::Kind::linear) return a * b.transpose();
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = cfg(a.row(i), b.row(j));
  }
  return k;
}

FactorizedFeatures factorize(const Eigen::MatrixXd& g, double frac) {
  if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("retained variance must be in (0,1]");
  const Eigen::Index n = g.rows();
  if (n == 0 || g.cols() != n) throw ConfigError("factorize needs a non-empty square matrix");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success) throw DegenerateKernelError("eigendecomposition failed");
  // Eigen returns ascending order.
  Eigen::VectorXd lambda = es.eigenvalues().reverse();
  Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();

  const double trace = g.trace();
  if (lambda(n - 1) < -1e-8 * std::max(std::abs(trace), 1.0)) {
    throw DegenerateKernelError("kernel matrix is not positive semidefinite");
  }
  lambda = lambda.cwiseMax(0.0);
  const double total = lambda.sum();
  if (!(total > 0.0)) throw DegenerateKernelError("kernel matrix has no positive eigenvalue");

  Eigen::Index d = 0;
  double kept = 0.0;
  while (d < n && lambda(d) > 0.0) {
    kept += lambda(d);
    ++d;
    if (kept >= frac * total * (1.0 - 1e-12)) break;
  }

  FactorizedFeatures out;
  out.vectors = vecs.leftCols(d) * lambda.head(d).cwiseSqrt().asDiagonal();
  out.retained_variance = std::min(1.0, kept / total);
  return out;
}

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) return x;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return x.rowwise() - mean;
}

FactorizedFeatures center_features(const FactorizedFeatures& f) {
  return {center_columns(f.vectors), f.retained_variance};
}

KernelCentering KernelCentering::fit(const Eigen::MatrixXd& train_gram) {
  KernelCentering c;
  c.row_means = train_gram.rowwise().mean();
  c.grand_mean = c.row_means.mean();
  return c;
}

Eigen::MatrixXd KernelCentering::center_train(const Eigen::MatrixXd& k) const {
  Eigen::MatrixXd out = k;
  out.colwise() -= row_means;
  out.rowwise() -= row_means.transpose();
  out.array() += grand_mean;
  // restore exact symmetry lost to rounding order
  out = (0.5 * (out + out.transpose())).eval();
  return out;
}

Eigen::MatrixXd KernelCentering::center_cross(const Eigen::MatrixXd& cross) const {
  Eigen::MatrixXd out = cross;
  const Eigen::VectorXd test_means = cross.rowwise().mean();
  out.colwise() -= test_means;
  out.rowwise() -= row_means.transpose();
  out.array() += grand_mean;
  return out;
}

}  // namespace psvm
