#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "psvm/kernels.hpp"
#include "psvm/label_opt.hpp"

namespace psvm {

enum class Method { alter, conv, invcal };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// A trained kernel expansion f(x) = sum_i coef_i k(x_i, x) + bias.
///
/// All three trainers produce one of these. conv models also carry the
/// feature-space centering learned from the training kernel; it is applied to
/// test kernels before the expansion.
struct PsvmModel {
  Method method = Method::alter;
  KernelConfig kernel;
  Eigen::MatrixXd train_features;  // may be empty for models trained from a Gram matrix
  Eigen::VectorXd coefficients;    // alpha_i * y_i per training instance
  double bias = 0.0;
  std::vector<std::size_t> support_indices;
  double objective = 0.0;
  LabelVector labels;              // final instance labels from training
  bool converged = true;           // false when an inner loop hit its iteration cap
  std::optional<KernelCentering> centering;

  /// Decision values from rows k(x_test, x_train_i).
  Eigen::VectorXd decision_from_cross(const Eigen::MatrixXd& cross) const;
  Eigen::VectorXd decision_function(const Eigen::MatrixXd& x) const;
  LabelVector predict(const Eigen::MatrixXd& x) const;

  std::string to_json() const;
  static PsvmModel from_json(std::string_view text);
};

}  // namespace psvm
