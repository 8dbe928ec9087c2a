#include "psvm/model.hpp"

#include <nlohmann/json.hpp>

#include "psvm/errors.hpp"
#include "psvm/svm.hpp"

namespace psvm {

std::string method_name(Method m) {
  switch (m) {
    case Method::alter: return "alter";
    case Method::conv: return "conv";
    case Method::invcal: return "invcal";
  }
  return "alter";
}

Method parse_method(const std::string& name) {
  if (name == "alter") return Method::alter;
  if (name == "conv") return Method::conv;
  if (name == "invcal") return Method::invcal;
  throw ConfigError("unknown method '" + name + "' (expected alter, conv or invcal)");
}

Eigen::VectorXd PsvmModel::decision_from_cross(const Eigen::MatrixXd& cross) const {
  if (cross.cols() != coefficients.size()) throw ConfigError("cross kernel width does not match model size");
  Eigen::VectorXd f = centering ? Eigen::VectorXd(centering->center_cross(cross) * coefficients)
                                : Eigen::VectorXd(cross * coefficients);
  f.array() += bias;
  return f;
}

Eigen::VectorXd PsvmModel::decision_function(const Eigen::MatrixXd& x) const {
  if (train_features.rows() != coefficients.size()) {
    throw ConfigError("model has no stored training features; use decision_from_cross");
  }
  return decision_from_cross(cross_gram(x, train_features, kernel));
}

LabelVector PsvmModel::predict(const Eigen::MatrixXd& x) const { return sign_labels(decision_function(x)); }

namespace {

nlohmann::json to_json_vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd from_json_vec(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string PsvmModel::to_json() const {
  nlohmann::json j;
  j["method"] = method_name(method);
  j["kernel"] = {{"kind", kernel.name()}, {"gamma", kernel.gamma}};
  j["bias"] = bias;
  j["objective"] = objective;
  j["converged"] = converged;
  j["coefficients"] = to_json_vec(coefficients);
  j["support_indices"] = support_indices;
  j["labels"] = labels;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < train_features.rows(); ++i) {
    rows.push_back(to_json_vec(train_features.row(i).transpose()));
  }
  j["train_features"] = rows;
  if (centering) {
    j["centering"] = {{"row_means", to_json_vec(centering->row_means)}, {"grand_mean", centering->grand_mean}};
  }
  return j.dump(1);
}

PsvmModel PsvmModel::from_json(std::string_view text) {
  PsvmModel m;
  try {
    auto j = nlohmann::json::parse(text);
    m.method = parse_method(j.at("method").get<std::string>());
    m.kernel = KernelConfig::parse(j.at("kernel").at("kind").get<std::string>(), j.at("kernel").at("gamma").get<double>());
    m.bias = j.at("bias").get<double>();
    m.objective = j.at("objective").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.coefficients = from_json_vec(j.at("coefficients"));
    m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
    m.labels = j.at("labels").get<LabelVector>();
    const auto& rows = j.at("train_features");
    if (!rows.empty()) {
      const auto d = static_cast<Eigen::Index>(rows.front().size());
      m.train_features.resize(static_cast<Eigen::Index>(rows.size()), d);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        m.train_features.row(static_cast<Eigen::Index>(i)) = from_json_vec(rows[i]).transpose();
      }
    }
    if (j.contains("centering")) {
      KernelCentering c;
      c.row_means = from_json_vec(j["centering"].at("row_means"));
      c.grand_mean = j["centering"].at("grand_mean").get<double>();
      m.centering = std::move(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model JSON: ") + e.what());
  }
  return m;
}

}  // namespace psvm
