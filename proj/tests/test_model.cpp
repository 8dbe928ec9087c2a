#include <doctest.h>

#include "psvm/errors.hpp"
#include "psvm/model.hpp"

using namespace psvm;

TEST_CASE("method names") {
  CHECK(parse_method("alter") == Method::alter);
  CHECK(parse_method("conv") == Method::conv);
  CHECK(parse_method("invcal") == Method::invcal);
  CHECK(method_name(Method::conv) == "conv");
  CHECK_THROWS_AS(parse_method("meanmap"), ConfigError);
}

TEST_CASE("model JSON round trip preserves predictions") {
  PsvmModel m;
  m.method = Method::conv;
  m.kernel = KernelConfig::rbf(0.5);
  m.train_features.resize(3, 2);
  m.train_features << 1, 0, 0, 1, -1, -1;
  m.coefficients.resize(3);
  m.coefficients << 0.5, -0.25, 0.125;
  m.bias = 0.1;
  m.labels = {1, -1, 1};
  KernelCentering c;
  c.row_means = Eigen::VectorXd::Constant(3, 0.2);
  c.grand_mean = 0.3;
  m.centering = c;

  const PsvmModel back = PsvmModel::from_json(m.to_json());
  Eigen::MatrixXd t(2, 2);
  t << 0.3, 0.4, -2, 1;
  CHECK((back.decision_function(t) - m.decision_function(t)).norm() == 0.0);
  CHECK(back.labels == m.labels);
  CHECK(back.method == Method::conv);
  CHECK_THROWS_AS(PsvmModel::from_json("{}"), ConfigError);
}
