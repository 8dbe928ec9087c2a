#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "psvm/conv.hpp"
#include "psvm/errors.hpp"
#include "psvm/svm.hpp"

using namespace psvm;

namespace {

std::vector<Eigen::VectorXd> as_real(const std::vector<LabelVector>& ys) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& y : ys) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
    out.push_back(v);
  }
  return out;
}

LabelVector random_labels(std::mt19937_64& rng, std::size_t n) {
  LabelVector y(n);
  for (auto& v : y) v = rng() & 1 ? 1 : -1;
  return y;
}

}  // namespace

TEST_CASE("violated labeling: small worked example") {
  Eigen::MatrixXd x(3, 1);
  x << 3, 1, 2;
  Eigen::VectorXd alpha(3);
  alpha << 0.5, 0.5, 1.0;
  BagPartition part;
  part.bags = {{0, 1}, {2}};
  part.proportions = {0.5, 1.0};
  const ViolatedLabeling v = find_violated_labeling(alpha, x, part, 0.0);
  CHECK(v.labels == LabelVector{1, -1, 1});
  CHECK(v.value == doctest::Approx(3.0));
  CHECK(v.dim == 0);
  CHECK(v.sign == 1);
}

TEST_CASE("violated labeling: zero alpha and forced labels") {
  Eigen::MatrixXd x(5, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  BagPartition part;
  part.bags = {{0, 1, 2}, {3, 4}};
  part.proportions = {1.0 / 3.0, 0.5};
  const ViolatedLabeling z = find_violated_labeling(Eigen::VectorXd::Zero(5), x, part, 0.0);
  CHECK(z.labels == LabelVector{1, -1, -1, 1, -1});
  CHECK(z.value == 0.0);

  part.proportions = {1.0, 1.0};
  Eigen::VectorXd alpha(5);
  alpha << 0.3, 0.1, 0.9, 0.2, 0.5;
  const ViolatedLabeling f = find_violated_labeling(alpha, x, part, 0.0);
  CHECK(f.labels == LabelVector(5, 1));
}

TEST_CASE("violated labeling is the best over dimensions and signs") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd x = oracle::random_matrix(rng, 8, 3);
    Eigen::VectorXd alpha = oracle::random_matrix(rng, 8, 1).cwiseAbs();
    BagPartition part;
    part.bags = {{0, 1, 2}, {3, 4, 5, 6, 7}};
    part.proportions = {1.0 / 3.0, 0.6};
    const double eps = rep % 2 ? 0.0 : 0.2;
    const ViolatedLabeling v = find_violated_labeling(alpha, x, part, eps);
    // brute force over all feasible labelings of the 8 points
    double best = -1e300;
    for (unsigned mask = 0; mask < 256; ++mask) {
      LabelVector y(8);
      for (int i = 0; i < 8; ++i) y[static_cast<std::size_t>(i)] = (mask >> i) & 1 ? 1 : -1;
      bool ok = true;
      const auto pt = compute_proportions(y, part);
      for (std::size_t k = 0; k < 2; ++k) ok = ok && std::abs(pt[k] - part.proportions[k]) <= eps + 1e-12;
      if (!ok) continue;
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int i = 0; i < 8; ++i) s += alpha(i) * y[static_cast<std::size_t>(i)] * x(i, j);
        best = std::max(best, std::abs(s));
      }
    }
    CHECK(v.value == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("simplex projection") {
  Eigen::VectorXd v(3);
  v << 0.2, 0.3, 0.5;
  CHECK((project_simplex(v) - v).norm() < 1e-15);
  v << 2.0, 0.0, -1.0;
  Eigen::VectorXd e(3);
  e << 1.0, 0.0, 0.0;
  CHECK((project_simplex(v) - e).norm() < 1e-15);
  v << 0.5, 0.5, 0.5;
  CHECK((project_simplex(v) - Eigen::VectorXd::Constant(3, 1.0 / 3.0)).norm() < 1e-15);
}

TEST_CASE("MKL with one labeling is the plain SVM") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = oracle::random_matrix(rng, 10, 2);
  const Eigen::MatrixXd k = x * x.transpose();
  const std::vector<LabelVector> active{random_labels(rng, 10)};
  const MklResult r = solve_mkl(active, k, 1.0, 1e-5, 100);
  CHECK(r.weights.size() == 1);
  CHECK(r.weights(0) == 1.0);
  SolverOptions opts;
  opts.tol = 1e-6;
  const Eigen::VectorXd y = as_real(active)[0];
  const DualSolution s = solve_dual(k, y, 1.0, false, opts);
  CHECK(r.objective == doctest::Approx(s.objective_dual).epsilon(1e-12));
}

TEST_CASE("MKL with duplicated labeling keeps the single-labeling objective") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = oracle::random_matrix(rng, 10, 2);
  const Eigen::MatrixXd k = x * x.transpose();
  const LabelVector y = random_labels(rng, 10);
  const double single = solve_mkl(std::vector<LabelVector>{y}, k, 1.0, 1e-5, 100).objective;
  const MklResult two = solve_mkl(std::vector<LabelVector>{y, y}, k, 1.0, 1e-5, 100);
  CHECK(two.objective == doctest::Approx(single).epsilon(1e-6));
}

TEST_CASE("MKL stays on the simplex and descends") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd x = oracle::random_matrix(rng, 12, 3);
    const Eigen::MatrixXd k = x * x.transpose();
    std::vector<LabelVector> active;
    for (int t = 0; t < 4; ++t) active.push_back(random_labels(rng, 12));
    const MklResult r = solve_mkl(active, k, 1.0, 1e-5, 100);
    CHECK(r.max_simplex_error <= 1e-8);
    CHECK(std::abs(r.weights.sum() - 1.0) <= 1e-8);
    CHECK(r.weights.minCoeff() >= 0.0);
    for (std::size_t t = 1; t < r.objective_trace.size(); ++t) CHECK(r.objective_trace[t] <= r.objective_trace[t - 1]);
    CHECK(r.objective == doctest::Approx(mkl_objective(active, k, r.weights, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("label recovery") {
  ActiveSet a;
  a.labelings = {{1, -1, -1, 1, 1}};
  a.weights = Eigen::VectorXd::Ones(1);
  BagPartition part;
  part.bags = {{0, 1, 2}, {3, 4}};
  part.proportions = {1.0 / 3.0, 1.0};
  const Eigen::VectorXd y = recover_labels(a, part);
  Eigen::VectorXd expect(5);
  expect << 1, -1, -1, 1, 1;
  CHECK((y - expect).cwiseAbs().maxCoeff() <= 1e-8);

  // the flipped orientation fits the proportions better here
  part.proportions = {2.0 / 3.0, 0.0};
  CHECK((recover_labels(a, part) + expect).cwiseAbs().maxCoeff() <= 1e-8);

  ActiveSet two;
  two.labelings = {{1, 1, -1, -1}, {1, -1, 1, -1}};
  two.weights = Eigen::VectorXd::Constant(2, 0.5);
  two.weights << 0.7, 0.3;
  BagPartition p4;
  p4.bags = {{0, 1}, {2, 3}};
  p4.proportions = {1.0, 0.0};
  const Eigen::VectorXd r = recover_labels(two, p4);
  const Eigen::VectorXd ref = oracle::top_scaled_eigenvector(as_real(two.labelings), two.weights);
  CHECK(std::min((r - ref).norm(), (r + ref).norm()) < 1e-10);
  CHECK(r(0) > 0.0);

  ActiveSet empty;
  CHECK_THROWS_AS(recover_labels(empty, p4), ConfigError);
}

TEST_CASE("single feasible labeling reduces to the bias-free SVM") {
  std::mt19937_64 rng(13);
  Eigen::MatrixXd x = oracle::random_matrix(rng, 16, 2);
  BagPartition part;
  Eigen::VectorXd y(16);
  for (int k = 0; k < 4; ++k) {
    std::vector<std::size_t> bag;
    for (int t = 0; t < 4; ++t) {
      bag.push_back(static_cast<std::size_t>(4 * k + t));
      y(4 * k + t) = k % 2 ? 1.0 : -1.0;
    }
    part.bags.push_back(bag);
    part.proportions.push_back(k % 2 ? 1.0 : 0.0);
  }
  ConvParams params;
  const ConvFit fit = train_conv(x, part, params);
  REQUIRE(fit.active.labelings.size() == 1);
  CHECK(fit.stopped_on_duplicate);
  CHECK(fit.cuts == 1);
  const KernelCentering c = KernelCentering::fit(x * x.transpose());
  SolverOptions opts;
  opts.tol = 1e-6;
  const DualSolution ref = solve_dual(c.center_train(x * x.transpose()), y, params.C, false, opts);
  CHECK(fit.model.objective == doctest::Approx(ref.objective_dual).epsilon(1e-6));
  CHECK(std::abs(fit.model.objective - ref.objective_dual) <= 1e-4);
}

TEST_CASE("cutting-plane trace is non-increasing and labelings are feasible") {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 4; ++rep) {
    const Eigen::MatrixXd x = oracle::random_matrix(rng, 30, 3);
    BagPartition part;
    for (int k = 0; k < 6; ++k) {
      std::vector<std::size_t> bag;
      std::size_t pos = 0;
      for (int t = 0; t < 5; ++t) {
        bag.push_back(static_cast<std::size_t>(5 * k + t));
        pos += x(5 * k + t, 0) + 0.3 * x(5 * k + t, 1) > 0;
      }
      part.bags.push_back(bag);
      part.proportions.push_back(static_cast<double>(pos) / 5.0);
    }
    ConvParams params;
    params.eps = rep % 2 ? 0.0 : 0.1;
    params.kernel = rep < 2 ? KernelConfig::linear() : KernelConfig::rbf(0.5);
    const ConvFit fit = train_conv(x, part, params);
    CHECK(fit.cuts <= params.max_cuts);
    CHECK(fit.max_simplex_error <= 1e-8);
    for (std::size_t t = 1; t < fit.objective_trace.size(); ++t) {
      CHECK(fit.objective_trace[t] <= fit.objective_trace[t - 1]);
    }
    for (const auto& y : fit.active.labelings) {
      const auto pt = compute_proportions(y, part);
      for (std::size_t k = 0; k < pt.size(); ++k) CHECK(std::abs(pt[k] - part.proportions[k]) <= params.eps + 1e-12);
    }
    CHECK(fit.model.bias == 0.0);
    CHECK(fit.model.centering.has_value());
  }
}

TEST_CASE("parameter validation") {
  ConvParams p;
  p.eps = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.max_cuts = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(solve_mkl(std::vector<LabelVector>{}, Eigen::MatrixXd::Identity(2, 2), 1.0, 1e-5, 10), ConfigError);
}
