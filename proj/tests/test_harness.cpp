#include <doctest.h>

#include <type_traits>

#include "psvm/errors.hpp"
#include "psvm/harness.hpp"

using namespace psvm;

TEST_CASE("instance accuracy") {
  const std::vector<int> a{1, -1, 1, 1};
  CHECK(instance_accuracy(a, a) == 1.0);
  CHECK(instance_accuracy(a, std::vector<int>{-1, 1, -1, -1}) == 0.0);
  CHECK(instance_accuracy(a, std::vector<int>{1, -1, 1, -1}) == 0.75);
  CHECK_THROWS_AS(instance_accuracy(a, std::vector<int>{1}), ConfigError);
}

TEST_CASE("toy construction") {
  const auto [d, part] = make_toy_dataset();
  REQUIRE(d.size() == 20);
  REQUIRE(part.num_bags() == 2);
  CHECK(part.proportions == std::vector<double>{0.6, 0.4});
  double m1 = 0, m2 = 0;
  for (auto i : part.bags[0]) m1 += d.features(static_cast<Eigen::Index>(i), 0);
  for (auto i : part.bags[1]) m2 += d.features(static_cast<Eigen::Index>(i), 0);
  CHECK(m1 / 10.0 == doctest::Approx(-1.0));
  CHECK(m2 / 10.0 == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(((*d.labels)[i] == 1) == (d.features(static_cast<Eigen::Index>(i), 0) > 0));
  }
}

TEST_CASE("grids follow declaration order") {
  ExperimentConfig cfg;
  const auto alter = method_grid(Method::alter, cfg);
  REQUIRE(alter.size() == 9);
  CHECK(alter[0].C == 0.1);
  CHECK(alter[0].C_p == 1.0);
  CHECK(alter[1].C_p == 10.0);
  CHECK(alter[3].C == 1.0);
  const auto inv = method_grid(Method::invcal, cfg);
  CHECK(inv[0].C_p == 0.1);
  CHECK(inv[1].eps == 0.01);
  cfg.kernel = KernelConfig::Kind::rbf;
  const auto conv = method_grid(Method::conv, cfg);
  REQUIRE(conv.size() == 27);
  CHECK(conv[0].gamma == 0.01);
  CHECK(conv[9].gamma == 0.1);
}

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = parse_config(
      "# comment\n"
      "dataset = data/x.txt\n"
      "methods = alter, invcal\n"
      "kernel = rbf\n"
      "gamma = 0.5\n"
      "bag_sizes = 2, 8\n"
      "folds = 3\n"
      "trials = 2\n"
      "C = 1\n"
      "Cp = 10\n"
      "eps = 0\n"
      "seed = 42\n");
  CHECK(cfg.dataset == "data/x.txt");
  CHECK(cfg.methods == std::vector<Method>{Method::alter, Method::invcal});
  CHECK(cfg.kernel == KernelConfig::Kind::rbf);
  CHECK(cfg.gamma_grid == std::vector<double>{0.5});
  CHECK(cfg.bag_sizes == std::vector<std::size_t>{2, 8});
  CHECK(cfg.folds == 3);
  CHECK(cfg.trials == 2);
  CHECK(cfg.seed == 42);
  CHECK_THROWS_AS(parse_config("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("folds = two\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("folds = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("method = svm\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("C =\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), ConfigError);
}

TEST_CASE("trainers see features and bags only") {
  // The training entry point takes no label argument at all.
  using Fn = PsvmModel (*)(Method, const GridPoint&, const Eigen::MatrixXd&, const BagPartition&,
                           const ExperimentConfig&, std::uint64_t);
  static_assert(std::is_same_v<decltype(&fit_method), Fn>);

}

TEST_CASE("experiment records and aggregates") {
  ExperimentConfig cfg;
  cfg.methods = {Method::invcal, Method::alter};
  cfg.folds = 2;
  cfg.trials = 2;
  cfg.bag_sizes = {2, 5};
  cfg.restarts = 2;
  cfg.C_grid = {1.0};
  cfg.alter_Cp_grid = {10.0};
  const Dataset d = make_toy_dataset().first;
  const ExperimentResult r = run_experiment(cfg, d);
  CHECK(r.records.size() == 2 * 2 * 2 * 2);
  CHECK(r.aggregates.size() == 4);
  const auto again = r.recompute_aggregates();
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(std::abs(again[i].mean - r.aggregates[i].mean) <= 1e-12);
    CHECK(std::abs(again[i].stddev - r.aggregates[i].stddev) <= 1e-12);
  }
  for (const auto& rec : r.records) CHECK((rec.accuracy >= 0.0 && rec.accuracy <= 1.0));
  CHECK(r.to_json() == run_experiment(cfg, d).to_json());
  CHECK(r.to_json().find("seconds") == std::string::npos);
  const std::string csv = r.to_csv();
  CHECK(csv.rfind("method,bag_2,bag_5\n", 0) == 0);
  CHECK(csv.find("invcal,") != std::string::npos);

  cfg.bag_sizes = {20};
  CHECK_THROWS_AS(run_experiment(cfg, d), ConfigError);
}

TEST_CASE("toy outcomes") {
  const auto out = run_toy({Method::alter, Method::conv, Method::invcal});
  CHECK(out[0].accuracy == 1.0);
  CHECK(out[1].accuracy == 1.0);
  CHECK(out[2].accuracy == 0.0);
}
