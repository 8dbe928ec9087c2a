#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "psvm/data.hpp"
#include "psvm/errors.hpp"

using namespace psvm;

namespace {

Dataset labeled(std::vector<int> labels) {
  Dataset d;
  d.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), 1);
  d.labels = std::move(labels);
  return d;
}

}  // namespace

TEST_CASE("sparse parser fills unlisted entries with zero") {
  Dataset d = parse_sparse_dataset("+1 1:0.5 3:-1\n-1 2:2\n");
  REQUIRE(d.size() == 2);
  REQUIRE(d.dim() == 3);
  Eigen::MatrixXd expect(2, 3);
  expect << 0.5, 0, -1, 0, 2, 0;
  CHECK(d.features == expect);
  CHECK(*d.labels == std::vector<int>{1, -1});
}

TEST_CASE("sparse parser edge cases") {
  CHECK(parse_sparse_dataset("").size() == 0);
  CHECK(parse_sparse_dataset("# only a comment\n\n").size() == 0);
  CHECK(parse_sparse_dataset("1 1:2 # trailing\n").features(0, 0) == 2.0);

  try {
    parse_sparse_dataset("1 1:1\n1 2:1 1:1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_sparse_dataset("1 0:1"), ParseError);
  CHECK_THROWS_AS(parse_sparse_dataset("x 1:1"), ParseError);
  CHECK_THROWS_AS(parse_sparse_dataset("1 1-1"), ParseError);
  CHECK_THROWS_AS(parse_sparse_dataset("1 1:abc"), ParseError);
  CHECK_THROWS_AS(parse_sparse_dataset("1 1:1 1:2"), ParseError);
}

TEST_CASE("label mappings") {
  CHECK(*parse_sparse_dataset("2 1:1\n0 1:1\n-3 1:1").labels == std::vector<int>{1, -1, -1});
  const auto d = parse_sparse_dataset("2 1:1\n3 1:1\n", LabelMapping::positive_class(3));
  CHECK(*d.labels == std::vector<int>{-1, 1});
}

TEST_CASE("attribute scaling") {
  Dataset d;
  d.features.resize(3, 3);
  d.features << 0, 3, -1, 5, 3, 1, 10, 3, 0;
  const Dataset s = scale_attributes(d);
  CHECK(s.features(0, 0) == -1.0);
  CHECK(s.features(1, 0) == 0.0);
  CHECK(s.features(2, 0) == 1.0);
  for (int i = 0; i < 3; ++i) CHECK(s.features(i, 1) == 0.0);
  CHECK(s.features(0, 2) == -1.0);
  CHECK(s.features(1, 2) == 1.0);
  CHECK(s.features(2, 2) == 0.0);
}

TEST_CASE("scaled attributes lie in [-1,1] and hit both ends") {
  Rng rng(5);
  Dataset d;
  d.features.resize(40, 6);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 6; ++j) d.features(i, j) = 100.0 * rng.uniform() - 37.0 + j * 1e6;
  const Dataset s = scale_attributes(d);
  for (int j = 0; j < 6; ++j) {
    CHECK(s.features.col(j).minCoeff() == -1.0);
    CHECK(s.features.col(j).maxCoeff() == 1.0);
  }
}

TEST_CASE("proportions") {
  BagPartition part;
  part.bags = {{0, 1, 2, 3}, {4, 5, 6}, {7, 8, 9, 10}};
  const std::vector<int> y{1, 1, -1, -1, -1, -1, -1, 1, -1, -1, -1};
  const auto p = compute_proportions(y, part);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.0);
  CHECK(p[2] == 0.25);
}

TEST_CASE("bag generation") {
  Rng rng(1);
  auto part = generate_bags(labeled({1, -1, 1, -1, 1, 1, -1, -1}), 2, rng);
  CHECK(part.num_bags() == 4);
  for (const auto& b : part.bags) CHECK(b.size() == 2);
  part.validate(8);

  part = generate_bags(labeled({1, -1, 1, -1, 1, 1, -1}), 4, rng);
  REQUIRE(part.num_bags() == 2);
  CHECK(part.bags[0].size() == 4);
  CHECK(part.bags[1].size() == 3);

  part = generate_bags(labeled({1, 1, 1, 1, 1}), 2, rng);
  for (double p : part.proportions) CHECK(p == 1.0);

  part = generate_bags(labeled({1, -1, 1}), 10, rng);
  CHECK(part.num_bags() == 1);
  CHECK(part.bags[0].size() == 3);

  CHECK_THROWS_AS(generate_bags(labeled({1}), 0, rng), ConfigError);
  Dataset unlabeled;
  unlabeled.features = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(generate_bags(unlabeled, 2, rng), ConfigError);
}

TEST_CASE("generated partitions are disjoint covers and proportions round-trip") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 5 + rng.below(60);
    std::vector<int> y(n);
    for (auto& v : y) v = rng.below(2) ? 1 : -1;
    const std::size_t size = 1 + rng.below(9);
    const BagPartition part = generate_bags(labeled(y), size, rng);
    part.validate(n);
    std::vector<std::size_t> all;
    for (const auto& b : part.bags) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);

    // Relabel with round(p|B|) positives per bag: proportions must survive.
    std::vector<int> relabeled(n, -1);
    for (std::size_t k = 0; k < part.num_bags(); ++k) {
      const auto r = static_cast<std::size_t>(std::lround(part.proportions[k] * part.bags[k].size()));
      for (std::size_t t = 0; t < r; ++t) relabeled[part.bags[k][t]] = 1;
    }
    CHECK(compute_proportions(relabeled, part) == part.proportions);
  }
}

TEST_CASE("bag-level error") {
  BagPartition part;
  part.bags = {{0, 1, 2, 3}};
  part.proportions = {0.5};
  CHECK(bag_error(std::vector<int>{1, 1, -1, -1}, part) == 0.0);
  CHECK(bag_error(std::vector<int>{1, 1, 1, 1}, part) == 0.5);
  part.bags = {{0, 1, 2, 3}, {4, 5, 6, 7}};
  part.proportions = {0.5, 0.25};
  CHECK(bag_error(std::vector<int>{1, 1, 1, -1, 1, 1, -1, -1}, part) == 0.5);
}

TEST_CASE("k-fold over bags") {
  BagPartition part;
  for (std::size_t k = 0; k < 11; ++k) {
    part.bags.push_back({k});
    part.proportions.push_back(1.0);
  }
  Rng rng(3);
  auto folds = kfold_over_bags(part, 5, rng);
  REQUIRE(folds.size() == 5);
  std::vector<std::size_t> sizes;
  std::multiset<std::size_t> seen;
  for (const auto& f : folds) {
    sizes.push_back(f.test_bag_ids.size());
    seen.insert(f.test_bag_ids.begin(), f.test_bag_ids.end());
    CHECK(f.train_bag_ids.size() + f.test_bag_ids.size() == 11);
    for (auto b : f.test_bag_ids) {
      CHECK(std::find(f.train_bag_ids.begin(), f.train_bag_ids.end(), b) == f.train_bag_ids.end());
    }
  }
  CHECK(sizes == std::vector<std::size_t>{3, 2, 2, 2, 2});
  CHECK(seen.size() == 11);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 11);

  part.bags.resize(10);
  part.proportions.resize(10);
  Rng a(9), b(9);
  const auto fa = kfold_over_bags(part, 5, a);
  const auto fb = kfold_over_bags(part, 5, b);
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(fa[f].test_bag_ids.size() == 2);
    CHECK(fa[f].test_bag_ids == fb[f].test_bag_ids);
  }
  CHECK_THROWS_AS(kfold_over_bags(part, 1, a), ConfigError);
  CHECK_THROWS_AS(kfold_over_bags(part, 11, a), ConfigError);
}

TEST_CASE("partition validation and selection") {
  BagPartition part;
  part.bags = {{0, 2}, {1, 3, 4}};
  part.proportions = {0.5, 1.0 / 3.0};
  part.validate(5);
  CHECK_THROWS_AS(part.validate(6), ConfigError);

  BagPartition overlap = part;
  overlap.bags[1][0] = 0;
  CHECK_THROWS_AS(overlap.validate(5), ConfigError);
  BagPartition bad_p = part;
  bad_p.proportions[0] = 1.5;
  CHECK_THROWS_AS(bad_p.validate(5), ConfigError);

  std::vector<std::size_t> inst;
  const std::vector<std::size_t> ids{1};
  const BagPartition sub = part.select(ids, inst);
  CHECK(inst == std::vector<std::size_t>{1, 3, 4});
  CHECK(sub.bags == std::vector<std::vector<std::size_t>>{{0, 1, 2}});
  CHECK(sub.proportions == std::vector<double>{1.0 / 3.0});
}

TEST_CASE("partition JSON round trip") {
  BagPartition part;
  part.bags = {{0, 2}, {1}};
  part.proportions = {0.5, 1.0};
  const BagPartition back = BagPartition::from_json(part.to_json());
  CHECK(back.bags == part.bags);
  CHECK(back.proportions == part.proportions);
  CHECK_THROWS_AS(BagPartition::from_json("{\"bags\": 3}"), ConfigError);
}

TEST_CASE("one-vs-rest and subsampling") {
  RawDataset raw;
  raw.features = Eigen::MatrixXd::Zero(10, 1);
  for (int i = 0; i < 10; ++i) raw.features(i, 0) = i;
  raw.labels = {1, 2, 3, 1, 2, 3, 1, 2, 3, 3};
  Rng rng(4);
  const Dataset d = one_vs_rest(raw, 1, rng);
  CHECK(d.size() == 6);
  CHECK(std::count(d.labels->begin(), d.labels->end(), 1) == 3);
  for (Eigen::Index i = 1; i < d.features.rows(); ++i) CHECK(d.features(i, 0) > d.features(i - 1, 0));

  const Dataset s = subsample(d, 4, rng);
  CHECK(s.size() == 4);
  CHECK(subsample(d, 100, rng).size() == 6);
}

TEST_CASE("derived seeds separate streams deterministically") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.below(7);
    CHECK(v < 7);
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
}
