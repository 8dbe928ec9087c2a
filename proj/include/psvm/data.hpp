#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace psvm {

/// Seeded random source. Every random decision in the library is drawn from
/// one of these; there is no global generator. The draws use only the raw
/// 64-bit Mersenne Twister stream, so results do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a master seed and a tag path.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

struct Dataset {
  Eigen::MatrixXd features;                // N x D, one row per instance
  std::optional<std::vector<int>> labels;  // ground truth in {-1,+1}; evaluation only
  std::string name;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  /// Rows (and labels) at the given indices, in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Throws ConfigError if labels are present but not in {-1,+1} or sized wrong.
  void validate() const;
};

/// Sparse-format file contents before the labels are binarized.
struct RawDataset {
  Eigen::MatrixXd features;
  std::vector<double> labels;
};

/// How numeric labels in a sparse file become {-1,+1}.
struct LabelMapping {
  enum class Kind { by_sign, positive_value };
  Kind kind = Kind::by_sign;
  double positive = 1.0;

  static LabelMapping by_sign() { return {}; }
  static LabelMapping positive_class(double value) { return {Kind::positive_value, value}; }

  int map(double raw) const;
};

RawDataset parse_sparse_raw(std::istream& in);
RawDataset parse_sparse_raw(std::string_view text);

/// Parses `<label> <idx>:<val> ...` lines (1-based, strictly increasing
/// indices, `#` comments). Unlisted entries are zero.
Dataset parse_sparse_dataset(std::istream& in, LabelMapping mapping = {});
Dataset parse_sparse_dataset(std::string_view text, LabelMapping mapping = {});
Dataset load_sparse_dataset(const std::string& path, LabelMapping mapping = {});

/// Maps every attribute affinely so its observed min goes to -1 and max to +1.
/// Constant attributes become 0.
Dataset scale_attributes(const Dataset& d);

/// Disjoint index sets covering 0..N-1, with the positive fraction of each.
struct BagPartition {
  std::vector<std::vector<std::size_t>> bags;
  std::vector<double> proportions;

  std::size_t num_bags() const { return bags.size(); }
  std::size_t num_instances() const;
  std::vector<std::size_t> bag_sizes() const;

  /// Throws ConfigError unless bags are disjoint, cover 0..n-1 and every
  /// proportion lies in [0,1].
  void validate(std::size_t n) const;

  /// Partition restricted to `bag_ids`, with instances renumbered 0..m-1 in
  /// bag order. `instances` receives the original index of every new index.
  BagPartition select(std::span<const std::size_t> bag_ids,
                      std::vector<std::size_t>& instances) const;

  std::string to_json() const;
  static BagPartition from_json(std::string_view text);
};

struct FoldSplit {
  std::vector<std::size_t> train_bag_ids;
  std::vector<std::size_t> test_bag_ids;
  std::size_t fold_index = 0;
};

/// Fraction of +1 labels per bag.
std::vector<double> compute_proportions(std::span<const int> labels, const BagPartition& part);

/// Sum over bags of |p~_k(pred) - p_k|, the only tuning signal available
/// without instance labels.
double bag_error(std::span<const int> predicted, const BagPartition& part);

/// Random permutation chunked into bags of `bag_size`; a shorter final bag
/// holds the remainder. Requires labels.
BagPartition generate_bags(const Dataset& d, std::size_t bag_size, Rng& rng);

/// Shuffles bag ids and deals them into k folds of near-equal size; the
/// first K mod k folds get one extra bag.
std::vector<FoldSplit> kfold_over_bags(const BagPartition& part, std::size_t k, Rng& rng);

/// One-vs-rest binary problem: every instance of `positive` plus an equal
/// number of others drawn without replacement. Row order follows the source.
Dataset one_vs_rest(const RawDataset& raw, double positive, Rng& rng);

/// Uniform subsample without replacement, in source order.
Dataset subsample(const Dataset& d, std::size_t max_points, Rng& rng);

}  // namespace psvm
