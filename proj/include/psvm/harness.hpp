#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "psvm/data.hpp"
#include "psvm/kernels.hpp"
#include "psvm/model.hpp"

namespace psvm {

/// Fraction of positions where `pred` and `truth` agree.
double instance_accuracy(std::span<const int> pred, std::span<const int> truth);

/// Two bags in the plane whose means sit on the wrong side of the separating
/// line x1 = 0: bag 1 (p = 0.6) holds positives near (1, .) and negatives
/// near (-4, .), bag 2 (p = 0.4) positives near (4, .) and negatives near
/// (-1, .).
std::pair<Dataset, BagPartition> make_toy_dataset();

/// One hyper-parameter setting. Fields a method does not use stay at 0.
struct GridPoint {
  double C = 0.0;
  double C_p = 0.0;
  double eps = 0.0;
  double gamma = 0.0;
};

struct ExperimentConfig {
  std::string dataset = "toy";  // sparse file path, or "toy"
  std::vector<Method> methods{Method::alter};
  KernelConfig::Kind kernel = KernelConfig::Kind::linear;
  std::vector<double> gamma_grid{0.01, 0.1, 1.0};
  std::vector<std::size_t> bag_sizes{2};
  std::size_t folds = 5;
  std::size_t trials = 5;
  std::size_t inner_folds = 2;
  std::size_t restarts = 10;
  std::vector<double> C_grid{0.1, 1.0, 10.0};
  std::vector<double> alter_Cp_grid{1.0, 10.0, 100.0};
  std::vector<double> invcal_Cp_grid{0.1, 1.0, 10.0};
  std::vector<double> eps_grid{0.0, 0.01, 0.1};
  std::uint64_t seed = 0;
  std::optional<double> positive_class;  // one-vs-rest on this raw label
  std::size_t max_points = 0;            // uniform subsample when nonzero
  bool scale = true;
  std::size_t threads = 1;
  bool record_timing = false;

  void validate() const;
};

/// Flat `key = value` text; list values are comma separated, `#` starts a
/// comment. Unknown keys are a ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Grid in declaration order: gamma outermost (rbf only), then the method's
/// own parameters in the order C, C_p, eps.
std::vector<GridPoint> method_grid(Method m, const ExperimentConfig& cfg);

/// Trains one method from features and bags only.
PsvmModel fit_method(Method m, const GridPoint& point, const Eigen::MatrixXd& features, const BagPartition& part,
                     const ExperimentConfig& cfg, std::uint64_t seed);

struct FoldRecord {
  Method method = Method::alter;
  std::size_t bag_size = 0;
  std::size_t trial = 0;
  std::size_t fold = 0;
  std::size_t grid_index = 0;
  GridPoint chosen;
  double tuning_error = 0.0;  // summed inner-validation bag error of the chosen point
  double accuracy = 0.0;
  double seconds = 0.0;
};

struct Aggregate {
  Method method = Method::alter;
  std::size_t bag_size = 0;
  std::vector<double> trial_means;  // mean fold accuracy per trial
  double mean = 0.0;
  double stddev = 0.0;              // sample standard deviation over trials
};

struct ExperimentResult {
  ExperimentConfig config;
  std::size_t num_instances = 0;
  std::vector<FoldRecord> records;  // sorted by method, bag size, trial, fold
  std::vector<Aggregate> aggregates;

  /// Aggregates rebuilt from `records`.
  std::vector<Aggregate> recompute_aggregates() const;
  std::string to_json() const;
  /// Rows are methods, columns bag sizes, cells mean and stddev in percent.
  std::string to_csv() const;
};

/// Loads, optionally reduces and scales the configured dataset.
Dataset load_experiment_data(const ExperimentConfig& cfg);

/// Repeated bag generation, outer cross-validation over bags, inner
/// cross-validation selecting the grid point with the lowest bag error, and
/// retraining on the full outer-training bags.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct ToyOutcome {
  Method method = Method::alter;
  double accuracy = 0.0;
  LabelVector predictions;
};

/// Trains each method on the two toy bags and scores every instance.
std::vector<ToyOutcome> run_toy(const std::vector<Method>& methods, std::uint64_t seed = 0);

}  // namespace psvm
