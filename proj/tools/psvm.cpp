#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psvm/errors.hpp"
#include "psvm/harness.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string dataset;
  std::vector<std::string> methods;
  std::string kernel;
  std::vector<double> gamma, C, Cp, eps;
  std::vector<std::size_t> bag_sizes;
  std::size_t folds = 0, trials = 0, restarts = 0, threads = 0;
  long long seed = -1;
  std::string out;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--dataset", o.dataset, "sparse-format data file, or 'toy'");
  app->add_option("--method", o.methods, "alter, conv or invcal")->delimiter(',');
  app->add_option("--kernel", o.kernel, "linear or rbf");
  app->add_option("--gamma", o.gamma, "rbf width")->delimiter(',');
  app->add_option("--C", o.C, "loss weight")->delimiter(',');
  app->add_option("--Cp", o.Cp, "proportion weight")->delimiter(',');
  app->add_option("--eps", o.eps, "proportion tolerance or tube width")->delimiter(',');
  app->add_option("--bag-size", o.bag_sizes, "bag size")->delimiter(',');
  app->add_option("--folds", o.folds, "outer folds");
  app->add_option("--trials", o.trials, "repetitions");
  app->add_option("--restarts", o.restarts, "alter restarts");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--threads", o.threads, "worker threads");
  app->add_option("--out", o.out, "output path");
}

psvm::ExperimentConfig build_config(const Overrides& o) {
  psvm::ExperimentConfig cfg = o.config.empty() ? psvm::ExperimentConfig{} : psvm::load_config(o.config);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (!o.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : o.methods) cfg.methods.push_back(psvm::parse_method(m));
  }
  if (!o.kernel.empty()) cfg.kernel = psvm::KernelConfig::parse(o.kernel, 1.0).kind;
  if (!o.gamma.empty()) cfg.gamma_grid = o.gamma;
  if (!o.C.empty()) cfg.C_grid = o.C;
  if (!o.Cp.empty()) {
    cfg.alter_Cp_grid = o.Cp;
    cfg.invcal_Cp_grid = o.Cp;
  }
  if (!o.eps.empty()) cfg.eps_grid = o.eps;
  if (!o.bag_sizes.empty()) cfg.bag_sizes = o.bag_sizes;
  if (o.folds) cfg.folds = o.folds;
  if (o.trials) cfg.trials = o.trials;
  if (o.restarts) cfg.restarts = o.restarts;
  if (o.threads) cfg.threads = o.threads;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  cfg.validate();
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw psvm::ConfigError("cannot write '" + path + "'");
  f << text;
}

int cmd_train(const Overrides& o) {
  psvm::ExperimentConfig cfg = build_config(o);
  if (cfg.methods.size() != 1) throw psvm::ConfigError("train takes exactly one --method");
  const psvm::Method method = cfg.methods.front();
  const auto grid = psvm::method_grid(method, cfg);
  const psvm::GridPoint point = grid.front();

  psvm::Dataset data = psvm::load_experiment_data(cfg);
  psvm::BagPartition part;
  if (cfg.dataset == "toy") {
    part = psvm::make_toy_dataset().second;
  } else {
    psvm::Rng rng(psvm::derive_seed(cfg.seed, {cfg.bag_sizes.front(), 0}));
    part = psvm::generate_bags(data, cfg.bag_sizes.front(), rng);
  }
  const psvm::PsvmModel model = psvm::fit_method(method, point, data.features, part, cfg, cfg.seed);
  const auto pred = model.predict(data.features);

  nlohmann::ordered_json metrics;
  metrics["method"] = psvm::method_name(method);
  metrics["params"] = {{"C", point.C}, {"C_p", point.C_p}, {"eps", point.eps}, {"gamma", point.gamma}};
  metrics["instances"] = data.size();
  metrics["bags"] = part.num_bags();
  metrics["objective"] = model.objective;
  metrics["converged"] = model.converged;
  metrics["bag_error"] = psvm::bag_error(pred, part);
  if (data.labels) metrics["train_accuracy"] = psvm::instance_accuracy(pred, *data.labels);
  std::cout << metrics.dump(2) << "\n";
  if (!o.out.empty()) write_file(o.out, model.to_json());
  return 0;
}

int cmd_bench(const Overrides& o) {
  const psvm::ExperimentConfig cfg = build_config(o);
  const psvm::ExperimentResult res = psvm::run_experiment(cfg);
  const std::string base = o.out.empty() ? "report" : o.out;
  write_file(base + ".json", res.to_json());
  write_file(base + ".csv", res.to_csv());
  std::cout << res.to_csv();
  return 0;
}

int cmd_toy(const Overrides& o) {
  std::vector<psvm::Method> methods{psvm::Method::alter, psvm::Method::conv, psvm::Method::invcal};
  if (!o.methods.empty()) {
    methods.clear();
    for (const auto& m : o.methods) methods.push_back(psvm::parse_method(m));
  }
  const auto outcomes = psvm::run_toy(methods, o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : 0);
  for (const auto& r : outcomes) {
    std::printf("%-7s accuracy %.2f%%\n", psvm::method_name(r.method).c_str(), 100.0 * r.accuracy);
  }
  return 0;
}

int cmd_inspect(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw psvm::ConfigError("cannot open report '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw psvm::ConfigError(std::string("bad report: ") + e.what());
  }
  const auto& c = j.at("config");
  std::printf("dataset %s, %zu instances, kernel %s, %zu folds x %zu trials, seed %llu\n",
              c.at("dataset").get<std::string>().c_str(), j.at("num_instances").get<std::size_t>(),
              c.at("kernel").get<std::string>().c_str(), c.at("folds").get<std::size_t>(),
              c.at("trials").get<std::size_t>(), c.at("seed").get<unsigned long long>());
  for (const auto& a : j.at("aggregates")) {
    std::printf("%-7s bag %4zu  %6.2f +- %.2f\n", a.at("method").get<std::string>().c_str(),
                a.at("bag_size").get<std::size_t>(), 100.0 * a.at("mean").get<double>(),
                100.0 * a.at("stddev").get<double>());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning with label proportions"};
  app.require_subcommand(1);
  Overrides o;

  auto* train = app.add_subcommand("train", "train one method with explicit hyper-parameters");
  add_common(train, o);
  train->add_option("--config", o.config, "flat key = value config file");

  auto* bench = app.add_subcommand("bench", "cross-validated benchmark; writes <out>.json and <out>.csv");
  add_common(bench, o);
  bench->add_option("--config", o.config, "flat key = value config file");

  auto* toy = app.add_subcommand("toy", "two-bag toy experiment");
  toy->add_option("--method", o.methods, "methods to run")->delimiter(',');
  toy->add_option("--seed", o.seed, "seed");

  std::string report;
  auto* inspect = app.add_subcommand("inspect", "summarize a JSON report");
  inspect->add_option("report", report, "report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return cmd_train(o);
    if (*bench) return cmd_bench(o);
    if (*toy) return cmd_toy(o);
    if (*inspect) return cmd_inspect(report);
  } catch (const psvm::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const psvm::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const psvm::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const psvm::DegenerateKernelError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
