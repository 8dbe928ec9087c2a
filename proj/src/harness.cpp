#include "psvm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "psvm/alter.hpp"
#include "psvm/conv.hpp"
#include "psvm/errors.hpp"
#include "psvm/invcal.hpp"

namespace psvm {

double instance_accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw ConfigError("prediction and truth lengths differ");
  if (pred.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::pair<Dataset, BagPartition> make_toy_dataset() {
  struct Point {
    double x, y;
    int label;
  };
  const double six[] = {-0.5, -0.3, -0.1, 0.1, 0.3, 0.5};
  const double four[] = {-0.3, -0.1, 0.1, 0.3};
  std::vector<Point> pts;
  for (double j : six) pts.push_back({1.0, j, 1});
  for (double j : four) pts.push_back({-4.0, j, -1});
  for (double j : four) pts.push_back({4.0, j, 1});
  for (double j : six) pts.push_back({-1.0, j, -1});

  Dataset d;
  d.name = "toy";
  d.features.resize(static_cast<Eigen::Index>(pts.size()), 2);
  std::vector<int> labels;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d.features(static_cast<Eigen::Index>(i), 0) = pts[i].x;
    d.features(static_cast<Eigen::Index>(i), 1) = pts[i].y;
    labels.push_back(pts[i].label);
  }
  d.labels = std::move(labels);

  BagPartition part;
  part.bags.resize(2);
  for (std::size_t i = 0; i < 10; ++i) part.bags[0].push_back(i);
  for (std::size_t i = 10; i < 20; ++i) part.bags[1].push_back(i);
  part.proportions = compute_proportions(*d.labels, part);
  return {std::move(d), std::move(part)};
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (bag_sizes.empty()) throw ConfigError("at least one bag size is required");
  for (auto b : bag_sizes) {
    if (b == 0) throw ConfigError("bag sizes must be positive");
  }
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (inner_folds < 2) throw ConfigError("inner_folds must be at least 2");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (kernel == KernelConfig::Kind::rbf && gamma_grid.empty()) throw ConfigError("gamma grid is empty");
  for (Method m : methods) {
    if (method_grid(m, *this).empty()) throw ConfigError("empty parameter grid for " + method_name(m));
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + v + "' for " + key);
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + v + "' for " + key);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean '" + v + "' for " + key);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));

    if (key == "dataset") cfg.dataset = val;
    else if (key == "method" || key == "methods") {
      cfg.methods.clear();
      for (const auto& s : split_list(val)) cfg.methods.push_back(parse_method(s));
    } else if (key == "kernel") cfg.kernel = KernelConfig::parse(val, 1.0).kind;
    else if (key == "gamma") cfg.gamma_grid = to_doubles(key, val);
    else if (key == "bag_size" || key == "bag_sizes") {
      cfg.bag_sizes.clear();
      for (const auto& s : split_list(val)) cfg.bag_sizes.push_back(to_uint(key, s));
    } else if (key == "folds") cfg.folds = to_uint(key, val);
    else if (key == "trials") cfg.trials = to_uint(key, val);
    else if (key == "inner_folds") cfg.inner_folds = to_uint(key, val);
    else if (key == "restarts") cfg.restarts = to_uint(key, val);
    else if (key == "C") cfg.C_grid = to_doubles(key, val);
    else if (key == "Cp") cfg.alter_Cp_grid = to_doubles(key, val);
    else if (key == "invcal_Cp") cfg.invcal_Cp_grid = to_doubles(key, val);
    else if (key == "eps") cfg.eps_grid = to_doubles(key, val);
    else if (key == "seed") cfg.seed = to_uint(key, val);
    else if (key == "positive_class") cfg.positive_class = to_double(key, val);
    else if (key == "max_points") cfg.max_points = to_uint(key, val);
    else if (key == "scale") cfg.scale = to_bool(key, val);
    else if (key == "threads") cfg.threads = to_uint(key, val);
    else if (key == "record_timing") cfg.record_timing = to_bool(key, val);
    else throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<GridPoint> method_grid(Method m, const ExperimentConfig& cfg) {
  std::vector<double> gammas{0.0};
  if (cfg.kernel == KernelConfig::Kind::rbf) gammas = cfg.gamma_grid;
  std::vector<GridPoint> out;
  for (double g : gammas) {
    switch (m) {
      case Method::alter:
        for (double c : cfg.C_grid)
          for (double cp : cfg.alter_Cp_grid) out.push_back({c, cp, 0.0, g});
        break;
      case Method::conv:
        for (double c : cfg.C_grid)
          for (double e : cfg.eps_grid) out.push_back({c, 0.0, e, g});
        break;
      case Method::invcal:
        for (double cp : cfg.invcal_Cp_grid)
          for (double e : cfg.eps_grid) out.push_back({0.0, cp, e, g});
        break;
    }
  }
  return out;
}

PsvmModel fit_method(Method m, const GridPoint& point, const Eigen::MatrixXd& features, const BagPartition& part,
                     const ExperimentConfig& cfg, std::uint64_t seed) {
  const KernelConfig kernel =
      cfg.kernel == KernelConfig::Kind::rbf ? KernelConfig::rbf(point.gamma) : KernelConfig::linear();
  switch (m) {
    case Method::alter: {
      AlterParams p;
      p.C = point.C;
      p.C_p = point.C_p;
      p.kernel = kernel;
      p.restarts = cfg.restarts;
      p.seed = seed;
      return train_alter(features, part, p).model;
    }
    case Method::conv: {
      ConvParams p;
      p.C = point.C;
      p.eps = point.eps;
      p.kernel = kernel;
      p.seed = seed;
      return train_conv(features, part, p).model;
    }
    case Method::invcal: {
      InvCalParams p;
      p.C_p = point.C_p;
      p.eps_margin = point.eps;
      p.kernel = kernel;
      return train_invcal(features, part, p).model;
    }
  }
  throw ConfigError("unknown method");
}

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

struct Job {
  Method method;
  std::size_t bag_size, trial, fold;
};

FoldRecord run_job(const Job& job, const ExperimentConfig& cfg, const Dataset& data) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng bag_rng(derive_seed(cfg.seed, {job.bag_size, job.trial}));
  const BagPartition part = generate_bags(data, job.bag_size, bag_rng);
  Rng fold_rng(derive_seed(cfg.seed, {job.bag_size, job.trial, 1}));
  const FoldSplit split = kfold_over_bags(part, cfg.folds, fold_rng)[job.fold];

  std::vector<std::size_t> train_idx, test_idx;
  const BagPartition train_part = part.select(split.train_bag_ids, train_idx);
  part.select(split.test_bag_ids, test_idx);
  const Eigen::MatrixXd train_x = rows_of(data.features, train_idx);
  const Eigen::MatrixXd test_x = rows_of(data.features, test_idx);

  const auto grid = method_grid(job.method, cfg);
  FoldRecord rec;
  rec.method = job.method;
  rec.bag_size = job.bag_size;
  rec.trial = job.trial;
  rec.fold = job.fold;

  const std::size_t inner = std::min(cfg.inner_folds, train_part.num_bags());
  if (grid.size() > 1 && inner >= 2) {
    Rng inner_rng(derive_seed(cfg.seed, {job.bag_size, job.trial, job.fold, 2}));
    const auto inner_splits = kfold_over_bags(train_part, inner, inner_rng);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double err = 0.0;
      for (std::size_t s = 0; s < inner_splits.size(); ++s) {
        std::vector<std::size_t> fit_idx, val_idx;
        const BagPartition fit_part = train_part.select(inner_splits[s].train_bag_ids, fit_idx);
        const BagPartition val_part = train_part.select(inner_splits[s].test_bag_ids, val_idx);
        const std::uint64_t seed = derive_seed(cfg.seed, {job.bag_size, job.trial, job.fold, 4, g, s});
        const PsvmModel model = fit_method(job.method, grid[g], rows_of(train_x, fit_idx), fit_part, cfg, seed);
        err += bag_error(model.predict(rows_of(train_x, val_idx)), val_part);
      }
      if (err < best) {
        best = err;
        rec.grid_index = g;
      }
    }
    rec.tuning_error = best;
  }
  rec.chosen = grid[rec.grid_index];

  const std::uint64_t seed = derive_seed(cfg.seed, {job.bag_size, job.trial, job.fold, 3});
  const PsvmModel model = fit_method(job.method, rec.chosen, train_x, train_part, cfg, seed);
  std::vector<int> truth;
  for (auto i : test_idx) truth.push_back((*data.labels)[i]);
  rec.accuracy = instance_accuracy(model.predict(test_x), truth);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

nlohmann::ordered_json grid_json(const GridPoint& g) {
  return {{"C", g.C}, {"C_p", g.C_p}, {"eps", g.eps}, {"gamma", g.gamma}};
}

}  // namespace

Dataset load_experiment_data(const ExperimentConfig& cfg) {
  Dataset d;
  if (cfg.dataset == "toy") {
    d = make_toy_dataset().first;
  } else if (cfg.positive_class) {
    std::ifstream in(cfg.dataset);
    if (!in) throw ConfigError("cannot open dataset '" + cfg.dataset + "'");
    Rng rng(derive_seed(cfg.seed, {0x0DA7A}));
    d = one_vs_rest(parse_sparse_raw(in), *cfg.positive_class, rng);
    d.name = cfg.dataset;
  } else {
    d = load_sparse_dataset(cfg.dataset);
  }
  if (cfg.max_points > 0 && d.size() > cfg.max_points) {
    Rng rng(derive_seed(cfg.seed, {0x5AB5}));
    d = subsample(d, cfg.max_points, rng);
  }
  if (cfg.scale) d = scale_attributes(d);
  return d;
}

std::vector<Aggregate> ExperimentResult::recompute_aggregates() const {
  std::vector<Aggregate> out;
  for (Method m : config.methods) {
    for (auto b : config.bag_sizes) {
      Aggregate a;
      a.method = m;
      a.bag_size = b;
      a.trial_means.assign(config.trials, 0.0);
      std::vector<std::size_t> counts(config.trials, 0);
      for (const auto& r : records) {
        if (r.method != m || r.bag_size != b) continue;
        a.trial_means[r.trial] += r.accuracy;
        ++counts[r.trial];
      }
      for (std::size_t t = 0; t < config.trials; ++t) {
        if (counts[t]) a.trial_means[t] /= static_cast<double>(counts[t]);
      }
      double sum = 0.0;
      for (double v : a.trial_means) sum += v;
      a.mean = sum / static_cast<double>(a.trial_means.size());
      double ss = 0.0;
      for (double v : a.trial_means) ss += (v - a.mean) * (v - a.mean);
      a.stddev = a.trial_means.size() > 1 ? std::sqrt(ss / static_cast<double>(a.trial_means.size() - 1)) : 0.0;
      out.push_back(std::move(a));
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  data.validate();
  if (!data.labels) throw ConfigError("evaluation needs ground-truth labels");
  for (auto b : cfg.bag_sizes) {
    const std::size_t bags = (data.size() + b - 1) / b;
    if (bags < cfg.folds) {
      throw ConfigError("bag size " + std::to_string(b) + " leaves " + std::to_string(bags) + " bags for " +
                        std::to_string(cfg.folds) + " folds");
    }
  }

  std::vector<Job> jobs;
  for (Method m : cfg.methods)
    for (auto b : cfg.bag_sizes)
      for (std::size_t t = 0; t < cfg.trials; ++t)
        for (std::size_t f = 0; f < cfg.folds; ++f) jobs.push_back({m, b, t, f});

  ExperimentResult res;
  res.config = cfg;
  res.num_instances = data.size();
  res.records.resize(jobs.size());
  if (cfg.threads <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) res.records[j] = run_job(jobs[j], cfg, data);
  } else {
    std::vector<std::exception_ptr> errors(jobs.size());
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(cfg.threads, jobs.size());
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t j = w; j < jobs.size(); j += workers) {
          try {
            res.records[j] = run_job(jobs[j], cfg, data);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  res.aggregates = res.recompute_aggregates();
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, load_experiment_data(cfg));
}

std::string ExperimentResult::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json c;
  c["dataset"] = config.dataset;
  std::vector<std::string> methods;
  for (Method m : config.methods) methods.push_back(method_name(m));
  c["methods"] = methods;
  c["kernel"] = config.kernel == KernelConfig::Kind::rbf ? "rbf" : "linear";
  if (config.kernel == KernelConfig::Kind::rbf) c["gamma"] = config.gamma_grid;
  c["bag_sizes"] = config.bag_sizes;
  c["folds"] = config.folds;
  c["trials"] = config.trials;
  c["inner_folds"] = config.inner_folds;
  c["restarts"] = config.restarts;
  c["C"] = config.C_grid;
  c["Cp"] = config.alter_Cp_grid;
  c["invcal_Cp"] = config.invcal_Cp_grid;
  c["eps"] = config.eps_grid;
  c["seed"] = config.seed;
  if (config.positive_class) c["positive_class"] = *config.positive_class;
  c["max_points"] = config.max_points;
  c["scale"] = config.scale;
  j["config"] = c;
  j["num_instances"] = num_instances;

  nlohmann::ordered_json recs = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json o;
    o["method"] = method_name(r.method);
    o["bag_size"] = r.bag_size;
    o["trial"] = r.trial;
    o["fold"] = r.fold;
    o["grid_index"] = r.grid_index;
    o["params"] = grid_json(r.chosen);
    o["tuning_error"] = r.tuning_error;
    o["accuracy"] = r.accuracy;
    if (config.record_timing) o["seconds"] = r.seconds;
    recs.push_back(std::move(o));
  }
  j["records"] = recs;

  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const auto& a : aggregates) {
    aggs.push_back({{"method", method_name(a.method)},
                    {"bag_size", a.bag_size},
                    {"trial_means", a.trial_means},
                    {"mean", a.mean},
                    {"stddev", a.stddev}});
  }
  j["aggregates"] = aggs;
  return j.dump(2) + "\n";
}

std::string ExperimentResult::to_csv() const {
  std::ostringstream out;
  out << "method";
  for (auto b : config.bag_sizes) out << ",bag_" << b;
  out << "\n";
  char cell[64];
  for (Method m : config.methods) {
    out << method_name(m);
    for (auto b : config.bag_sizes) {
      for (const auto& a : aggregates) {
        if (a.method != m || a.bag_size != b) continue;
        std::snprintf(cell, sizeof cell, "%.2f+-%.2f", 100.0 * a.mean, 100.0 * a.stddev);
        out << "," << cell;
      }
    }
    out << "\n";
  }
  return out.str();
}

std::vector<ToyOutcome> run_toy(const std::vector<Method>& methods, std::uint64_t seed) {
  auto [data, part] = make_toy_dataset();
  ExperimentConfig cfg;
  cfg.seed = seed;
  std::vector<ToyOutcome> out;
  for (Method m : methods) {
    GridPoint point;
    switch (m) {
      case Method::alter: point = {1.0, 10.0, 0.0, 0.0}; break;
      case Method::conv: point = {1.0, 0.0, 0.0, 0.0}; break;
      case Method::invcal: point = {0.0, 1.0, 0.0, 0.0}; break;
    }
    const PsvmModel model = fit_method(m, point, data.features, part, cfg, derive_seed(seed, {7}));
    ToyOutcome o;
    o.method = m;
    o.predictions = model.predict(data.features);
    o.accuracy = instance_accuracy(o.predictions, *data.labels);
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace psvm
