#include "psvm/alter.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <thread>

#include "psvm/errors.hpp"

namespace psvm {

void AlterParams::validate() const {
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (!(C_p > 0.0)) throw ConfigError("C_p must be positive");
  if (!(anneal_delta > 0.0)) throw ConfigError("annealing step must be positive");
  if (!(anneal_start_factor > 0.0 && anneal_start_factor < 1.0)) {
    throw ConfigError("annealing start factor must lie in (0,1)");
  }
  if (restarts < 1) throw ConfigError("at least one restart is required");
  if (max_inner_iters < 1) throw ConfigError("max_inner_iters must be at least 1");
  kernel.validate();
}

namespace {

double proportion_loss(const LabelVector& y, const BagPartition& part) {
  double total = 0.0;
  for (std::size_t k = 0; k < part.bags.size(); ++k) {
    std::size_t pos = 0;
    for (auto i : part.bags[k]) pos += y[i] == 1 ? 1 : 0;
    total += std::abs(static_cast<double>(pos) / static_cast<double>(part.bags[k].size()) - part.proportions[k]);
  }
  return total;
}

// w'w and the decision values of one SVM iterate, so the objective can be
// re-evaluated at several labelings for O(N) each.
struct Scored {
  DualSolution sol;
  Eigen::VectorXd f;
  double w2 = 0.0;

  Scored(const Eigen::MatrixXd& gram, DualSolution s) : sol(std::move(s)) {
    const Eigen::VectorXd coef = sol.coefficients();
    f = gram * coef;
    w2 = coef.dot(f);
    f.array() += sol.bias;
  }

  double objective(const LabelVector& y, const BagPartition& part, double C, double C_p) const {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) loss += hinge(y[static_cast<std::size_t>(i)], f(i));
    return 0.5 * w2 + C * loss + C_p * proportion_loss(y, part);
  }
};

Eigen::VectorXd as_real(const LabelVector& y) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) out(static_cast<Eigen::Index>(i)) = y[i];
  return out;
}

struct RestartOutcome {
  RestartTrace trace;
  DualSolution sol;
  LabelVector labels;
  bool converged = true;
};

RestartOutcome run_restart(const Eigen::MatrixXd& gram, const BagPartition& part, const AlterParams& params,
                           std::size_t restart) {
  const std::size_t n = static_cast<std::size_t>(gram.rows());
  Rng rng(params.seed + static_cast<std::uint64_t>(restart) * 0x9E3779B97F4A7C15ULL);
  LabelVector y(n);
  for (auto& v : y) v = (rng.next() >> 63) ? 1 : -1;

  RestartOutcome out;
  std::optional<Scored> cur;
  double c_star = params.anneal_start_factor * params.C;
  while (c_star < params.C) {
    c_star = std::min((1.0 + params.anneal_delta) * c_star, params.C);
    AnnealStage stage;
    stage.c_star = c_star;
    double prev = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < params.max_inner_iters; ++it) {
      // Fix y, solve for (w, b). Keep the old iterate if the new solve (only
      // accurate to the solver tolerance) is not at least as good.
      Scored cand(gram, solve_dual(gram, as_real(y), c_star, true, params.solver));
      double obj = cand.objective(y, part, c_star, params.C_p);
      if (cur) {
        const double old = cur->objective(y, part, c_star, params.C_p);
        if (old < obj) obj = old;
        else cur.emplace(std::move(cand));
      } else {
        cur.emplace(std::move(cand));
      }
      stage.objectives.push_back(obj);

      // Fix (w, b), solve for y.
      std::vector<double> scores(cur->f.data(), cur->f.data() + cur->f.size());
      Labeling next = optimize_all_bags(scores, part, params.C_p / c_star);
      const double relabeled = cur->objective(next.labels, part, c_star, params.C_p);
      if (relabeled < obj) {
        y = std::move(next.labels);
        obj = relabeled;
      }
      stage.objectives.push_back(obj);

      if (prev - obj < params.convergence_threshold) break;
      prev = obj;
    }
    if (it == params.max_inner_iters) {
      stage.converged = false;
      out.converged = false;
    }
    out.trace.stages.push_back(std::move(stage));
  }

  if (!cur) {
    // C* already at C (start factor >= 1 is rejected, but keep a valid iterate)
    cur.emplace(gram, solve_dual(gram, as_real(y), params.C, true, params.solver));
  }
  out.trace.final_objective = cur->objective(y, part, params.C, params.C_p);
  out.sol = std::move(cur->sol);
  out.labels = std::move(y);
  return out;
}

}  // namespace

double psvm_objective(const Eigen::MatrixXd& gram, const DualSolution& sol, const LabelVector& y,
                      const BagPartition& part, double C, double C_p) {
  if (static_cast<std::size_t>(gram.rows()) != y.size() || sol.alpha.size() != gram.rows()) {
    throw ConfigError("objective inputs have inconsistent sizes");
  }
  return Scored(gram, sol).objective(y, part, C, C_p);
}

AlterFit train_alter_gram(const Eigen::MatrixXd& gram, const BagPartition& part, const AlterParams& params) {
  params.validate();
  part.validate(static_cast<std::size_t>(gram.rows()));

  std::vector<RestartOutcome> outcomes(params.restarts);
  if (params.threads <= 1 || params.restarts == 1) {
    for (std::size_t r = 0; r < params.restarts; ++r) outcomes[r] = run_restart(gram, part, params, r);
  } else {
    std::vector<std::exception_ptr> errors(params.restarts);
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(params.threads, params.restarts);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < params.restarts; r += workers) {
          try {
            outcomes[r] = run_restart(gram, part, params, r);
          } catch (...) {
            errors[r] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  AlterFit fit;
  for (std::size_t r = 1; r < outcomes.size(); ++r) {
    if (outcomes[r].trace.final_objective < outcomes[fit.best_restart].trace.final_objective) fit.best_restart = r;
  }
  RestartOutcome& best = outcomes[fit.best_restart];

  PsvmModel& m = fit.model;
  m.method = Method::alter;
  m.kernel = params.kernel;
  m.coefficients = best.sol.coefficients();
  m.bias = best.sol.bias;
  m.support_indices = best.sol.support();
  m.objective = best.trace.final_objective;
  m.labels = best.labels;
  m.converged = best.converged;

  for (auto& o : outcomes) fit.restarts.push_back(std::move(o.trace));
  return fit;
}

AlterFit train_alter(const Eigen::MatrixXd& features, const BagPartition& part, const AlterParams& params) {
  AlterFit fit = train_alter_gram(gram(features, params.kernel), part, params);
  fit.model.train_features = features;
  return fit;
}

}  // namespace psvm
