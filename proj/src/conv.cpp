#include "psvm/conv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "psvm/errors.hpp"
#include "psvm/svm.hpp"

namespace psvm {

void ConvParams::validate() const {
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (!(eps >= 0.0)) throw ConfigError("eps must be non-negative");
  if (!(variance_frac > 0.0 && variance_frac <= 1.0)) throw ConfigError("variance fraction must lie in (0,1]");
  if (max_cuts < 1) throw ConfigError("max_cuts must be at least 1");
  if (!(mkl_tol > 0.0) || !(svm_tol > 0.0)) throw ConfigError("tolerances must be positive");
  kernel.validate();
}

ViolatedLabeling find_violated_labeling(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& features,
                                        const BagPartition& part, double eps) {
  const Eigen::Index n = features.rows();
  if (alpha.size() != n) throw ConfigError("alpha and features disagree on instance count");
  if (features.cols() == 0) throw ConfigError("labeling search needs at least one feature");

  ViolatedLabeling best;
  bool have = false;
  LabelVector y(static_cast<std::size_t>(n));
  std::vector<double> coeffs;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    for (int s : {1, -1}) {
      // maximizing s * sum_i alpha_i x_ij y_i == minimizing sum_i c_i y_i
      for (std::size_t k = 0; k < part.bags.size(); ++k) {
        const auto& bag = part.bags[k];
        coeffs.clear();
        for (auto i : bag) {
          const auto ii = static_cast<Eigen::Index>(i);
          coeffs.push_back(-s * alpha(ii) * features(ii, j));
        }
        BagLabeling b = optimize_bag_linear_constrained(coeffs, part.proportions[k], eps);
        for (std::size_t t = 0; t < bag.size(); ++t) y[bag[t]] = b.labels[t];
      }
      double value = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) value += alpha(i) * y[static_cast<std::size_t>(i)] * features(i, j);
      const double score = s * value;
      if (!have || score > best.value) {
        best.labels = y;
        best.value = score;
        best.dim = static_cast<std::size_t>(j);
        best.sign = s;
        have = true;
      }
    }
  }
  return best;
}

namespace {

Eigen::MatrixXd combined_kernel(std::span<const LabelVector> active, const Eigen::MatrixXd& gram,
                                const Eigen::VectorXd& weights) {
  const Eigen::Index n = gram.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t = 0; t < active.size(); ++t) {
    const double w = weights(static_cast<Eigen::Index>(t));
    const auto& y = active[t];
    for (Eigen::Index c = 0; c < n; ++c) {
      const double wc = w * y[static_cast<std::size_t>(c)];
      for (Eigen::Index r = 0; r < n; ++r) m(r, c) += wc * y[static_cast<std::size_t>(r)];
    }
  }
  return gram.cwiseProduct(m);
}

struct MklPoint {
  Eigen::VectorXd alpha;
  Eigen::VectorXd grad;
  double objective = 0.0;
};

MklPoint evaluate(std::span<const LabelVector> active, const Eigen::MatrixXd& gram, const Eigen::VectorXd& weights,
                  double C, double svm_tol) {
  const Eigen::Index n = gram.rows();
  SolverOptions opts;
  opts.tol = svm_tol;
  DualSolution sol = solve_dual(combined_kernel(active, gram, weights), Eigen::VectorXd::Ones(n), C, false, opts);
  MklPoint p;
  p.alpha = sol.alpha;
  p.objective = sol.objective_dual;
  p.grad.resize(static_cast<Eigen::Index>(active.size()));
  Eigen::VectorXd ay(n);
  for (std::size_t t = 0; t < active.size(); ++t) {
    for (Eigen::Index i = 0; i < n; ++i) ay(i) = p.alpha(i) * active[t][static_cast<std::size_t>(i)];
    p.grad(static_cast<Eigen::Index>(t)) = -0.5 * ay.dot(gram * ay);
  }
  return p;
}

double simplex_error(const Eigen::VectorXd& w) {
  return std::max(std::abs(w.sum() - 1.0), std::max(0.0, -w.minCoeff()));
}

void check_active(std::span<const LabelVector> active, const Eigen::MatrixXd& gram) {
  if (active.empty()) throw ConfigError("MKL needs at least one labeling");
  if (gram.rows() != gram.cols()) throw ConfigError("kernel matrix must be square");
  for (const auto& y : active) {
    if (static_cast<Eigen::Index>(y.size()) != gram.rows()) throw ConfigError("labeling size does not match kernel");
  }
}

}  // namespace

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw ConfigError("cannot project an empty vector onto the simplex");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += u[static_cast<std::size_t>(k)];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
  }
  Eigen::VectorXd w = (v.array() - theta).cwiseMax(0.0);
  const double s = w.sum();
  if (s > 0.0) w /= s;
  return w;
}

double mkl_objective(std::span<const LabelVector> active, const Eigen::MatrixXd& gram, const Eigen::VectorXd& weights,
                     double C, double svm_tol) {
  check_active(active, gram);
  if (weights.size() != static_cast<Eigen::Index>(active.size())) throw ConfigError("one weight per labeling");
  return evaluate(active, gram, weights, C, svm_tol).objective;
}

MklResult solve_mkl(std::span<const LabelVector> active, const Eigen::MatrixXd& gram, double C, double tol,
                    std::size_t max_iters, const Eigen::VectorXd* start, double svm_tol) {
  check_active(active, gram);
  const auto T = static_cast<Eigen::Index>(active.size());
  Eigen::VectorXd w;
  if (start) {
    if (start->size() != T) throw ConfigError("warm start has the wrong length");
    w = project_simplex(*start);
  } else {
    w = Eigen::VectorXd::Constant(T, 1.0 / static_cast<double>(T));
  }

  MklResult res;
  res.max_simplex_error = simplex_error(w);
  MklPoint cur = evaluate(active, gram, w, C, svm_tol);
  res.objective_trace.push_back(cur.objective);

  const double spread = cur.grad.maxCoeff() - cur.grad.minCoeff();
  double step = spread > 0.0 ? 1.0 / spread : 1.0;
  constexpr double armijo = 1e-4;
  for (std::size_t it = 0; it < max_iters && T > 1; ++it) {
    if ((w - project_simplex(w - cur.grad)).norm() < tol) break;
    bool accepted = false;
    for (double s = step; s > 1e-12; s *= 0.5) {
      Eigen::VectorXd next_w = project_simplex(w - s * cur.grad);
      const Eigen::VectorXd move = next_w - w;
      if (move.norm() < 1e-15) break;
      MklPoint next = evaluate(active, gram, next_w, C, svm_tol);
      if (next.objective <= cur.objective + armijo * cur.grad.dot(move) && next.objective < cur.objective) {
        w = std::move(next_w);
        cur = std::move(next);
        step = 2.0 * s;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++res.iterations;
    res.max_simplex_error = std::max(res.max_simplex_error, simplex_error(w));
    res.objective_trace.push_back(cur.objective);
  }

  res.weights = std::move(w);
  res.alpha = std::move(cur.alpha);
  res.objective = cur.objective;
  return res;
}

Eigen::VectorXd recover_labels(const ActiveSet& active, const BagPartition& part) {
  if (active.labelings.empty()) throw ConfigError("no labelings to recover from");
  const auto T = static_cast<Eigen::Index>(active.labelings.size());
  if (active.weights.size() != T) throw ConfigError("one weight per labeling");
  const auto n = static_cast<Eigen::Index>(active.labelings.front().size());

  // M = Y D^2 Y' shares its nonzero spectrum with the T x T matrix D Y'Y D,
  // and Y D u is an eigenvector of M with squared norm equal to the eigenvalue.
  Eigen::MatrixXd yd(n, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double r = std::sqrt(std::max(0.0, active.weights(t)));
    for (Eigen::Index i = 0; i < n; ++i) yd(i, t) = r * active.labelings[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd small = yd.transpose() * yd;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
  if (es.info() != Eigen::Success) throw DegenerateKernelError("eigendecomposition of the label matrix failed");
  if (!(es.eigenvalues()(T - 1) > 0.0)) throw DegenerateKernelError("label matrix is zero");
  Eigen::VectorXd y = yd * es.eigenvectors().col(T - 1);

  const double err_pos = bag_error(sign_labels(y), part);
  const double err_neg = bag_error(sign_labels(-y), part);
  bool flip = err_neg < err_pos;
  if (err_neg == err_pos) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y(i) != 0.0) {
        flip = y(i) < 0.0;
        break;
      }
    }
  }
  if (flip) y = -y;
  return y;
}

namespace {

bool admissible(const LabelVector& y, const BagPartition& part, double eps) {
  for (std::size_t k = 0; k < part.bags.size(); ++k) {
    const auto& bag = part.bags[k];
    const std::size_t m = bag.size();
    std::size_t pos = 0;
    for (auto i : bag) pos += y[i] == 1 ? 1 : 0;
    if (proportion_feasible(pos, m, part.proportions[k], eps)) continue;
    // Without any feasible grid point the nearest proportion is used.
    for (std::size_t r = 0; r <= m; ++r) {
      if (proportion_feasible(r, m, part.proportions[k], eps)) return false;
    }
    const double gap = std::abs(static_cast<double>(pos) / static_cast<double>(m) - part.proportions[k]);
    for (std::size_t r = 0; r <= m; ++r) {
      if (std::abs(static_cast<double>(r) / static_cast<double>(m) - part.proportions[k]) < gap - 1e-12) return false;
    }
  }
  return true;
}

ConvFit run_conv(const Eigen::MatrixXd& centered_gram, const Eigen::MatrixXd& search_features,
                 const BagPartition& part, const ConvParams& params) {
  const Eigen::Index n = centered_gram.rows();
  ConvFit fit;
  ActiveSet& act = fit.active;
  act.alpha = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  act.weights.resize(0);

  double prev = std::numeric_limits<double>::infinity();
  while (fit.cuts < params.max_cuts) {
    ViolatedLabeling v = find_violated_labeling(act.alpha, search_features, part, params.eps);
    if (!admissible(v.labels, part, params.eps)) throw std::logic_error("labeling search returned an infeasible labeling");
    if (std::find(act.labelings.begin(), act.labelings.end(), v.labels) != act.labelings.end()) {
      fit.stopped_on_duplicate = true;
      break;
    }
    act.labelings.push_back(std::move(v.labels));

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(act.labelings.size()));
    warm.head(act.weights.size()) = act.weights;
    if (act.weights.size() == 0) warm.setConstant(1.0);
    MklResult mkl = solve_mkl(act.labelings, centered_gram, params.C, params.mkl_tol, params.mkl_max_iters, &warm,
                              params.svm_tol);
    act.weights = std::move(mkl.weights);
    act.alpha = std::move(mkl.alpha);
    act.objective = mkl.objective;
    act.beta = mkl.objective;
    fit.objective_trace.push_back(mkl.objective);
    fit.mkl_iterations.push_back(mkl.iterations);
    fit.max_simplex_error = std::max(fit.max_simplex_error, mkl.max_simplex_error);
    ++fit.cuts;

    if (prev - mkl.objective < params.convergence_threshold) break;
    prev = mkl.objective;
  }

  fit.recovered = recover_labels(act, part);
  SolverOptions opts;
  opts.tol = params.svm_tol;
  DualSolution sol = solve_dual(centered_gram, fit.recovered, params.C, false, opts);

  PsvmModel& m = fit.model;
  m.method = Method::conv;
  m.kernel = params.kernel;
  m.coefficients = sol.coefficients();
  m.bias = 0.0;
  m.support_indices = sol.support();
  m.objective = sol.objective_dual;
  m.labels = sign_labels(fit.recovered);
  m.converged = fit.cuts < params.max_cuts || fit.stopped_on_duplicate;
  return fit;
}

}  // namespace

ConvFit train_conv_gram(const Eigen::MatrixXd& gram_matrix, const BagPartition& part, const ConvParams& params) {
  params.validate();
  part.validate(static_cast<std::size_t>(gram_matrix.rows()));
  const KernelCentering centering = KernelCentering::fit(gram_matrix);
  const Eigen::MatrixXd kc = centering.center_train(gram_matrix);
  const FactorizedFeatures feats = center_features(factorize(gram_matrix, params.variance_frac));
  ConvFit fit = run_conv(kc, feats.vectors, part, params);
  fit.model.centering = centering;
  return fit;
}

ConvFit train_conv(const Eigen::MatrixXd& features, const BagPartition& part, const ConvParams& params) {
  params.validate();
  part.validate(static_cast<std::size_t>(features.rows()));
  const Eigen::MatrixXd g = gram(features, params.kernel);
  const KernelCentering centering = KernelCentering::fit(g);
  const Eigen::MatrixXd kc = centering.center_train(g);
  Eigen::MatrixXd search;
  if (params.kernel.kind == KernelConfig::Kind::linear) {
    search = center_columns(features);
  } else {
    search = center_features(factorize(g, params.variance_frac)).vectors;
  }
  ConvFit fit = run_conv(kc, search, part, params);
  fit.model.centering = centering;
  fit.model.train_features = features;
  return fit;
}

}  // namespace psvm
