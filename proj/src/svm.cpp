#include "psvm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "psvm/errors.hpp"

namespace psvm {

namespace {

constexpr double kTau = 1e-12;  // curvature floor for flat directions
constexpr double kInf = std::numeric_limits<double>::infinity();

// Multiplier of a'b = 0 recovered from the KKT conditions: average over free
// coordinates, otherwise the midpoint (or finite end) of the feasible range.
double recover_multiplier(const Eigen::VectorXd& beta, const Eigen::VectorXd& grad, const Eigen::VectorXd& a,
                          double upper) {
  double lo = -kInf, hi = kInf, free_sum = 0.0;
  std::size_t free_count = 0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    if (a(k) == 0.0) continue;
    const double g = grad(k) / a(k);
    if (beta(k) > 0.0 && beta(k) < upper) {
      free_sum += g;
      ++free_count;
    } else if (beta(k) <= 0.0) {
      if (a(k) > 0) lo = std::max(lo, g);
      else hi = std::min(hi, g);
    } else {
      if (a(k) > 0) hi = std::min(hi, g);
      else lo = std::max(lo, g);
    }
  }
  if (free_count > 0) return free_sum / static_cast<double>(free_count);
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
  if (std::isfinite(lo)) return lo;
  if (std::isfinite(hi)) return hi;
  return 0.0;
}


// Newton step on the variables strictly inside the box, cut back to stay
// feasible. Coordinate steps alone crawl when the free block is
// ill-conditioned. Returns the objective increase (zero if rejected).
double free_set_step(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& a, double upper, Eigen::VectorXd& beta,
                     Eigen::VectorXd& g) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    if (beta(k) > 0.0 && beta(k) < upper) free.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(free.size());
  if (m < 2) return 0.0;
  Eigen::MatrixXd q(m, m);
  Eigen::VectorXd gf(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    gf(r) = g(free[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m; ++c) {
      const Eigen::Index i = free[static_cast<std::size_t>(r)], j = free[static_cast<std::size_t>(c)];
      q(r, c) = a(i) * a(j) * kernel(i, j);
    }
  }
  Eigen::VectorXd d = q.completeOrthogonalDecomposition().solve(gf);
  // a gradient component in the null space of the block means the objective
  // rises without curvature along it until some variable reaches a bound
  const Eigen::VectorXd resid = gf - q * d;
  if (resid.norm() > 1e-6 * gf.norm()) d = resid;
  const double curv = d.dot(q * d);
  const double slope = d.dot(gf);
  if (!(slope > 0.0) || !d.allFinite()) return 0.0;
  double t = curv > 0.0 ? slope / curv : std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < m; ++r) {
    const double b = beta(free[static_cast<std::size_t>(r)]);
    if (d(r) > 0.0) t = std::min(t, (upper - b) / d(r));
    if (d(r) < 0.0) t = std::min(t, -b / d(r));
  }
  if (!(t > 0.0)) return 0.0;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(beta.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = free[static_cast<std::size_t>(r)];
    const double nb = std::clamp(beta(i) + t * d(r), 0.0, upper);
    delta(i) = nb - beta(i);
    beta(i) = nb;
  }
  const Eigen::VectorXd ad = a.cwiseProduct(delta);
  const Eigen::VectorXd kad = kernel * ad;
  const double gain = g.dot(delta) - 0.5 * ad.dot(kad);
  g -= a.cwiseProduct(kad);
  return gain;
}

}  // namespace

BoxQpResult solve_box_qp(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                         double upper, bool equality, double tol, const SolverOptions& opts,
                         const Eigen::VectorXd* start) {
  const Eigen::Index n = a.size();
  BoxQpResult res;
  res.beta = start ? Eigen::VectorXd(start->cwiseMax(0.0).cwiseMin(upper)) : Eigen::VectorXd::Zero(n);
  if (equality && start) {
    // a warm start must keep a'b = 0; fall back to zero otherwise
    if (std::abs(a.dot(res.beta)) > 1e-9 * (1.0 + upper * static_cast<double>(n))) res.beta.setZero();
  }
  Eigen::VectorXd& beta = res.beta;
  Eigen::VectorXd g = c - a.cwiseProduct(kernel * a.cwiseProduct(beta));
  double obj = 0.5 * (c.dot(beta) + g.dot(beta));
  if (opts.record_trace) res.trace.push_back(obj);

  const std::size_t max_iter = opts.max_sweeps * static_cast<std::size_t>(std::max<Eigen::Index>(n, 1));
  double violation = 0.0;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    if (equality) {
      Eigen::Index i = -1, j = -1;
      double gmax = -kInf, gmin = kInf;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double ak = a(k);
        if (ak == 0.0) continue;
        const double gk = g(k) / ak;
        const bool up = ak > 0 ? beta(k) < upper : beta(k) > 0.0;
        const bool down = ak > 0 ? beta(k) > 0.0 : beta(k) < upper;
        if (up && gk > gmax) { gmax = gk; i = k; }
        if (down && gk < gmin) { gmin = gk; j = k; }
      }
      violation = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
      if (violation <= tol) break;

      const double eta_true = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
      const double eta = std::max(eta_true, kTau);
      const double ai = a(i), aj = a(j);
      const double room_i = ai > 0 ? ai * (upper - beta(i)) : -ai * beta(i);
      const double room_j = aj > 0 ? aj * beta(j) : -aj * (upper - beta(j));
      double t = violation / eta;
      bool snap_i = false, snap_j = false;
      if (t >= room_i) { t = room_i; snap_i = true; }
      if (t >= room_j) { t = room_j; snap_j = true; snap_i = snap_i && room_i == room_j; }

      beta(i) += t / ai;
      beta(j) -= t / aj;
      if (snap_i) beta(i) = ai > 0 ? upper : 0.0;
      if (snap_j) beta(j) = aj > 0 ? 0.0 : upper;
      beta(i) = std::clamp(beta(i), 0.0, upper);
      beta(j) = std::clamp(beta(j), 0.0, upper);

      const auto ki = kernel.col(i);
      const auto kj = kernel.col(j);
      for (Eigen::Index k = 0; k < n; ++k) g(k) -= a(k) * t * (ki(k) - kj(k));
      obj += t * violation - 0.5 * t * t * eta_true;
    } else {
      // stop on the largest violation, step on the coordinate with the largest gain
      Eigen::Index best = -1;
      double vmax = 0.0, gbest = -1.0, dbest = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        double v = 0.0;
        if (g(k) > 0.0 && beta(k) < upper) v = g(k);
        else if (g(k) < 0.0 && beta(k) > 0.0) v = -g(k);
        if (v <= 0.0) continue;
        vmax = std::max(vmax, v);
        const double qk = a(k) * a(k) * kernel(k, k);
        const double nk = std::clamp(qk > 0.0 ? beta(k) + g(k) / qk : (g(k) > 0.0 ? upper : 0.0), 0.0, upper);
        const double dk = nk - beta(k);
        const double gain = dk * g(k) - 0.5 * dk * dk * qk;
        if (gain > gbest) { gbest = gain; best = k; dbest = dk; }
      }
      violation = vmax;
      if (violation <= tol) break;

      const double ak = a(best);
      const double q = ak * ak * kernel(best, best);
      const double gk = g(best);
      const double d = dbest;
      const double nb = beta(best) + d;
      beta(best) = nb;
      const auto kb = kernel.col(best);
      for (Eigen::Index k = 0; k < n; ++k) g(k) -= a(k) * ak * kb(k) * d;
      obj += d * gk - 0.5 * d * d * q;
      if ((it + 1) % static_cast<std::size_t>(n) == 0) obj += free_set_step(kernel, a, upper, beta, g);
    }
    if (opts.record_trace) res.trace.push_back(obj);
  }
  res.iterations = it;
  res.violation = violation;
  if (it == max_iter && violation > tol) {
    throw SolverError("QP solver did not converge in " + std::to_string(max_iter) + " iterations (violation " +
                          std::to_string(violation) + ")",
                      beta, violation);
  }

  res.gradient = c - a.cwiseProduct(kernel * a.cwiseProduct(beta));
  res.objective = 0.5 * (c.dot(beta) + res.gradient.dot(beta));
  res.multiplier = equality ? recover_multiplier(beta, res.gradient, a, upper) : 0.0;
  return res;
}

std::vector<std::size_t> DualSolution::support() const {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) > 0.0) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

namespace {

// Margins y_i f(x_i) from the QP gradient: g_i = 1 - y_i s_i with s the
// bias-free score.
Eigen::VectorXd margins_from_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& y, double bias) {
  return (1.0 - grad.array() + y.array() * bias).matrix();
}

double residual_from_margins(const Eigen::VectorXd& alpha, const Eigen::VectorXd& m, double C) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    double r;
    if (alpha(i) <= 0.0) r = std::max(0.0, 1.0 - m(i));
    else if (alpha(i) >= C) r = std::max(0.0, m(i) - 1.0);
    else r = std::abs(m(i) - 1.0);
    worst = std::max(worst, r);
  }
  return worst;
}

double hinge_sum(const Eigen::VectorXd& m) { return (1.0 - m.array()).cwiseMax(0.0).sum(); }

}  // namespace

DualSolution solve_dual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double C, bool with_bias,
                        const SolverOptions& opts) {
  const Eigen::Index n = y.size();
  if (gram.rows() != n || gram.cols() != n) throw ConfigError("kernel and label sizes differ");
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (with_bias && (y.array() == 0.0).any()) throw ConfigError("zero labels are not allowed with a bias term");

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  DualSolution sol;
  sol.labels_used = y;
  sol.C = C;
  sol.with_bias = with_bias;

  double tol = opts.tol;
  Eigen::VectorXd warm;
  for (int round = 0; round < 8; ++round) {
    BoxQpResult res = solve_box_qp(gram, y, ones, C, with_bias, tol, opts, round == 0 ? nullptr : &warm);
    sol.iterations += res.iterations;
    sol.trace.insert(sol.trace.end(), res.trace.begin(), res.trace.end());
    sol.alpha = res.beta;
    sol.bias = res.multiplier;
    sol.objective_dual = res.objective;

    const Eigen::VectorXd m = margins_from_gradient(res.gradient, y, sol.bias);
    const double w2 = ones.dot(sol.alpha) - res.gradient.dot(sol.alpha);
    const double primal = 0.5 * w2 + C * hinge_sum(m);
    const double gap = primal - sol.objective_dual;
    if (residual_from_margins(sol.alpha, m, C) <= opts.tol && gap <= opts.tol * (1.0 + std::abs(sol.objective_dual))) {
      break;
    }
    warm = res.beta;
    tol *= 0.1;
  }
  return sol;
}

Eigen::VectorXd decision_values(const DualSolution& sol, const Eigen::MatrixXd& cross_kernel) {
  if (cross_kernel.cols() != sol.alpha.size()) throw ConfigError("cross kernel width does not match training size");
  Eigen::VectorXd f = cross_kernel * sol.coefficients();
  f.array() += sol.bias;
  return f;
}

std::vector<int> sign_labels(const Eigen::VectorXd& values) {
  std::vector<int> out(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) out[static_cast<std::size_t>(i)] = values(i) >= 0.0 ? 1 : -1;
  return out;
}

double kkt_residual(const Eigen::MatrixXd& gram, const DualSolution& sol) {
  const Eigen::VectorXd f = decision_values(sol, gram);
  return residual_from_margins(sol.alpha, sol.labels_used.cwiseProduct(f), sol.C);
}

double primal_objective(const Eigen::MatrixXd& gram, const DualSolution& sol) {
  const Eigen::VectorXd coef = sol.coefficients();
  const Eigen::VectorXd f = decision_values(sol, gram);
  return 0.5 * coef.dot(gram * coef) + sol.C * hinge_sum(sol.labels_used.cwiseProduct(f));
}

}  // namespace psvm
