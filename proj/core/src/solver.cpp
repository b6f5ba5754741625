#include "specdict/solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

#include "specdict/errors.hpp"
#include "specdict/features.hpp"

namespace specdict {

namespace {

void check_nonnegative(const Eigen::VectorXd& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0)) throw DataError(std::string(what) + " has negative or NaN entries");
  }
}

// KL objective given the model vector Dx. Terms with y_i = 0 reduce to the
// floored model value.
double objective_from_model(const Eigen::VectorXd& y, const Eigen::VectorXd& model,
                            double floor) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double m = std::max(model[i], floor);
    acc += m;
    if (y[i] > 0.0) acc += y[i] * std::log(y[i] / m) - y[i];
  }
  return acc;
}

Eigen::VectorXd gradient_from_model(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& model, double floor) {
  Eigen::VectorXd ratio(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    ratio[i] = 1.0 - y[i] / std::max(model[i], floor);
  }
  return D.transpose() * ratio;
}

double residual_from_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    r = x[j] > 0.0 ? std::max(r, std::abs(g[j])) : std::max(r, -g[j]);
  }
  return r;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(kkt_tol > 0.0)) throw ConfigError("solver.kkt_tol must be positive");
  if (max_iters < 1) throw ConfigError("solver.max_iters must be >= 1");
  if (!(y_floor > 0.0)) throw ConfigError("solver.y_floor must be positive");
  if (max_active < 0) throw ConfigError("solver.max_active must be >= 0");
}

double kl_divergence(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat, double y_floor) {
  if (y.size() != yhat.size()) throw DataError("KL divergence: size mismatch");
  check_nonnegative(y, "KL divergence: y");
  check_nonnegative(yhat, "KL divergence: yhat");
  return objective_from_model(y, yhat, y_floor);
}

Eigen::VectorXd kl_gradient(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& x, double y_floor) {
  return gradient_from_model(D, y, D * x, y_floor);
}

Eigen::MatrixXd kl_hessian(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& x, double y_floor) {
  Eigen::VectorXd model = D * x;
  Eigen::VectorXd w(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double m = std::max(model[i], y_floor);
    w[i] = y[i] / (m * m);
  }
  return D.transpose() * w.asDiagonal() * D;
}

double kkt_residual(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& x, double y_floor) {
  return residual_from_gradient(x, kl_gradient(D, y, x, y_floor));
}

std::pair<Eigen::VectorXd, SolveReport> solve_weights(const Eigen::VectorXd& y,
                                                      const Eigen::MatrixXd& D,
                                                      const SolverConfig& cfg) {
  cfg.validate();
  if (D.rows() != y.size()) throw DataError("solve: dimension mismatch");
  if (D.cols() == 0) throw DataError("solve: empty dictionary");
  check_nonnegative(y, "solve: y");
  if (y.norm() <= kSilenceEpsilon) throw DataError("silent frame");

  const Eigen::Index n_atoms = D.cols();
  const double floor = cfg.y_floor;
  const Eigen::Index active_cap =
      cfg.max_active > 0 ? static_cast<Eigen::Index>(cfg.max_active) : n_atoms;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_atoms);
  SolveReport report;

  // Degenerate case: nothing improves on x = 0.
  {
    Eigen::VectorXd g0 = gradient_from_model(D, y, Eigen::VectorXd::Zero(y.size()), floor);
    if (g0.minCoeff() >= 0.0) {
      report.objective = objective_from_model(y, Eigen::VectorXd::Zero(y.size()), floor);
      report.kkt_residual = 0.0;
      report.converged = true;
      report.objective_trace.push_back(report.objective);
      return {x, report};
    }
  }

  // Start from the single atom whose optimal one-atom weight fits best. For
  // atom d the unconstrained optimum of c -> KL(y || c d) is
  // sum(y over supp d) / sum(d).
  {
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::Index best_atom = -1;
    double best_weight = 0.0;
    for (Eigen::Index j = 0; j < n_atoms; ++j) {
      double col_sum = 0.0, mass = 0.0;
      for (Eigen::Index i = 0; i < D.rows(); ++i) {
        col_sum += D(i, j);
        if (D(i, j) > 0.0) mass += y[i];
      }
      if (col_sum <= 0.0 || mass <= 0.0) continue;
      double c = mass / col_sum;
      double obj = objective_from_model(y, c * D.col(j), floor);
      if (obj < best_obj) {
        best_obj = obj;
        best_atom = j;
        best_weight = c;
      }
    }
    if (best_atom >= 0) x[best_atom] = best_weight;
  }

  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < n_atoms; ++j) {
    if (x[j] > 0.0) active.push_back(j);
  }

  Eigen::VectorXd model = D * x;
  double obj = objective_from_model(y, model, floor);
  report.objective_trace.push_back(obj);

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    Eigen::VectorXd g = gradient_from_model(D, y, model, floor);
    double res = residual_from_gradient(x, g);
    report.kkt_residual = res;
    if (res <= cfg.kkt_tol) {
      report.converged = true;
      break;
    }

    // Activate the worst KKT violator among inactive atoms.
    if (static_cast<Eigen::Index>(active.size()) < active_cap) {
      Eigen::Index worst = -1;
      double worst_g = -cfg.kkt_tol;
      for (Eigen::Index j = 0; j < n_atoms; ++j) {
        if (x[j] == 0.0 && g[j] < worst_g) {
          worst_g = g[j];
          worst = j;
        }
      }
      if (worst >= 0 &&
          std::find(active.begin(), active.end(), worst) == active.end()) {
        active.push_back(worst);
      }
    }
    if (active.empty()) break;  // cap excluded every violator

    const auto n_active = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd D_active(D.rows(), n_active);
    Eigen::VectorXd g_active(n_active);
    for (Eigen::Index k = 0; k < n_active; ++k) {
      D_active.col(k) = D.col(active[static_cast<size_t>(k)]);
      g_active[k] = g[active[static_cast<size_t>(k)]];
    }

    Eigen::VectorXd weights(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      double m = std::max(model[i], floor);
      weights[i] = y[i] / (m * m);
    }
    Eigen::MatrixXd H = D_active.transpose() * weights.asDiagonal() * D_active;

    // Newton direction, with diagonal jitter when the factorization fails.
    // A nearly singular system can factor "successfully" yet return a
    // non-descent direction; that counts as a failure too.
    Eigen::VectorXd step;
    double jitter = 1e-10 * H.trace() / static_cast<double>(n_active);
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(H);
      if (llt.info() == Eigen::Success) {
        step = llt.solve(-g_active);
        if (step.allFinite() && g_active.dot(step) < 0.0) break;
      }
      H.diagonal().array() += jitter;
      jitter *= 10.0;
      step.resize(0);
    }
    if (step.size() == 0) throw NumericError("solve: Newton system factorization failed");

    // Clip the step to the non-negative orthant.
    double alpha_max = 1.0;
    for (Eigen::Index k = 0; k < n_active; ++k) {
      Eigen::Index j = active[static_cast<size_t>(k)];
      if (step[k] < 0.0) {
        if (x[j] == 0.0) {
          step[k] = 0.0;  // just-activated atom pushed outward stays at the bound
        } else {
          alpha_max = std::min(alpha_max, -x[j] / step[k]);
        }
      }
    }
    if (step.isZero(0.0)) {
      // Newton coupling pushed every component outward; take a coordinate
      // descent step on the steepest violator instead of stalling.
      Eigen::Index k_best = -1;
      for (Eigen::Index k = 0; k < n_active; ++k) {
        if (g_active[k] < 0.0 && H(k, k) > 0.0 &&
            (k_best < 0 || g_active[k] < g_active[k_best])) {
          k_best = k;
        }
      }
      if (k_best < 0) break;  // no usable direction
      step[k_best] = -g_active[k_best] / H(k_best, k_best);
    }

    Eigen::VectorXd model_step = D_active * step;

    // Backtrack until the objective does not increase. Near the optimum the
    // true decrease can fall below the objective's floating-point granularity,
    // so non-increase is judged with a 1e-12 relative slack.
    const double slack = 1e-12 * std::max(1.0, std::abs(obj));
    double alpha = alpha_max;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      Eigen::VectorXd model_try = model + alpha * model_step;
      double obj_try = objective_from_model(y, model_try, floor);
      if (obj_try <= obj + slack) {
        for (Eigen::Index k = 0; k < n_active; ++k) {
          Eigen::Index j = active[static_cast<size_t>(k)];
          double v = x[j] + alpha * step[k];
          x[j] = v > 0.0 ? v : 0.0;
        }
        model = D * x;  // recompute, keeping model exactly consistent with x
        obj = objective_from_model(y, model, floor);
        report.objective_trace.push_back(obj);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      ++iter;
      break;  // stalled; report the current point honestly
    }

    active.erase(std::remove_if(active.begin(), active.end(),
                                [&x](Eigen::Index j) { return x[j] == 0.0; }),
                 active.end());
  }

  report.iterations = iter;
  report.objective = obj;
  report.kkt_residual = kkt_residual(D, y, x, floor);
  report.converged = report.kkt_residual <= cfg.kkt_tol;
  return {x, report};
}

Eigen::VectorXd solve_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& D,
                             long max_iters, double y_floor, double kkt_stop) {
  if (D.rows() != y.size()) throw DataError("solve: dimension mismatch");
  if (D.cols() == 0) throw DataError("solve: empty dictionary");
  check_nonnegative(y, "solve: y");
  if (y.norm() <= kSilenceEpsilon) throw DataError("silent frame");

  const double total_dict = D.sum();
  double start = total_dict > 0.0 ? y.sum() / total_dict : 1.0;
  if (!(start > 0.0)) start = 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(D.cols(), start);

  double obj = objective_from_model(y, D * x, y_floor);
  double eta = 1.0;
  int stalled = 0;  // consecutive accepted steps with no representable decrease

  for (long it = 0; it < max_iters; ++it) {
    Eigen::VectorXd g = gradient_from_model(D, y, D * x, y_floor);
    if (residual_from_gradient(x, g) <= kkt_stop) break;

    bool moved = false;
    for (int halving = 0; halving <= 60; ++halving) {
      Eigen::VectorXd x_try = (x - eta * g).cwiseMax(0.0);
      if (x_try == x) break;  // step below representable precision
      double obj_try = objective_from_model(y, D * x_try, y_floor);
      // Armijo condition on the actual (projected) displacement.
      double decrease = g.dot(x - x_try);
      if (obj_try <= obj - 1e-4 * decrease && obj_try <= obj) {
        stalled = obj_try == obj ? stalled + 1 : 0;
        x = std::move(x_try);
        obj = obj_try;
        moved = true;
        break;
      }
      eta *= 0.5;
    }
    if (!moved || stalled > 20) break;  // stationary at floating-point precision
    eta *= 2.0;
  }
  return x;
}

}  // namespace specdict
