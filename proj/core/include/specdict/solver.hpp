#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace specdict {

struct SolverConfig {
  double kkt_tol = 1e-6;
  int max_iters = 500;
  double y_floor = 1e-12;  // lower clamp on model values, never applied to y
  int max_active = 0;      // 0 = unlimited

  void validate() const;  // throws ConfigError
};

struct SolveReport {
  double objective = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  // Objective after initialization and after each accepted step.
  std::vector<double> objective_trace;
};

// Generalized KL divergence between non-negative vectors,
//   sum_i  y_i ln(y_i / max(yhat_i, floor)) - y_i + max(yhat_i, floor),
// where terms with y_i = 0 contribute max(yhat_i, floor). Throws DataError
// on negative entries or size mismatch.
double kl_divergence(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                     double y_floor = 1e-12);

// Gradient of x -> KL(y || Dx):  D^T (1 - y / max(Dx, floor)).
Eigen::VectorXd kl_gradient(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& x, double y_floor);

// Hessian D^T diag(y / max(Dx, floor)^2) D.
Eigen::MatrixXd kl_hessian(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& x, double y_floor);

// Stationarity measure for the non-negativity-constrained problem:
//   max( max_{x_j > 0} |g_j|,  max_{x_j = 0} max(-g_j, 0) ).
// Zero at an exact constrained optimum.
double kkt_residual(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& x, double y_floor);

// Minimizes KL(y || Dx) subject to x >= 0 with an active-set Newton method.
//
// The active set starts from the single atom whose optimal one-atom weight
// gives the lowest divergence. Each iteration may activate the inactive atom
// with the most negative gradient, then takes a damped Newton step on the
// active weights: the step is clipped to the non-negative orthant, weights
// driven to zero are deactivated, and the step is halved (up to 30 times)
// until the objective does not increase. Terminates when the KKT residual
// drops to kkt_tol or the iteration budget is exhausted.
//
// Throws DataError on dimension mismatch, negative input, or silent y.
std::pair<Eigen::VectorXd, SolveReport> solve_weights(const Eigen::VectorXd& y,
                                                      const Eigen::MatrixXd& D,
                                                      const SolverConfig& cfg = {});

// Verification oracle: projected gradient descent with Armijo backtracking
// from a uniform positive start. Slow but independent of the Newton path.
// Stops early once the KKT residual falls below kkt_stop.
Eigen::VectorXd solve_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& D,
                             long max_iters = 1000000, double y_floor = 1e-12,
                             double kkt_stop = 1e-10);

}  // namespace specdict
