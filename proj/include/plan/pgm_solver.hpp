#pragma once

#include <Eigen/Core>

#include "plan/integrators.hpp"
#include "plan/ocp.hpp"

namespace plan {

// Pointwise Hamiltonian H = l(x, u, tau) + lambda' * f(x, u, tau).
// Throws DimensionMismatch if the argument sizes disagree with the problem.
double hamiltonian(const OcpProblem& problem, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, double tau);

// Componentwise box projection of every interval value onto [lower, upper].
ControlTrajectory project(const ControlTrajectory& u, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper);

// Barzilai-Borwein step size from consecutive gradient/control trajectories:
//   integral <g - g_prev, u - u_prev> / integral |g - g_prev|^2
// with trajectory integrals taken over the piecewise-constant interval values.
// The ratio is clamped to [alpha_min, alpha_max]; `raw` (if non-null) receives
// the unclamped value. Throws DegenerateStep when the denominator is below
// 1e-12.
double bb_step_size(const ControlTrajectory& g, const ControlTrajectory& g_prev,
                    const ControlTrajectory& u, const ControlTrajectory& u_prev,
                    double alpha_min, double alpha_max, double* raw = nullptr);

// Receding-horizon warm start: drop the first `shift` intervals and repeat the
// final value to keep the interval count. shift >= count returns a constant
// trajectory of the last value.
ControlTrajectory warm_start(const ControlTrajectory& previous, int shift);

// Fixed-iteration projected-gradient solver. Each iteration rolls the current
// controls forward, sweeps the costate backward from zero through the exact
// reverse of the discretized rollout, assembles the reduced gradient per
// interval, takes a Barzilai-Borwein step (the very first step uses alpha0, as
// does any degenerate or negative ratio), and projects onto the input box. No
// convergence test is performed: after `iterations` updates the final
// candidate is rolled out once more and the cheapest evaluated iterate is
// returned.
//
// Instances keep scratch storage between calls; one instance per problem
// stream, not thread-safe across concurrent calls.
class PgmSolver {
 public:
  PgmSolver() = default;

  MpcSolution solve_step(const OcpProblem& problem, const Eigen::VectorXd& x0,
                         const ControlTrajectory& u_init, const SolverConfig& config);

  // Objective of a single rollout (no gradient work). Exposed for diagnostics
  // and for derivative checks against numerical differentiation.
  double eval_cost(const OcpProblem& problem, const Eigen::VectorXd& x0,
                   const ControlTrajectory& u);

  // Reduced gradient at `u` via one forward and one costate sweep.
  ControlTrajectory eval_gradient(const OcpProblem& problem, const Eigen::VectorXd& x0,
                                  const ControlTrajectory& u);

 private:
  // Rolls out controls with RK4, accumulating the running cost through the
  // same stages; returns the objective.
  double rollout(const OcpProblem& problem, const Eigen::VectorXd& x0,
                 const ControlTrajectory& u, StateTrajectory& x_out);

  // Costate sweep + per-interval gradient assembly as the exact adjoint of the
  // rollout discretization.
  void gradient(const OcpProblem& problem, const StateTrajectory& x,
                const ControlTrajectory& u, ControlTrajectory& g_out);

  // Scratch (sized on demand).
  Eigen::MatrixXd jx_, ju_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, y2_, y3_, y4_, xm_;
  Eigen::VectorXd lx_, lu_, lxm_, w_, xbar_, x1bar_, kbar_, ybar_, ubar_;
};

}  // namespace plan
