#include "plan/pgm_solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "plan/errors.hpp"

namespace plan {

void OcpProblem::validate() const {
  grid.validate();
  if (state_dim < 1 || input_dim < 0) {
    throw DimensionMismatch("problem dimensions must be positive");
  }
  if (u_lower.size() != input_dim || u_upper.size() != input_dim) {
    throw DimensionMismatch("input bound size does not match input_dim");
  }
  for (int k = 0; k < input_dim; ++k) {
    if (!(u_lower[k] <= u_upper[k])) {
      throw DimensionMismatch("input bounds must satisfy lower <= upper");
    }
  }
  if (!dynamics || !dynamics_jac_x || !dynamics_jac_u || !stage_cost || !cost_grad_x ||
      !cost_grad_u) {
    throw DimensionMismatch("problem callbacks must all be set");
  }
}

double hamiltonian(const OcpProblem& problem, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, double tau) {
  if (x.size() != problem.state_dim || lambda.size() != problem.state_dim ||
      u.size() != problem.input_dim) {
    throw DimensionMismatch("hamiltonian argument sizes disagree with the problem");
  }
  Eigen::VectorXd f(problem.state_dim);
  problem.dynamics(x, u, tau, f);
  return problem.stage_cost(x, u, tau) + lambda.dot(f);
}

ControlTrajectory project(const ControlTrajectory& u, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper) {
  if (lower.size() != u.values.rows() || upper.size() != u.values.rows()) {
    throw DimensionMismatch("projection bound size does not match control rows");
  }
  ControlTrajectory out = u;
  for (int i = 0; i < out.values.cols(); ++i) {
    out.values.col(i) = out.values.col(i).cwiseMax(lower).cwiseMin(upper);
  }
  return out;
}

double bb_step_size(const ControlTrajectory& g, const ControlTrajectory& g_prev,
                    const ControlTrajectory& u, const ControlTrajectory& u_prev,
                    double alpha_min, double alpha_max, double* raw) {
  if (g.values.rows() != u.values.rows() || g.values.cols() != u.values.cols() ||
      g_prev.values.rows() != g.values.rows() || g_prev.values.cols() != g.values.cols() ||
      u_prev.values.rows() != u.values.rows() || u_prev.values.cols() != u.values.cols()) {
    throw DimensionMismatch("step-size trajectories must share one shape");
  }
  // The interval width cancels between the two piecewise-constant integrals,
  // but keep it so both are genuine trajectory integrals.
  const double h = g.grid.step;
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < g.values.cols(); ++i) {
    for (int k = 0; k < g.values.rows(); ++k) {
      const double dg = g.values(k, i) - g_prev.values(k, i);
      const double du = u.values(k, i) - u_prev.values(k, i);
      num += dg * du * h;
      den += dg * dg * h;
    }
  }
  if (den < 1e-12) {
    throw DegenerateStep("gradient difference vanished; no curvature information");
  }
  const double ratio = num / den;
  if (raw != nullptr) *raw = ratio;
  return std::clamp(ratio, alpha_min, alpha_max);
}

ControlTrajectory warm_start(const ControlTrajectory& previous, int shift) {
  if (shift < 0) {
    throw DimensionMismatch("warm start shift must be non-negative");
  }
  ControlTrajectory out = previous;
  const int count = static_cast<int>(previous.values.cols());
  if (count == 0 || shift == 0) return out;
  const int keep = std::max(count - shift, 0);
  for (int i = 0; i < keep; ++i) {
    out.values.col(i) = previous.values.col(i + shift);
  }
  for (int i = keep; i < count; ++i) {
    out.values.col(i) = previous.values.col(count - 1);
  }
  return out;
}

double PgmSolver::rollout(const OcpProblem& problem, const Eigen::VectorXd& x0,
                          const ControlTrajectory& u, StateTrajectory& x_out) {
  x_out = integrate_forward(problem.dynamics, x0, u, problem.grid);
  const StateInterpolant interp(x_out);
  const double h = problem.grid.step;
  xm_.resize(problem.state_dim);
  double cost = 0.0;
  for (int i = 0; i < problem.grid.count; ++i) {
    const double tau = problem.grid.node(i);
    const auto ui = u.values.col(i);
    interp.eval_in_interval(i, tau + 0.5 * h, xm_);
    const double l0 = problem.stage_cost(x_out.values.col(i), ui, tau);
    const double lm = problem.stage_cost(xm_, ui, tau + 0.5 * h);
    const double l1 = problem.stage_cost(x_out.values.col(i + 1), ui, tau + h);
    cost += (h / 6.0) * (l0 + 4.0 * lm + l1);
  }
  if (!std::isfinite(cost)) {
    throw NonFiniteState("rollout produced a non-finite objective");
  }
  return cost;
}

void PgmSolver::gradient(const OcpProblem& problem, const StateTrajectory& x,
                         const ControlTrajectory& u, ControlTrajectory& g_out) {
  const int n = problem.state_dim;
  const int m = problem.input_dim;
  const double h = problem.grid.step;
  jx_.resize(n, n);
  ju_.resize(n, m);
  k1_.resize(n);
  k2_.resize(n);
  k3_.resize(n);
  k4_.resize(n);
  y2_.resize(n);
  y3_.resize(n);
  y4_.resize(n);
  xm_.resize(n);
  lx_.resize(n);
  lxm_.resize(n);
  lu_.resize(m);
  ubar_.resize(m);

  g_out.grid = problem.grid;
  g_out.values.resize(m, problem.grid.count);

  // Reverse sweep of the rollout discretization itself: each interval redoes
  // the integrator stages and the mid-interval reconstruction from the stored
  // nodes, then back-propagates the Simpson cost weights through them, so the
  // assembled gradient differentiates the evaluated objective rather than a
  // nearby continuous limit. `w_` carries dJ/dx_i across intervals; it enters
  // as the zero terminal costate.
  w_ = Eigen::VectorXd::Zero(n);
  for (int i = problem.grid.count - 1; i >= 0; --i) {
    const double tau = problem.grid.node(i);
    const auto ui = u.values.col(i);
    const auto xi = x.values.col(i);
    const auto x1 = x.values.col(i + 1);

    problem.dynamics(xi, ui, tau, k1_);
    y2_ = xi + 0.5 * h * k1_;
    problem.dynamics(y2_, ui, tau + 0.5 * h, k2_);
    y3_ = xi + 0.5 * h * k2_;
    problem.dynamics(y3_, ui, tau + 0.5 * h, k3_);
    y4_ = xi + h * k3_;
    problem.dynamics(y4_, ui, tau + h, k4_);
    xm_ = 0.5 * (xi + x1) + (h / 8.0) * (k1_ - k4_);

    // lxm_ becomes the cotangent on the reconstructed midpoint; x1bar_ and
    // xbar_ collect everything flowing into the right and left node.
    problem.cost_grad_x(xm_, ui, tau + 0.5 * h, lxm_);
    lxm_ *= 2.0 * h / 3.0;
    problem.cost_grad_x(x1, ui, tau + h, lx_);
    x1bar_ = w_ + (h / 6.0) * lx_ + 0.5 * lxm_;
    problem.cost_grad_x(xi, ui, tau, lx_);
    xbar_ = x1bar_ + (h / 6.0) * lx_ + 0.5 * lxm_;

    problem.cost_grad_u(xi, ui, tau, ubar_);
    problem.cost_grad_u(xm_, ui, tau + 0.5 * h, lu_);
    ubar_ += 4.0 * lu_;
    problem.cost_grad_u(x1, ui, tau + h, lu_);
    ubar_ = (h / 6.0) * (ubar_ + lu_);

    // Stages in reverse: each cotangent feeds the control, the left node, and
    // the stage state one step earlier.
    kbar_ = (h / 6.0) * x1bar_ - (h / 8.0) * lxm_;
    problem.dynamics_jac_u(y4_, ui, tau + h, ju_);
    ubar_.noalias() += ju_.transpose() * kbar_;
    problem.dynamics_jac_x(y4_, ui, tau + h, jx_);
    ybar_.noalias() = jx_.transpose() * kbar_;
    xbar_ += ybar_;

    kbar_ = (h / 3.0) * x1bar_ + h * ybar_;
    problem.dynamics_jac_u(y3_, ui, tau + 0.5 * h, ju_);
    ubar_.noalias() += ju_.transpose() * kbar_;
    problem.dynamics_jac_x(y3_, ui, tau + 0.5 * h, jx_);
    ybar_.noalias() = jx_.transpose() * kbar_;
    xbar_ += ybar_;

    kbar_ = (h / 3.0) * x1bar_ + 0.5 * h * ybar_;
    problem.dynamics_jac_u(y2_, ui, tau + 0.5 * h, ju_);
    ubar_.noalias() += ju_.transpose() * kbar_;
    problem.dynamics_jac_x(y2_, ui, tau + 0.5 * h, jx_);
    ybar_.noalias() = jx_.transpose() * kbar_;
    xbar_ += ybar_;

    kbar_ = (h / 6.0) * x1bar_ + (h / 8.0) * lxm_ + 0.5 * h * ybar_;
    problem.dynamics_jac_u(xi, ui, tau, ju_);
    ubar_.noalias() += ju_.transpose() * kbar_;
    problem.dynamics_jac_x(xi, ui, tau, jx_);
    xbar_.noalias() += jx_.transpose() * kbar_;

    // Same per-interval-average convention as the cost integral.
    g_out.values.col(i) = ubar_ / h;
    w_ = xbar_;
  }
}

double PgmSolver::eval_cost(const OcpProblem& problem, const Eigen::VectorXd& x0,
                            const ControlTrajectory& u) {
  StateTrajectory x;
  return rollout(problem, x0, u, x);
}

ControlTrajectory PgmSolver::eval_gradient(const OcpProblem& problem, const Eigen::VectorXd& x0,
                                           const ControlTrajectory& u) {
  StateTrajectory x = integrate_forward(problem.dynamics, x0, u, problem.grid);
  ControlTrajectory g;
  gradient(problem, x, u, g);
  return g;
}

MpcSolution PgmSolver::solve_step(const OcpProblem& problem, const Eigen::VectorXd& x0,
                                  const ControlTrajectory& u_init, const SolverConfig& config) {
  problem.validate();
  if (x0.size() != problem.state_dim) {
    throw DimensionMismatch("initial state size does not match the problem");
  }
  if (config.iterations < 0 || !(config.alpha0 > 0.0) ||
      !(config.alpha_min <= config.alpha_max)) {
    throw DimensionMismatch("solver config requires iterations >= 0 and a valid step clamp");
  }

  MpcSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  best.gradient_norm = std::numeric_limits<double>::quiet_NaN();
  best.cost_history.reserve(config.iterations + 1);
  best.alpha_last = config.alpha0;

  ControlTrajectory u_cur = project(u_init, problem.u_lower, problem.u_upper);
  ControlTrajectory u_prev, g_cur, g_prev;
  StateTrajectory x_cur;
  const double h = problem.grid.step;

  for (int j = 0; j < config.iterations; ++j) {
    const double cost = rollout(problem, x0, u_cur, x_cur);
    best.cost_history.push_back(cost);
    if (cost < best.cost) {
      best.cost = cost;
      best.u_star = u_cur;
      best.x_star = x_cur;
      best.best_index = j;
    }

    gradient(problem, x_cur, u_cur, g_cur);
    best.gradient_norm = std::sqrt(g_cur.values.squaredNorm() * h);

    double alpha = config.alpha0;
    if (j > 0) {
      try {
        double raw = 0.0;
        alpha = bb_step_size(g_cur, g_prev, u_cur, u_prev, config.alpha_min,
                             config.alpha_max, &raw);
        // A negative ratio points uphill on the secant model; restart small.
        if (raw < 0.0) alpha = config.alpha0;
      } catch (const DegenerateStep&) {
        alpha = config.alpha0;
      }
    }

    u_prev = u_cur;
    g_prev = g_cur;
    u_cur.values -= alpha * g_cur.values;
    u_cur = project(u_cur, problem.u_lower, problem.u_upper);
    best.alpha_last = alpha;
  }

  // The last projected update has not been costed yet; evaluate it so it can win.
  const double cost = rollout(problem, x0, u_cur, x_cur);
  best.cost_history.push_back(cost);
  if (cost < best.cost) {
    best.cost = cost;
    best.u_star = u_cur;
    best.x_star = x_cur;
    best.best_index = config.iterations;
  }
  return best;
}

}  // namespace plan
