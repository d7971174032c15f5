#include "plan/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plan/errors.hpp"

namespace plan {
namespace {

bool all_finite(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

void check_control_shape(const ControlTrajectory& u, const Grid& grid) {
  if (u.values.cols() != grid.count) {
    throw DimensionMismatch("control trajectory has " + std::to_string(u.values.cols()) +
                            " intervals, grid expects " + std::to_string(grid.count));
  }
}

}  // namespace

StateTrajectory integrate_forward(const DynamicsFn& f, const Eigen::VectorXd& x0,
                                  const ControlTrajectory& u, const Grid& grid) {
  grid.validate();
  check_control_shape(u, grid);
  const int n = static_cast<int>(x0.size());
  const double h = grid.step;

  StateTrajectory out;
  out.grid = grid;
  out.values.resize(n, grid.count + 1);
  out.interval_d0.resize(n, grid.count);
  out.interval_d1.resize(n, grid.count);
  out.values.col(0) = x0;

  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), xt(n);
  for (int i = 0; i < grid.count; ++i) {
    const double tau = grid.node(i);
    const auto ui = u.values.col(i);
    const auto xi = out.values.col(i);

    f(xi, ui, tau, k1);
    xt = xi + 0.5 * h * k1;
    f(xt, ui, tau + 0.5 * h, k2);
    xt = xi + 0.5 * h * k2;
    f(xt, ui, tau + 0.5 * h, k3);
    xt = xi + h * k3;
    f(xt, ui, tau + h, k4);

    out.values.col(i + 1) = xi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.interval_d0.col(i) = k1;
    // k4 is the slope at the interval's right end up to the scheme's own
    // accuracy, so no extra field evaluation is needed for dense output.
    out.interval_d1.col(i) = k4;

    if (!all_finite(out.values.col(i + 1))) {
      throw NonFiniteState("forward integration became non-finite at node " +
                           std::to_string(i + 1));
    }
  }
  return out;
}

StateInterpolant::StateInterpolant(const StateTrajectory& traj)
    : traj_(&traj), cubic_(traj.has_derivatives()) {}

void StateInterpolant::eval_in_interval(int interval, double tau,
                                        Eigen::Ref<Eigen::VectorXd> out) const {
  const Grid& g = traj_->grid;
  const double h = g.step;
  double theta = (tau - g.node(interval)) / h;
  theta = std::clamp(theta, 0.0, 1.0);
  const auto x0 = traj_->values.col(interval);
  const auto x1 = traj_->values.col(interval + 1);
  if (!cubic_) {
    out = (1.0 - theta) * x0 + theta * x1;
    return;
  }
  const auto d0 = traj_->interval_d0.col(interval);
  const auto d1 = traj_->interval_d1.col(interval);
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  out = (2.0 * t3 - 3.0 * t2 + 1.0) * x0 + (t3 - 2.0 * t2 + theta) * h * d0 +
        (-2.0 * t3 + 3.0 * t2) * x1 + (t3 - t2) * h * d1;
}

void StateInterpolant::eval(double tau, Eigen::Ref<Eigen::VectorXd> out) const {
  const Grid& g = traj_->grid;
  int i = static_cast<int>(std::floor((tau - g.start) / g.step));
  i = std::clamp(i, 0, g.count - 1);
  eval_in_interval(i, tau, out);
}

StateTrajectory integrate_backward(const AdjointFn& g, const Eigen::VectorXd& lambda_end,
                                   const StateTrajectory& x, const ControlTrajectory& u,
                                   const Grid& grid) {
  grid.validate();
  check_control_shape(u, grid);
  if (x.values.cols() != grid.count + 1) {
    throw DimensionMismatch("state trajectory node count does not match grid");
  }
  const int n = static_cast<int>(lambda_end.size());
  const double h = grid.step;
  const StateInterpolant interp(x);

  StateTrajectory out;
  out.grid = grid;
  out.values.resize(n, grid.count + 1);
  out.values.col(grid.count) = lambda_end;

  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), lt(n);
  Eigen::VectorXd xm(x.state_dim());
  for (int i = grid.count; i >= 1; --i) {
    const double tau = grid.node(i);
    // The step covers interval i-1, whose zero-order-hold control applies.
    const auto ui = u.values.col(i - 1);
    const auto li = out.values.col(i);

    g(x.values.col(i), ui, li, tau, k1);
    interp.eval_in_interval(i - 1, tau - 0.5 * h, xm);
    lt = li - 0.5 * h * k1;
    g(xm, ui, lt, tau - 0.5 * h, k2);
    lt = li - 0.5 * h * k2;
    g(xm, ui, lt, tau - 0.5 * h, k3);
    lt = li - h * k3;
    g(x.values.col(i - 1), ui, lt, tau - h, k4);

    out.values.col(i - 1) = li - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!all_finite(out.values.col(i - 1))) {
      throw NonFiniteState("backward integration became non-finite at node " +
                           std::to_string(i - 1));
    }
  }
  return out;
}

}  // namespace plan
