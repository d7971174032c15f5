#pragma once

#include <Eigen/Core>
#include <functional>

#include "plan/grid.hpp"

namespace plan {

// Right-hand side of a controlled ODE: writes dx/dtau into `out`.
using DynamicsFn = std::function<void(Eigen::Ref<const Eigen::VectorXd> x,
                                      Eigen::Ref<const Eigen::VectorXd> u, double tau,
                                      Eigen::Ref<Eigen::VectorXd> out)>;

// Right-hand side of the costate ODE: writes dlambda/dtau into `out`.
using AdjointFn = std::function<void(Eigen::Ref<const Eigen::VectorXd> x,
                                     Eigen::Ref<const Eigen::VectorXd> u,
                                     Eigen::Ref<const Eigen::VectorXd> lambda, double tau,
                                     Eigen::Ref<Eigen::VectorXd> out)>;

// Classic fixed-step 4th-order Runge-Kutta sweep over the grid with
// zero-order-hold controls. Fills interval end-slopes on the result so dense
// output between nodes is available to the backward pass.
// Throws NonFiniteState as soon as a node stops being finite.
StateTrajectory integrate_forward(const DynamicsFn& f, const Eigen::VectorXd& x0,
                                  const ControlTrajectory& u, const Grid& grid);

// Integrates the costate ODE backward from lambda(end) = lambda_end in reverse
// node order with the same RK4 scheme. States needed between nodes are
// reconstructed by cubic Hermite interpolation when `x` carries interval
// slopes, otherwise linearly. Controls use the same zero-order hold as the
// forward pass. Returns lambda at every node.
StateTrajectory integrate_backward(const AdjointFn& g, const Eigen::VectorXd& lambda_end,
                                   const StateTrajectory& x, const ControlTrajectory& u,
                                   const Grid& grid);

// Dense state lookup between nodes of an integrated trajectory. Cubic Hermite
// per interval when slopes are present (4th-order accurate), linear otherwise.
class StateInterpolant {
 public:
  explicit StateInterpolant(const StateTrajectory& traj);

  void eval(double tau, Eigen::Ref<Eigen::VectorXd> out) const;

  // Evaluates inside a specific interval (clamps the local coordinate to [0, 1]).
  void eval_in_interval(int interval, double tau, Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  const StateTrajectory* traj_;
  bool cubic_;
};

}  // namespace plan
