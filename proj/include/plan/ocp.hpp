#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "plan/grid.hpp"

namespace plan {

using StageCostFn = std::function<double(Eigen::Ref<const Eigen::VectorXd> x,
                                         Eigen::Ref<const Eigen::VectorXd> u, double tau)>;
using CostGradFn = std::function<void(Eigen::Ref<const Eigen::VectorXd> x,
                                      Eigen::Ref<const Eigen::VectorXd> u, double tau,
                                      Eigen::Ref<Eigen::VectorXd> out)>;
using DynamicsJacFn = std::function<void(Eigen::Ref<const Eigen::VectorXd> x,
                                         Eigen::Ref<const Eigen::VectorXd> u, double tau,
                                         Eigen::Ref<Eigen::MatrixXd> out)>;
using DynamicsFieldFn = std::function<void(Eigen::Ref<const Eigen::VectorXd> x,
                                           Eigen::Ref<const Eigen::VectorXd> u, double tau,
                                           Eigen::Ref<Eigen::VectorXd> out)>;

// Continuous-time optimal control problem over a uniform horizon grid with a
// running cost, box input bounds, and no terminal cost. All callbacks must be
// pure in their arguments; `tau` is absolute (grid.start offsets it).
struct OcpProblem {
  int state_dim = 0;
  int input_dim = 0;
  Grid grid;
  Eigen::VectorXd u_lower;  // input_dim
  Eigen::VectorXd u_upper;  // input_dim

  DynamicsFieldFn dynamics;    // dx/dtau = f(x, u, tau)
  DynamicsJacFn dynamics_jac_x;  // state_dim x state_dim
  DynamicsJacFn dynamics_jac_u;  // state_dim x input_dim
  StageCostFn stage_cost;        // l(x, u, tau) >= accumulated into the objective
  CostGradFn cost_grad_x;        // dl/dx, state_dim
  CostGradFn cost_grad_u;        // dl/du, input_dim

  void validate() const;
};

// Knobs of the fixed-iteration projected-gradient solve.
struct SolverConfig {
  int iterations = 3;        // gradient iterations per call; 0 degenerates to a rollout
  double alpha0 = 1e-3;      // first step size, also the fallback step
  double alpha_min = 1e-6;   // Barzilai-Borwein clamp, lower
  double alpha_max = 1e2;    // Barzilai-Borwein clamp, upper
};

// Best iterate found within the iteration budget, with its rollout.
struct MpcSolution {
  ControlTrajectory u_star;
  StateTrajectory x_star;
  double cost = 0.0;
  // L2 trajectory norm of the most recently assembled gradient
  // (NaN when the solve ran zero iterations).
  double gradient_norm = 0.0;
  // Objective of each evaluated iterate: iterations + 1 entries (the final
  // projected update is rolled out and eligible to win).
  std::vector<double> cost_history;
  int best_index = 0;
  // Step size used by the last gradient update, suitable as the next call's
  // alpha0 when warm starting a receding sequence (alpha0 when no update ran).
  double alpha_last = 0.0;
};

}  // namespace plan
