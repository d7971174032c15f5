#pragma once

#include <Eigen/Core>

#include "plan/errors.hpp"

namespace plan {

// Uniform discretization of a horizon: `count` intervals of width `step`
// starting at `start`. Nodes are start + i*step for i = 0..count.
// The independent variable is time for the vehicle problem and arc length
// for the course problem.
struct Grid {
  double start = 0.0;
  double step = 0.0;
  int count = 0;

  double node(int i) const { return start + step * static_cast<double>(i); }
  double span() const { return step * static_cast<double>(count); }
  int nodes() const { return count + 1; }

  void validate() const {
    if (!(step > 0.0) || count < 1) {
      throw DimensionMismatch("grid requires step > 0 and count >= 1");
    }
  }
};

// States sampled at grid nodes, one column per node (count + 1 columns).
// `interval_d0` / `interval_d1`, when non-empty, hold the state derivative at
// the left/right end of each interval evaluated with that interval's control
// (count columns each). They enable cubic dense output between nodes without
// storing integrator stage states.
struct StateTrajectory {
  Grid grid;
  Eigen::MatrixXd values;
  Eigen::MatrixXd interval_d0;
  Eigen::MatrixXd interval_d1;

  int state_dim() const { return static_cast<int>(values.rows()); }
  bool has_derivatives() const { return interval_d0.cols() == grid.count && interval_d1.cols() == grid.count; }
};

// Piecewise-constant (zero-order-hold) control signal: one column per
// interval (count columns). The value in column i applies on
// [node(i), node(i+1)).
struct ControlTrajectory {
  Grid grid;
  Eigen::MatrixXd values;

  int input_dim() const { return static_cast<int>(values.rows()); }

  static ControlTrajectory zero(const Grid& grid, int input_dim) {
    ControlTrajectory u;
    u.grid = grid;
    u.values = Eigen::MatrixXd::Zero(input_dim, grid.count);
    return u;
  }

  static ControlTrajectory constant(const Grid& grid, const Eigen::VectorXd& value) {
    ControlTrajectory u;
    u.grid = grid;
    u.values = value.replicate(1, grid.count);
    return u;
  }
};

}  // namespace plan
