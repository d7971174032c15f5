#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <memory>

#include "plan/curvature_profile.hpp"
#include "plan/ocp.hpp"

namespace plan {

// Kinematic single-track vehicle with understeer correction, expressed in a
// world frame and augmented with its own position relative to a reference
// course: lateral offset, course heading and arc progress. State layout:
//   [0] x      world position [m]
//   [1] y      world position [m]
//   [2] psi    vehicle heading [rad]
//   [3] delta  steer angle [rad]
//   [4] v      longitudinal speed [m/s]
//   [5] d_perp lateral offset from the course [m]
//   [6] psi_r  course heading at the projection point [rad]
//   [7] s_r    arc length of the projection point [m]
// Inputs: [0] steer rate [rad/s], [1] longitudinal acceleration [m/s^2].
enum VehicleState : int {
  kX = 0,
  kY = 1,
  kPsi = 2,
  kDelta = 3,
  kV = 4,
  kDperp = 5,
  kPsiR = 6,
  kSr = 7,
};

inline constexpr int kVehicleStateDim = 8;
inline constexpr int kVehicleInputDim = 2;

struct VehicleParams {
  double ell = 2.7;        // wheelbase [m]
  double v_ch = 20.0;      // characteristic velocity [m/s]
  double delta_max = 20.0 * 3.14159265358979323846 / 180.0;   // |steer| bound
  double ddelta_max = 5.0 * 3.14159265358979323846 / 180.0;   // |steer rate| bound
  double a_min = -2.5;     // acceleration bounds [m/s^2]
  double a_max = 2.0;
  double a_lat_max = 2.0;  // lateral acceleration used for speed shaping
  double v_sl = 10.0;      // speed limit [m/s]
  double gamma = 1e3;      // steer-bound penalty weight
  Eigen::Matrix<double, 6, 1> q =
      (Eigen::Matrix<double, 6, 1>() << 0.1, 0.1, 0.2, 0.2, 0.5, 0.5).finished();
  Eigen::Vector2d r = Eigen::Vector2d(1.0, 0.1);
  double d_perp_target = 0.0;
  double eps_den = 1e-3;   // guard for the Frenet denominator 1 - d_perp*kappa
};

// Characteristic velocity from single-track tyre and geometry data. Requires
// an understeering setup (rear cornering stiffness times rear lever arm must
// exceed the front product), otherwise the expression has no real root.
double characteristic_velocity(double c_f, double c_r, double l_f, double l_r,
                               double mass, double ell);

// Time derivative of the 8-dimensional state under the given curvature field.
void vehicle_dynamics(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& u,
                      const ProfileView& kappa, const VehicleParams& p,
                      Eigen::Ref<Eigen::VectorXd> out);

// Analytic Jacobians of the dynamics with respect to state and input. Where
// the Frenet denominator is held at its guard value the corresponding partial
// derivatives vanish, matching the clamped evaluation exactly.
void vehicle_dynamics_jacobians(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& u,
                                const ProfileView& kappa, const VehicleParams& p,
                                Eigen::Ref<Eigen::MatrixXd> fx,
                                Eigen::Ref<Eigen::MatrixXd> fu);

// Tracking features derived from the state:
//   [0] lateral velocity    v * psi (small-angle surrogate paired with the
//                           course-heading target)
//   [1] lateral accel       v^2 * kappa_v (centripetal; vanishes against its
//                           target exactly when speed and curvature track)
//   [2] heading             psi
//   [3] vehicle curvature   delta / (ell * (1 + (v / v_ch)^2))
//   [4] lateral offset      d_perp
//   [5] speed               v
Eigen::Matrix<double, 6, 1> xi_map(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const VehicleParams& p);

// Curvature-limited speed target: the speed limit, lowered where the course
// curvature would otherwise exceed the lateral acceleration budget.
double target_speed(double kappa_r, const VehicleParams& p);

// Speed target over the planning horizon, fixed before a solve and evaluated
// by clamped linear interpolation in time. Freezing the target per solve
// keeps it out of the optimality system: the optimizer cannot trade arc
// progress against the speed reference, and the target still refreshes every
// cycle through replanning.
struct SpeedSchedule {
  Grid grid;
  Eigen::VectorXd v_hat;  // one value per grid node

  double eval(double tau) const;
  void validate() const;
};

// Schedule holding one value everywhere, for standalone problems and tests.
SpeedSchedule constant_speed_schedule(const Grid& grid, double v_hat);

// Schedule from a predicted rollout: the curvature-limited target evaluated
// at the arc progress the prediction reaches at each horizon node.
SpeedSchedule speed_schedule_from_prediction(const StateTrajectory& predicted,
                                             const CurvatureProfile& profile,
                                             const VehicleParams& p);

// Reference features the tracking cost pulls towards: what xi_map would
// report for a vehicle riding the course at the given speed, except the last
// entry pulls the speed itself towards the scheduled target. Scaling the
// first two entries by the current speed keeps their residuals pure
// heading/curvature errors (no cross term with the speed transient) while
// weighting them quadratically/quartically with speed.
Eigen::Matrix<double, 6, 1> target_xi(double v, double psi_r, double kappa_r,
                                      double v_hat, const VehicleParams& p);

// One-sided quadratic exceedance penalty, C^1 across the bounds.
double bound_penalty(double value, double lo, double hi);
double bound_penalty_slope(double value, double lo, double hi);

// Stage cost: weighted squared feature error plus input effort plus the
// steer-bound penalty. `v_hat` is the scheduled speed target at this stage.
double vehicle_stage_cost(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& u,
                          const ProfileView& kappa, double v_hat,
                          const VehicleParams& p);

// Analytic stage-cost gradients, including the pull-through of the reference
// features' dependence on course heading and arc progress.
void vehicle_cost_gradients(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& u,
                            const ProfileView& kappa, double v_hat,
                            const VehicleParams& p,
                            Eigen::Ref<Eigen::VectorXd> lx,
                            Eigen::Ref<Eigen::VectorXd> lu);

// Assembles the optimal-control problem for one planning horizon against a
// fixed profile snapshot and a fixed speed schedule. Both are shared into the
// callbacks, so the problem stays valid after the caller drops its
// references. The optional counter tallies curvature evaluations outside the
// snapshot span.
OcpProblem build_vehicle_problem(const VehicleParams& p,
                                 std::shared_ptr<const CurvatureProfile> profile,
                                 std::shared_ptr<const SpeedSchedule> schedule,
                                 double t_horizon, int n_horizon,
                                 std::atomic<std::uint64_t>* extrapolations = nullptr);

}  // namespace plan
