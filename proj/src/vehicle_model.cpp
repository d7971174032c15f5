#include "plan/vehicle_model.hpp"

#include <cmath>

#include "plan/errors.hpp"

namespace plan {

namespace {

// Shared intermediates of one dynamics/cost evaluation at a state.
struct FrenetTerms {
  double kap = 0.0;     // curvature at the projection point
  double kap_s = 0.0;   // local curvature slope along arc length
  double den = 0.0;     // guarded 1 - d_perp * kappa
  bool clamped = false; // guard active: den partials are zero
  double cd = 0.0;      // cos(psi - psi_r)
  double sd = 0.0;      // sin(psi - psi_r)
  double gain = 0.0;    // ell * (1 + (v / v_ch)^2)
  double gain_v = 0.0;  // d gain / d v
};

FrenetTerms frenet_terms(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const ProfileView& kappa, const VehicleParams& p) {
  FrenetTerms t;
  t.kap = kappa.eval(x[kSr]);
  t.kap_s = kappa.slope(x[kSr]);
  const double den_raw = 1.0 - x[kDperp] * t.kap;
  t.clamped = std::abs(den_raw) < p.eps_den;
  if (t.clamped) {
    t.den = den_raw >= 0.0 ? p.eps_den : -p.eps_den;
  } else {
    t.den = den_raw;
  }
  const double heading_err = x[kPsi] - x[kPsiR];
  t.cd = std::cos(heading_err);
  t.sd = std::sin(heading_err);
  const double ratio = x[kV] / p.v_ch;
  t.gain = p.ell * (1.0 + ratio * ratio);
  t.gain_v = 2.0 * p.ell * x[kV] / (p.v_ch * p.v_ch);
  return t;
}

}  // namespace

double characteristic_velocity(double c_f, double c_r, double l_f, double l_r,
                               double mass, double ell) {
  if (!(mass > 0.0) || !(ell > 0.0)) {
    throw ConfigError("characteristic velocity: mass and wheelbase must be positive");
  }
  const double balance = c_r * l_r - c_f * l_f;
  if (!(balance > 0.0)) {
    throw UnderSteerViolation(
        "characteristic velocity: rear stiffness-lever product must exceed the front one");
  }
  return std::sqrt(ell * ell * c_f * c_r / (mass * balance));
}

void vehicle_dynamics(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& u,
                      const ProfileView& kappa, const VehicleParams& p,
                      Eigen::Ref<Eigen::VectorXd> out) {
  const FrenetTerms t = frenet_terms(x, kappa, p);
  const double v = x[kV];
  out[kX] = v * std::cos(x[kPsi]);
  out[kY] = v * std::sin(x[kPsi]);
  out[kPsi] = v * x[kDelta] / t.gain;
  out[kDelta] = u[0];
  out[kV] = u[1];
  out[kDperp] = v * t.sd;
  out[kPsiR] = v * t.cd * t.kap / t.den;
  out[kSr] = v * t.cd / t.den;
}

void vehicle_dynamics_jacobians(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& u,
                                const ProfileView& kappa, const VehicleParams& p,
                                Eigen::Ref<Eigen::MatrixXd> fx,
                                Eigen::Ref<Eigen::MatrixXd> fu) {
  (void)u;
  const FrenetTerms t = frenet_terms(x, kappa, p);
  const double v = x[kV];
  const double cpsi = std::cos(x[kPsi]);
  const double spsi = std::sin(x[kPsi]);

  fx.setZero();
  fx(kX, kPsi) = -v * spsi;
  fx(kX, kV) = cpsi;
  fx(kY, kPsi) = v * cpsi;
  fx(kY, kV) = spsi;
  fx(kPsi, kDelta) = v / t.gain;
  fx(kPsi, kV) = x[kDelta] * (t.gain - v * t.gain_v) / (t.gain * t.gain);

  fx(kDperp, kPsi) = v * t.cd;
  fx(kDperp, kPsiR) = -v * t.cd;
  fx(kDperp, kV) = t.sd;

  fx(kPsiR, kPsi) = -v * t.sd * t.kap / t.den;
  fx(kPsiR, kPsiR) = v * t.sd * t.kap / t.den;
  fx(kPsiR, kV) = t.cd * t.kap / t.den;

  fx(kSr, kPsi) = -v * t.sd / t.den;
  fx(kSr, kPsiR) = v * t.sd / t.den;
  fx(kSr, kV) = t.cd / t.den;

  if (t.clamped) {
    // Frozen denominator: only the explicit kappa(s_r) factor still moves.
    fx(kPsiR, kSr) = v * t.cd * t.kap_s / t.den;
  } else {
    const double den2 = t.den * t.den;
    fx(kPsiR, kDperp) = v * t.cd * t.kap * t.kap / den2;
    // d/ds_r of kap/den with den = 1 - d_perp*kap collapses to kap_s/den^2.
    fx(kPsiR, kSr) = v * t.cd * t.kap_s / den2;
    fx(kSr, kDperp) = v * t.cd * t.kap / den2;
    fx(kSr, kSr) = v * t.cd * x[kDperp] * t.kap_s / den2;
  }

  fu.setZero();
  fu(kDelta, 0) = 1.0;
  fu(kV, 1) = 1.0;
}

Eigen::Matrix<double, 6, 1> xi_map(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const VehicleParams& p) {
  const double v = x[kV];
  const double ratio = v / p.v_ch;
  const double gain = p.ell * (1.0 + ratio * ratio);
  const double kappa_v = x[kDelta] / gain;
  Eigen::Matrix<double, 6, 1> xi;
  xi << v * x[kPsi], v * v * kappa_v, x[kPsi], kappa_v, x[kDperp], v;
  return xi;
}

double target_speed(double kappa_r, const VehicleParams& p) {
  const double mag = std::abs(kappa_r);
  // min(v_sl, sqrt(a_lat_max / |kappa|)); the curvature branch engages above
  // a_lat_max / v_sl^2, and the limit applies at the tie.
  if (mag * p.v_sl * p.v_sl > p.a_lat_max) {
    return std::sqrt(p.a_lat_max / mag);
  }
  return p.v_sl;
}

void SpeedSchedule::validate() const {
  grid.validate();
  if (v_hat.size() != grid.count + 1) {
    throw DimensionMismatch("speed schedule needs one value per grid node");
  }
}

double SpeedSchedule::eval(double tau) const {
  const double rel = (tau - grid.start) / grid.step;
  if (rel <= 0.0) return v_hat[0];
  if (rel >= grid.count) return v_hat[grid.count];
  const int i = std::min(static_cast<int>(rel), grid.count - 1);
  const double f = rel - i;
  return (1.0 - f) * v_hat[i] + f * v_hat[i + 1];
}

SpeedSchedule constant_speed_schedule(const Grid& grid, double v_hat) {
  SpeedSchedule sched;
  sched.grid = grid;
  sched.v_hat = Eigen::VectorXd::Constant(grid.count + 1, v_hat);
  sched.validate();
  return sched;
}

SpeedSchedule speed_schedule_from_prediction(const StateTrajectory& predicted,
                                             const CurvatureProfile& profile,
                                             const VehicleParams& p) {
  SpeedSchedule sched;
  sched.grid = predicted.grid;
  sched.v_hat.resize(predicted.grid.count + 1);
  for (int i = 0; i <= predicted.grid.count; ++i) {
    sched.v_hat[i] = target_speed(profile.eval(predicted.values(kSr, i)), p);
  }
  sched.validate();
  return sched;
}

Eigen::Matrix<double, 6, 1> target_xi(double v, double psi_r, double kappa_r,
                                      double v_hat, const VehicleParams& p) {
  Eigen::Matrix<double, 6, 1> xi_hat;
  xi_hat << v * psi_r, v * v * kappa_r, psi_r, kappa_r, p.d_perp_target, v_hat;
  return xi_hat;
}

double bound_penalty(double value, double lo, double hi) {
  if (value > hi) {
    const double e = value - hi;
    return e * e;
  }
  if (value < lo) {
    const double e = value - lo;
    return e * e;
  }
  return 0.0;
}

double bound_penalty_slope(double value, double lo, double hi) {
  if (value > hi) return 2.0 * (value - hi);
  if (value < lo) return 2.0 * (value - lo);
  return 0.0;
}

double vehicle_stage_cost(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& u,
                          const ProfileView& kappa, double v_hat,
                          const VehicleParams& p) {
  const double kap = kappa.eval(x[kSr]);
  const Eigen::Matrix<double, 6, 1> e =
      xi_map(x, p) - target_xi(x[kV], x[kPsiR], kap, v_hat, p);
  double cost = e.cwiseProduct(e).dot(p.q);
  cost += p.r[0] * u[0] * u[0] + p.r[1] * u[1] * u[1];
  cost += p.gamma * bound_penalty(x[kDelta], -p.delta_max, p.delta_max);
  return cost;
}

void vehicle_cost_gradients(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& u,
                            const ProfileView& kappa, double v_hat,
                            const VehicleParams& p,
                            Eigen::Ref<Eigen::VectorXd> lx,
                            Eigen::Ref<Eigen::VectorXd> lu) {
  const double v = x[kV];
  const double psi = x[kPsi];
  const double kap = kappa.eval(x[kSr]);
  const double kap_s = kappa.slope(x[kSr]);

  const double ratio = v / p.v_ch;
  const double gain = p.ell * (1.0 + ratio * ratio);
  const double gain_v = 2.0 * p.ell * v / (p.v_ch * p.v_ch);

  const Eigen::Matrix<double, 6, 1> e =
      xi_map(x, p) - target_xi(v, x[kPsiR], kap, v_hat, p);
  // w_i = 2 q_i e_i, the outer quadratic pulled through each feature.
  const Eigen::Matrix<double, 6, 1> w = 2.0 * p.q.cwiseProduct(e);

  const double kappa_v = x[kDelta] / gain;
  const double kappa_v_v = -x[kDelta] * gain_v / (gain * gain);

  lx.setZero();
  lx[kPsi] = w[0] * v + w[2];
  lx[kDelta] = (w[1] * v * v + w[3]) / gain +
               p.gamma * bound_penalty_slope(x[kDelta], -p.delta_max, p.delta_max);
  // The speed scaling of the first two targets makes their errors
  // v * (psi - psi_r) and v^2 * (kappa_v - kappa_r); the product rule brings
  // those relative errors back into the speed partial.
  lx[kV] = w[0] * (psi - x[kPsiR]) +
           w[1] * (2.0 * v * (kappa_v - kap) + v * v * kappa_v_v) +
           w[3] * kappa_v_v + w[5];
  lx[kDperp] = w[4];
  // Reference features move with the projection point; their partials enter
  // with opposite sign through the error. The speed target does not: it is a
  // scheduled function of time, constant under this differentiation.
  lx[kPsiR] = -(w[0] * v + w[2]);
  lx[kSr] = -((w[1] * v * v + w[3]) * kap_s);

  lu[0] = 2.0 * p.r[0] * u[0];
  lu[1] = 2.0 * p.r[1] * u[1];
}

OcpProblem build_vehicle_problem(const VehicleParams& p,
                                 std::shared_ptr<const CurvatureProfile> profile,
                                 std::shared_ptr<const SpeedSchedule> schedule,
                                 double t_horizon, int n_horizon,
                                 std::atomic<std::uint64_t>* extrapolations) {
  if (!profile || profile->empty()) {
    throw ConfigError("vehicle problem: curvature profile required");
  }
  if (!schedule) {
    throw ConfigError("vehicle problem: speed schedule required");
  }
  schedule->validate();
  if (!(t_horizon > 0.0) || n_horizon < 1) {
    throw ConfigError("vehicle problem: horizon must be positive");
  }
  OcpProblem problem;
  problem.state_dim = kVehicleStateDim;
  problem.input_dim = kVehicleInputDim;
  problem.grid = Grid{0.0, t_horizon / n_horizon, n_horizon};
  problem.u_lower = Eigen::Vector2d(-p.ddelta_max, p.a_min);
  problem.u_upper = Eigen::Vector2d(p.ddelta_max, p.a_max);

  // The snapshot is captured by value in every callback, so the problem owns
  // its curvature data for its whole lifetime.
  problem.dynamics = [p, profile, extrapolations](
                         Eigen::Ref<const Eigen::VectorXd> x,
                         Eigen::Ref<const Eigen::VectorXd> u, double,
                         Eigen::Ref<Eigen::VectorXd> out) {
    vehicle_dynamics(x, u, ProfileView{profile.get(), extrapolations}, p, out);
  };
  problem.dynamics_jac_x = [p, profile](Eigen::Ref<const Eigen::VectorXd> x,
                                        Eigen::Ref<const Eigen::VectorXd> u, double,
                                        Eigen::Ref<Eigen::MatrixXd> out) {
    thread_local Eigen::MatrixXd fu(kVehicleStateDim, kVehicleInputDim);
    vehicle_dynamics_jacobians(x, u, ProfileView{profile.get(), nullptr}, p, out, fu);
  };
  problem.dynamics_jac_u = [p, profile](Eigen::Ref<const Eigen::VectorXd> x,
                                        Eigen::Ref<const Eigen::VectorXd> u, double,
                                        Eigen::Ref<Eigen::MatrixXd> out) {
    thread_local Eigen::MatrixXd fx(kVehicleStateDim, kVehicleStateDim);
    vehicle_dynamics_jacobians(x, u, ProfileView{profile.get(), nullptr}, p, fx, out);
  };
  problem.stage_cost = [p, profile, schedule](Eigen::Ref<const Eigen::VectorXd> x,
                                              Eigen::Ref<const Eigen::VectorXd> u,
                                              double tau) -> double {
    return vehicle_stage_cost(x, u, ProfileView{profile.get(), nullptr},
                              schedule->eval(tau), p);
  };
  problem.cost_grad_x = [p, profile, schedule](Eigen::Ref<const Eigen::VectorXd> x,
                                               Eigen::Ref<const Eigen::VectorXd> u,
                                               double tau,
                                               Eigen::Ref<Eigen::VectorXd> out) {
    thread_local Eigen::VectorXd lu(kVehicleInputDim);
    vehicle_cost_gradients(x, u, ProfileView{profile.get(), nullptr},
                           schedule->eval(tau), p, out, lu);
  };
  problem.cost_grad_u = [p, profile, schedule](Eigen::Ref<const Eigen::VectorXd> x,
                                               Eigen::Ref<const Eigen::VectorXd> u,
                                               double tau,
                                               Eigen::Ref<Eigen::VectorXd> out) {
    thread_local Eigen::VectorXd lx(kVehicleStateDim);
    vehicle_cost_gradients(x, u, ProfileView{profile.get(), nullptr},
                           schedule->eval(tau), p, lx, out);
  };
  problem.validate();
  return problem;
}

}  // namespace plan
