#include "plan/concurrent_mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "plan/errors.hpp"

namespace plan {
namespace {

constexpr int kCourseJob = 1;
constexpr int kVehicleJob = 2;

double now_us() {
  return std::chrono::duration<double, std::micro>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ConcurrentPlanner::ConcurrentPlanner(std::shared_ptr<const SampledCourse> course,
                                     const Eigen::VectorXd& x0, CouplingConfig cfg)
    : course_(std::move(course)), cfg_(cfg) {
  if (!course_) {
    throw ConfigError("planner: course required");
  }
  if (x0.size() != kVehicleStateDim) {
    throw DimensionMismatch("planner: initial state must have 8 components");
  }
  if (!(cfg_.ds > 0.0) || !(cfg_.t_horizon > 0.0) || cfg_.n_horizon < 1 ||
      !(cfg_.margin >= 0.0)) {
    throw ConfigError("planner: ds, t_horizon, n_horizon and margin must be positive");
  }

  n_course_ = static_cast<int>(std::floor(course_->length() / cfg_.ds + 1e-9));
  course_end_ = n_course_ * cfg_.ds;
  if (n_course_ < 1) {
    throw CourseTooShort("planner: course shorter than one fitting step");
  }

  // Finite-difference curvature seeds the per-interval warm data, resampled
  // at the lattice midpoints.
  const CurvatureProfile raw = numeric_curvature(*course_, cfg_.course.kappa_cap);
  c_warm_.resize(n_course_);
  for (int j = 0; j < n_course_; ++j) {
    c_warm_[j] = raw.eval((j + 0.5) * cfg_.ds);
  }

  const double s_r0 = std::clamp(x0[kSr], 0.0, course_->length());
  double span = cfg_.s0;
  if (!(span > 0.0)) {
    span = std::max(5.0, 2.0 * std::max(x0[kV], 0.0) * cfg_.t_horizon);
  }
  window_lo_ = lattice_floor(s_r0);
  if (window_lo_ + span > course_end_ + 1e-9) {
    throw CourseTooShort("planner: initial window reaches past the course end");
  }
  window_hi_ = lattice_ceil(window_lo_ + span);

  const int j0 = static_cast<int>(std::llround(window_lo_ / cfg_.ds));
  const int nw = static_cast<int>(std::llround((window_hi_ - window_lo_) / cfg_.ds));
  profile_ = midpoint_profile(window_lo_, window_hi_, c_warm_.segment(j0, nw));
  c_anchor_ = course_window_start(*course_, window_lo_);
  v_alpha_ = cfg_.v_solver.alpha0;
  c_alpha_ = cfg_.c_solver.alpha0;

  if (cfg_.mode == CouplingMode::kParallel) {
    c_thread_ = std::thread(&ConcurrentPlanner::worker_loop, this, kCourseJob);
    v_thread_ = std::thread(&ConcurrentPlanner::worker_loop, this, kVehicleJob);
  }
}

ConcurrentPlanner::~ConcurrentPlanner() {
  if (cfg_.mode == CouplingMode::kParallel) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    if (c_thread_.joinable()) c_thread_.join();
    if (v_thread_.joinable()) v_thread_.join();
  }
}

double ConcurrentPlanner::lattice_floor(double s) const {
  const double snapped = std::floor(s / cfg_.ds + 1e-9) * cfg_.ds;
  return std::clamp(snapped, 0.0, course_end_);
}

double ConcurrentPlanner::lattice_ceil(double s) const {
  const double snapped = std::ceil(s / cfg_.ds - 1e-9) * cfg_.ds;
  return std::clamp(snapped, 0.0, course_end_);
}

std::shared_ptr<const CurvatureProfile> ConcurrentPlanner::midpoint_profile(
    double lo, double hi, const Eigen::VectorXd& mids) const {
  const int n = static_cast<int>(mids.size());
  Eigen::VectorXd knots(n + 2), values(n + 2);
  knots[0] = lo;
  values[0] = mids[0];
  for (int j = 0; j < n; ++j) {
    knots[j + 1] = lo + (j + 0.5) * cfg_.ds;
    values[j + 1] = mids[j];
  }
  knots[n + 1] = std::max(hi, knots[n] + 0.5 * cfg_.ds);
  values[n + 1] = mids[n - 1];
  return std::make_shared<CurvatureProfile>(knots, values, cfg_.course.kappa_cap);
}

void ConcurrentPlanner::worker_loop(int bit) {
  PgmSolver solver;
  std::unique_lock<std::mutex> lock(mu_);
  for (;;) {
    cv_.wait(lock, [&] { return stop_ || (pending_ & bit) != 0; });
    if (stop_) return;
    // Job inputs are immutable while the bit is set; solve without the lock.
    lock.unlock();
    const double t0 = now_us();
    if (bit == kCourseJob) {
      try {
        job_c_out_ = solver.solve_step(*job_c_problem_, job_c_x0_, *job_c_init_,
                                       job_c_cfg_);
      } catch (...) {
        job_c_error_ = std::current_exception();
      }
      job_c_us_ = now_us() - t0;
    } else {
      try {
        job_v_out_ = solver.solve_step(*job_v_problem_, job_v_x0_, *job_v_init_,
                                       job_v_cfg_);
      } catch (...) {
        job_v_error_ = std::current_exception();
      }
      job_v_us_ = now_us() - t0;
    }
    lock.lock();
    pending_ &= ~bit;
    cv_.notify_all();
  }
}

CycleResult ConcurrentPlanner::step_cycle(const Eigen::VectorXd& x, double elapsed) {
  if (x.size() != kVehicleStateDim) {
    throw DimensionMismatch("planner: state must have 8 components");
  }
  const double cycle_t0 = now_us();

  // Snapshots for this cycle: both solves read the previous exchange only.
  const std::shared_ptr<const CurvatureProfile> profile_snapshot = profile_;
  const double lo = window_lo_;
  const double hi = window_hi_;
  const int j0 = static_cast<int>(std::llround(lo / cfg_.ds));
  const int nw = std::max(1, static_cast<int>(std::llround((hi - lo) / cfg_.ds)));

  OcpProblem c_problem =
      build_course_problem(course_, lo, hi, cfg_.course, cfg_.ds);

  ControlTrajectory c_init = ControlTrajectory::zero(c_problem.grid, 1);
  c_init.values.row(0) = c_warm_.segment(j0, nw).transpose();
  // Windows are chained through the fitted pose, not re-anchored on the raw
  // samples: re-anchoring would republish a jump in the near curvature right
  // under the vehicle at every advance.
  const Eigen::Vector3d c_x0 = c_anchor_;

  // Receding-horizon shift: advance the warm start by however many whole
  // horizon intervals the plant has moved since the previous cycle.
  const Grid v_grid{0.0, cfg_.t_horizon / cfg_.n_horizon, cfg_.n_horizon};
  int shift = 0;
  if (have_v_warm_) {
    shift_accum_ += elapsed;
    shift = static_cast<int>(std::floor(shift_accum_ / v_grid.step + 1e-9));
    if (shift > 0) {
      v_warm_ = warm_start(v_warm_, shift);
      shift_accum_ -= shift * v_grid.step;
    }
  } else {
    v_warm_ = ControlTrajectory::zero(v_grid, kVehicleInputDim);
    have_v_warm_ = true;
    shift_accum_ = 0.0;
  }

  // Predicted rollout of the warm start against this cycle's snapshot. It
  // pins the speed schedule and replaces the hold-last seed of the freshly
  // appended tail intervals, which know nothing about the course ahead, with
  // the local feedforward: steer rate following the curvature slope, braking
  // or accelerating towards the local speed target.
  const DynamicsFn v_dynamics = [&](Eigen::Ref<const Eigen::VectorXd> xs,
                                    Eigen::Ref<const Eigen::VectorXd> us, double,
                                    Eigen::Ref<Eigen::VectorXd> out) {
    vehicle_dynamics(xs, us, ProfileView{profile_snapshot.get(), nullptr},
                     cfg_.vehicle, out);
  };
  const StateTrajectory predicted = integrate_forward(v_dynamics, x, v_warm_, v_grid);
  auto schedule = std::make_shared<SpeedSchedule>(
      speed_schedule_from_prediction(predicted, *profile_snapshot, cfg_.vehicle));
  if (shift > 0) {
    const auto x_end = predicted.values.col(v_grid.count);
    const VehicleParams& vp = cfg_.vehicle;
    const double v_end = x_end[kV];
    const double gain_end = vp.ell * (1.0 + (v_end / vp.v_ch) * (v_end / vp.v_ch));
    const double kap_end = profile_snapshot->eval(x_end[kSr]);
    const double den = 1.0 - x_end[kDperp] * kap_end;
    const double s_dot = std::abs(den) < vp.eps_den
                             ? 0.0
                             : v_end * std::cos(x_end[kPsi] - x_end[kPsiR]) / den;
    const double u1_ff =
        std::clamp(gain_end * profile_snapshot->slope(x_end[kSr]) * s_dot,
                   -vp.ddelta_max, vp.ddelta_max);
    const double u2_ff = std::clamp(
        (target_speed(kap_end, vp) - v_end) / (2.0 * v_grid.step), vp.a_min, vp.a_max);
    for (int i = std::max(0, v_grid.count - shift); i < v_grid.count; ++i) {
      v_warm_.values(0, i) = u1_ff;
      v_warm_.values(1, i) = u2_ff;
    }
  }

  OcpProblem v_problem =
      build_vehicle_problem(cfg_.vehicle, profile_snapshot, schedule,
                            cfg_.t_horizon, cfg_.n_horizon, &extrapolations_);

  SolverConfig v_cfg = cfg_.v_solver;
  SolverConfig c_cfg = cfg_.c_solver;
  v_cfg.alpha0 = std::clamp(v_alpha_, v_cfg.alpha_min, v_cfg.alpha_max);
  c_cfg.alpha0 = std::clamp(c_alpha_, c_cfg.alpha_min, c_cfg.alpha_max);

  CycleResult result;
  std::exception_ptr c_error;

  if (cfg_.mode == CouplingMode::kParallel) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      job_c_problem_ = &c_problem;
      job_v_problem_ = &v_problem;
      job_c_init_ = &c_init;
      job_v_init_ = &v_warm_;
      job_c_x0_ = c_x0;
      job_v_x0_ = x;
      job_c_cfg_ = c_cfg;
      job_v_cfg_ = v_cfg;
      job_c_error_ = nullptr;
      job_v_error_ = nullptr;
      pending_ = kCourseJob | kVehicleJob;
    }
    cv_.notify_all();
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] { return pending_ == 0; });
    }
    if (job_v_error_) std::rethrow_exception(job_v_error_);
    c_error = job_c_error_;
    result.vehicle = std::move(job_v_out_);
    result.course = std::move(job_c_out_);
    result.v_solve_us = job_v_us_;
    result.c_solve_us = job_c_us_;
  } else {
    double t0 = now_us();
    try {
      result.course = c_solver_.solve_step(c_problem, c_x0, c_init, c_cfg);
    } catch (...) {
      c_error = std::current_exception();
    }
    result.c_solve_us = now_us() - t0;
    t0 = now_us();
    result.vehicle = v_solver_.solve_step(v_problem, x, v_warm_, v_cfg);
    result.v_solve_us = now_us() - t0;
  }

  v_warm_ = result.vehicle.u_star;
  // Carry the final step size only when the final iterate actually won;
  // otherwise it is a mid-oscillation step and the configured seed is safer.
  v_alpha_ = result.vehicle.best_index == cfg_.v_solver.iterations
                 ? result.vehicle.alpha_last
                 : cfg_.v_solver.alpha0;

  // Mutual update: the vehicle's predicted arc progress sizes the next
  // window, the course fit becomes the next published profile. A failed
  // course solve keeps the previous snapshot (stale but valid).
  const double s_r_now = std::clamp(x[kSr], 0.0, course_->length());
  const double s_r_end = result.vehicle.x_star.values(kSr, cfg_.n_horizon);
  v_horizon_arc_ = std::max(0.0, s_r_end - x[kSr]);

  double new_lo = lattice_floor(s_r_now);
  double new_hi = lattice_ceil(std::max(s_r_end, s_r_now) + cfg_.margin);
  if (!(new_hi - new_lo >= cfg_.ds - 1e-9)) {
    new_lo = std::max(0.0, new_hi - cfg_.ds);  // pinned at the course end
  }

  const int advance = std::clamp(
      static_cast<int>(std::llround((new_lo - lo) / cfg_.ds)), 0, nw);
  if (c_error == nullptr) {
    c_alpha_ = result.course.best_index == cfg_.c_solver.iterations
                   ? result.course.alpha_last
                   : cfg_.c_solver.alpha0;
    c_warm_.segment(j0, nw) = result.course.u_star.values.row(0).transpose();
    profile_ = midpoint_profile(lo, std::max(hi, new_hi),
                                c_warm_.segment(j0, nw));
    // Chained anchor: the fitted pose where the window advances to, same as
    // the offline fitter's commit.
    if (advance > 0) {
      c_anchor_ = result.course.x_star.values.col(advance);
    }
  } else {
    result.refit = false;
    result.course = MpcSolution{};
    if (advance > 0) {
      const StateTrajectory cont =
          integrate_course(c_anchor_, *profile_, lo, new_lo - lo, cfg_.ds);
      c_anchor_ = cont.values.col(cont.grid.count);
    }
  }
  window_lo_ = new_lo;
  window_hi_ = new_hi;
  ++cycle_counter_;

  result.cycle_us = now_us() - cycle_t0;
  return result;
}

}  // namespace plan
