#pragma once

#include <Eigen/Core>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "plan/course_model.hpp"
#include "plan/curvature_profile.hpp"
#include "plan/ocp.hpp"
#include "plan/pgm_solver.hpp"
#include "plan/vehicle_model.hpp"

namespace plan {

// Sequential runs the course fit then the vehicle plan inside the caller's
// thread (bitwise reproducible); parallel hands each solve to a persistent
// worker. Both modes feed the two solves from the same pre-cycle snapshots,
// so they compute identical plans.
enum class CouplingMode { kSequential, kParallel };

struct CouplingConfig {
  VehicleParams vehicle;
  CourseParams course;
  SolverConfig v_solver;    // per-cycle iteration budget, vehicle instance
  SolverConfig c_solver;    // per-cycle iteration budget, course instance
  double t_horizon = 2.0;   // vehicle prediction horizon [s]
  int n_horizon = 40;       // vehicle horizon intervals
  double ds = 0.5;          // course fitting arc step [m]
  double s0 = -1.0;         // initial window length [m]; <= 0 sizes it from
                            // the initial speed (2 v0 t_horizon, floor 5 m)
  double margin = 5.0;      // window slack beyond the predicted arc progress [m]
  CouplingMode mode = CouplingMode::kSequential;
};

struct CycleResult {
  MpcSolution vehicle;   // vehicle plan of this cycle
  MpcSolution course;    // course fit of this cycle (empty if it failed)
  bool refit = true;     // false when the course solve failed and the
                         // published profile is the previous snapshot
  double v_solve_us = 0.0;
  double c_solve_us = 0.0;
  double cycle_us = 0.0;
};

// One planning pipeline coupling the two controllers: the vehicle plan is
// solved against the latest published curvature profile, the course fit is
// solved over a window tied to the vehicle's predicted arc progress, and
// after both finish the window and the profile are exchanged for the next
// cycle. Profiles are immutable snapshots replaced wholesale, so a solve in
// flight never observes a torn update.
class ConcurrentPlanner {
 public:
  // Publishes the initial profile (finite-difference curvature over the
  // initial window) before any planning happens. Throws CourseTooShort when
  // the initial window does not fit inside the course.
  ConcurrentPlanner(std::shared_ptr<const SampledCourse> course,
                    const Eigen::VectorXd& x0, CouplingConfig cfg);
  ~ConcurrentPlanner();

  ConcurrentPlanner(const ConcurrentPlanner&) = delete;
  ConcurrentPlanner& operator=(const ConcurrentPlanner&) = delete;

  // Runs one coupled cycle for the current plant state. `elapsed` is the wall
  // time the plant advanced since the previous cycle; it drives the
  // receding-horizon shift of the vehicle warm start. Vehicle solver errors
  // propagate; a failed course solve keeps the previous profile.
  CycleResult step_cycle(const Eigen::VectorXd& x, double elapsed = 0.0);

  std::shared_ptr<const CurvatureProfile> profile() const { return profile_; }
  double window_start() const { return window_lo_; }
  double window_end() const { return window_hi_; }
  // Arc length the latest vehicle plan covers, s_r at the horizon end minus
  // s_r now; zero before the first cycle.
  double v_horizon_arc() const { return v_horizon_arc_; }
  std::uint64_t cycles() const { return cycle_counter_; }
  // Curvature evaluations the vehicle instance made outside the published
  // span; stays zero whenever the margin outruns the per-cycle progress.
  std::uint64_t extrapolations() const {
    return extrapolations_.load(std::memory_order_relaxed);
  }

 private:
  double lattice_floor(double s) const;
  double lattice_ceil(double s) const;
  // Piecewise-linear profile over the window's interval midpoints, edge-padded
  // so the span reaches at least `hi`.
  std::shared_ptr<const CurvatureProfile> midpoint_profile(double lo, double hi,
                                                           const Eigen::VectorXd& mids) const;
  void worker_loop(int bit);

  std::shared_ptr<const SampledCourse> course_;
  CouplingConfig cfg_;
  double course_end_ = 0.0;  // course length snapped down to the ds lattice
  int n_course_ = 0;         // whole ds intervals on the course

  std::shared_ptr<const CurvatureProfile> profile_;
  double window_lo_ = 0.0;
  double window_hi_ = 0.0;
  double v_horizon_arc_ = 0.0;
  std::uint64_t cycle_counter_ = 0;
  std::atomic<std::uint64_t> extrapolations_{0};

  Eigen::VectorXd c_warm_;   // per-lattice-interval curvature warm data
  Eigen::Vector3d c_anchor_ = Eigen::Vector3d::Zero();  // fit pose at window_lo_
  ControlTrajectory v_warm_;
  bool have_v_warm_ = false;
  double shift_accum_ = 0.0;
  // Step sizes carried across cycles: the previous solve's final step seeds
  // the next solve so small iteration budgets skip the cold-start ramp.
  double v_alpha_ = 0.0;
  double c_alpha_ = 0.0;

  PgmSolver v_solver_;
  PgmSolver c_solver_;

  // Fork-join plumbing for the parallel mode.
  std::mutex mu_;
  std::condition_variable cv_;
  int pending_ = 0;
  bool stop_ = false;
  std::thread c_thread_;
  std::thread v_thread_;
  const OcpProblem* job_c_problem_ = nullptr;
  const OcpProblem* job_v_problem_ = nullptr;
  const ControlTrajectory* job_c_init_ = nullptr;
  const ControlTrajectory* job_v_init_ = nullptr;
  SolverConfig job_c_cfg_;
  SolverConfig job_v_cfg_;
  Eigen::VectorXd job_c_x0_;
  Eigen::VectorXd job_v_x0_;
  MpcSolution job_c_out_;
  MpcSolution job_v_out_;
  std::exception_ptr job_c_error_;
  std::exception_ptr job_v_error_;
  double job_c_us_ = 0.0;
  double job_v_us_ = 0.0;
};

}  // namespace plan
