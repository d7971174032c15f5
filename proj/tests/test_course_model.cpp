#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "plan/course_model.hpp"
#include "plan/courses.hpp"
#include "plan/errors.hpp"
#include "plan/pgm_solver.hpp"
#include "support.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gentle random wavy course along +x with exact half-meter chords.
plan::SampledCourse random_wavy_course(std::mt19937& rng, double span) {
  const double a1 = plan::testing::uniform(rng, 0.5, 2.0);
  const double a2 = plan::testing::uniform(rng, 0.3, 1.5);
  const double w1 = plan::testing::uniform(rng, 0.05, 0.2);
  const double w2 = plan::testing::uniform(rng, 0.08, 0.25);
  const double p1 = plan::testing::uniform(rng, 0.0, 6.28);
  const int m = static_cast<int>(span / 0.01) + 1;
  Eigen::Matrix2Xd dense(2, m);
  for (int i = 0; i < m; ++i) {
    const double t = 0.01 * i;
    dense(0, i) = t;
    dense(1, i) = a1 * std::sin(w1 * t + p1) + a2 * std::cos(w2 * t);
  }
  return plan::SampledCourse::from_points(
      plan::resample_exact_chords(dense, 0.5));
}

}  // namespace

TEST_CASE("sample course construction and arc tags") {
  Eigen::Matrix2Xd pts(2, 4);
  pts << 0.0, 3.0, 3.0, 3.0,
         0.0, 4.0, 6.0, 7.5;
  plan::SampledCourse course = plan::SampledCourse::from_points(pts);
  CHECK(course.s[0] == 0.0);
  CHECK(course.s[1] == doctest::Approx(5.0));
  CHECK(course.s[2] == doctest::Approx(7.0));
  CHECK(course.s[3] == doctest::Approx(8.5));
  CHECK(course.length() == doctest::Approx(8.5));

  Eigen::Matrix2Xd two(2, 2);
  two.setZero();
  CHECK_THROWS_AS(plan::SampledCourse::from_points(two), plan::DegenerateSpacing);

  Eigen::Matrix2Xd dup(2, 3);
  dup << 0.0, 1.0, 1.0,
         0.0, 0.0, 0.0;
  CHECK_THROWS_AS(plan::SampledCourse::from_points(dup), plan::DegenerateSpacing);
}

TEST_CASE("interpolation reproduces knots and blends affinely") {
  Eigen::Matrix2Xd pts(2, 3);
  pts << 0.0, 1.0, 2.0,
         0.0, 1.0, 0.0;
  plan::SampledCourse course = plan::SampledCourse::from_points(pts);

  CHECK((course.interpolate(0.0) - Eigen::Vector2d(0, 0)).norm() == 0.0);
  CHECK((course.interpolate(course.s[1]) - Eigen::Vector2d(1, 1)).norm() == 0.0);
  const Eigen::Vector2d mid = course.interpolate(0.5 * course.s[1]);
  CHECK(mid.x() == doctest::Approx(0.5));
  CHECK(mid.y() == doctest::Approx(0.5));
  // Clamped beyond the span.
  CHECK((course.interpolate(-3.0) - Eigen::Vector2d(0, 0)).norm() == 0.0);
  CHECK((course.interpolate(50.0) - Eigen::Vector2d(2, 0)).norm() == 0.0);

  CHECK(course.chord_heading(0.1) == doctest::Approx(kPi / 4.0));
  CHECK(course.chord_heading(course.s[1] + 0.1) == doctest::Approx(-kPi / 4.0));

  CHECK(course.nearest_distance(Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(0.0));
  CHECK(course.nearest_distance(Eigen::Vector2d(0.0, 1.0)) ==
        doctest::Approx(std::sqrt(0.5)));
  CHECK(course.nearest_distance(Eigen::Vector2d(3.0, 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("curvature estimate: straight, circle, orientation") {
  plan::SampledCourse line = plan::straight_course(20.0, 0.5);
  plan::CurvatureProfile flat = plan::numeric_curvature(line);
  CHECK(flat.values().cwiseAbs().maxCoeff() < 1e-12);

  plan::SampledCourse circle = plan::circle_course(13.0, 0.5, 0.5);
  plan::CurvatureProfile round = plan::numeric_curvature(circle);
  for (int i = 1; i + 1 < circle.size(); ++i) {
    CHECK(round.values()[i] == doctest::Approx(1.0 / 13.0).epsilon(0.02));
  }

  // Right-hand circle: negative curvature.
  plan::SampledCourse cw = plan::circle_course(-13.0, 0.5, 0.5);
  plan::CurvatureProfile cw_round = plan::numeric_curvature(cw);
  for (int i = 1; i + 1 < cw.size(); ++i) {
    CHECK(cw_round.values()[i] == doctest::Approx(-1.0 / 13.0).epsilon(0.02));
  }

  // Reversing the traversal flips the sign estimate-for-estimate.
  Eigen::Matrix2Xd rev = circle.points.rowwise().reverse();
  plan::CurvatureProfile back = plan::numeric_curvature(
      plan::SampledCourse::from_points(rev));
  const int n = circle.size();
  for (int i = 0; i < n; ++i) {
    CHECK(back.values()[i] ==
          doctest::Approx(-round.values()[n - 1 - i]).epsilon(1e-12));
  }

  // Mirroring across the x axis flips the sign sample-for-sample.
  Eigen::Matrix2Xd mirrored = circle.points;
  mirrored.row(1) = -mirrored.row(1);
  plan::CurvatureProfile mirror = plan::numeric_curvature(
      plan::SampledCourse::from_points(mirrored));
  for (int i = 0; i < n; ++i) {
    CHECK(mirror.values()[i] == doctest::Approx(-round.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("course dynamics: unit speed and circle closure") {
  Eigen::VectorXd x(3), dx(3);
  x << 5.0, -2.0, 0.0;
  plan::course_dynamics(x, 0.3, dx);
  CHECK(dx[0] == doctest::Approx(1.0));
  CHECK(dx[1] == doctest::Approx(0.0));
  CHECK(dx[2] == doctest::Approx(0.3));
  x[2] = 1.1;
  plan::course_dynamics(x, 0.0, dx);
  CHECK(std::hypot(dx[0], dx[1]) == doctest::Approx(1.0).epsilon(1e-15));

  Eigen::VectorXd knots(2), vals(2);
  knots << 0.0, 100.0;
  vals << 0.1, 0.1;
  plan::CurvatureProfile bend(knots, vals);

  // Fine steps: the polyline of the integrated unit-speed curve has chord
  // length matching the arc parameter.
  plan::StateTrajectory fine =
      plan::integrate_course(Eigen::Vector3d(0, 0, 0), bend, 0.0, 10.0, 0.005);
  CHECK(fine.grid.count == 2000);
  double chord_sum = 0.0;
  for (int i = 1; i <= fine.grid.count; ++i) {
    chord_sum += (fine.values.col(i).head<2>() - fine.values.col(i - 1).head<2>()).norm();
  }
  CHECK(std::abs(chord_sum - 10.0) < 1e-5);

  // A full turn at kappa = 0.1 returns to the start.
  const double lap = 2.0 * kPi / 0.1;
  plan::StateTrajectory loop =
      plan::integrate_course(Eigen::Vector3d(0, 0, 0), bend, 0.0, lap, 0.5);
  CHECK(loop.values.col(loop.grid.count).head<2>().norm() < 1e-3);

  // Zero curvature runs straight down +x.
  vals << 0.0, 0.0;
  plan::StateTrajectory straight = plan::integrate_course(
      Eigen::Vector3d(0, 0, 0), plan::CurvatureProfile(knots, vals), 0.0, 25.0, 0.5);
  CHECK(straight.values.col(straight.grid.count).head<2>().x() ==
        doctest::Approx(25.0));
  CHECK(std::abs(straight.values.col(straight.grid.count).y()) < 1e-12);
}

TEST_CASE("window problem grid and degenerate window") {
  auto course = std::make_shared<plan::SampledCourse>(plan::straight_course(60.0, 0.5));
  plan::CourseParams params;

  plan::OcpProblem problem = plan::build_course_problem(course, 0.0, 10.0, params, 0.5);
  CHECK(problem.grid.count == 20);
  CHECK(problem.grid.step == doctest::Approx(0.5));
  CHECK(problem.grid.span() == doctest::Approx(10.0));
  CHECK(problem.state_dim == 3);
  CHECK(problem.input_dim == 1);

  // Sub-step window becomes one interval.
  plan::OcpProblem tiny = plan::build_course_problem(course, 0.0, 0.3, params, 0.5);
  CHECK(tiny.grid.count == 1);
  CHECK(tiny.grid.step == doctest::Approx(0.3));

  // Windows clamp to the course extent.
  plan::OcpProblem tail = plan::build_course_problem(course, 55.0, 500.0, params, 0.5);
  CHECK(tail.grid.start == doctest::Approx(55.0));
  CHECK(tail.grid.count == 10);

  CHECK_THROWS_AS(plan::build_course_problem(course, 60.0, 80.0, params, 0.5),
                  plan::ConfigError);
  CHECK_THROWS_AS(plan::build_course_problem(nullptr, 0.0, 10.0, params, 0.5),
                  plan::ConfigError);
}

TEST_CASE("window anchor uses an unbiased tangent") {
  plan::SampledCourse circle = plan::circle_course(13.0, 0.5, 0.5);
  // The chord direction at s = 0 is biased by half the per-chord turning
  // (about 0.019 rad here); the quadratic tangent must not be.
  const Eigen::Vector3d x0 = plan::course_window_start(circle, 0.0);
  CHECK(x0.x() == doctest::Approx(0.0));
  CHECK(x0.y() == doctest::Approx(0.0));
  CHECK(std::abs(x0.z()) < 1e-3);
  CHECK(std::abs(circle.chord_heading(0.0)) > 1e-2);

  const Eigen::Vector3d x5 = plan::course_window_start(circle, 5.0);
  CHECK(x5.z() == doctest::Approx(5.0 / 13.0).epsilon(1e-3));
}

TEST_CASE("fitting a straight course returns zero curvature") {
  auto course = std::make_shared<plan::SampledCourse>(plan::straight_course(60.0, 0.5));
  plan::CourseParams params;
  plan::OcpProblem problem = plan::build_course_problem(course, 0.0, 40.0, params, 0.5);
  plan::PgmSolver solver;
  plan::SolverConfig cfg;
  plan::MpcSolution sol =
      solver.solve_step(problem, plan::course_window_start(*course, 0.0),
                        plan::ControlTrajectory::zero(problem.grid, 1), cfg);
  CHECK(sol.u_star.values.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("fitting a circle window recovers its curvature") {
  auto course = std::make_shared<plan::SampledCourse>(plan::circle_course(13.0, 0.9, 0.5));
  plan::CourseParams params;
  plan::OcpProblem problem = plan::build_course_problem(course, 5.0, 45.0, params, 0.5);
  plan::CurvatureProfile raw = plan::numeric_curvature(*course);
  plan::ControlTrajectory u0 = plan::ControlTrajectory::zero(problem.grid, 1);
  for (int j = 0; j < problem.grid.count; ++j) {
    u0.values(0, j) = raw.eval(problem.grid.start + (j + 0.5) * problem.grid.step);
  }
  plan::PgmSolver solver;
  plan::SolverConfig cfg;
  plan::MpcSolution sol =
      solver.solve_step(problem, plan::course_window_start(*course, 5.0), u0, cfg);
  const int n = problem.grid.count;
  const double mean = sol.u_star.values.row(0).segment(5, n - 10).mean();
  CHECK(mean == doctest::Approx(1.0 / 13.0).epsilon(0.03));
}

TEST_CASE("fit objective gradient matches finite differences") {
  std::mt19937 rng(90210);
  plan::PgmSolver solver;
  plan::CourseParams params;

  for (int trial = 0; trial < 50; ++trial) {
    auto course = std::make_shared<plan::SampledCourse>(random_wavy_course(rng, 40.0));
    const double s0 = 2.0;
    const double s1 = std::min(course->length(), 22.0);
    plan::OcpProblem problem = plan::build_course_problem(course, s0, s1, params, 0.5);

    Eigen::Vector3d x0 = plan::course_window_start(*course, s0);
    x0.x() += plan::testing::uniform(rng, -0.3, 0.3);
    x0.y() += plan::testing::uniform(rng, -0.3, 0.3);
    x0.z() += plan::testing::uniform(rng, -0.1, 0.1);

    plan::ControlTrajectory u = plan::ControlTrajectory::zero(problem.grid, 1);
    for (int j = 0; j < problem.grid.count; ++j) {
      u.values(0, j) = plan::testing::uniform(rng, -0.2, 0.2);
    }

    const plan::ControlTrajectory g = solver.eval_gradient(problem, x0, u);
    const plan::ControlTrajectory g_fd = plan::testing::fd_gradient(solver, problem, x0, u);
    for (int j = 0; j < g.values.cols(); ++j) {
      CHECK(std::abs(g.values(0, j) - g_fd.values(0, j)) <=
            1e-4 * std::abs(g_fd.values(0, j)) + 1e-7);
    }
  }
}

TEST_CASE("midpoint profile from piecewise-constant controls") {
  plan::Grid grid{2.0, 0.5, 4};
  plan::ControlTrajectory u = plan::ControlTrajectory::zero(grid, 1);
  u.values << 0.1, -0.2, 0.3, 0.0;
  plan::CurvatureProfile prof = plan::profile_from_controls(u);

  CHECK(prof.front() == doctest::Approx(2.0));
  CHECK(prof.back() == doctest::Approx(4.0));
  CHECK(prof.eval(2.25) == doctest::Approx(0.1));
  CHECK(prof.eval(2.75) == doctest::Approx(-0.2));
  CHECK(prof.eval(3.25) == doctest::Approx(0.3));
  CHECK(prof.eval(3.75) == doctest::Approx(0.0));
  // Flat pads reach the window edges; between midpoints it blends linearly.
  CHECK(prof.eval(2.0) == doctest::Approx(0.1));
  CHECK(prof.eval(4.0) == doctest::Approx(0.0));
  CHECK(prof.eval(2.5) == doctest::Approx(-0.05));
}

TEST_CASE("figure-of-eight generator geometry") {
  plan::SampledCourse eight = plan::lying_eight_course(0.075, 0.5);

  CHECK(eight.points.col(0).norm() == 0.0);
  CHECK(eight.length() > 300.0);
  CHECK(eight.length() < 450.0);
  CHECK(eight.chord_heading(0.0) == doctest::Approx(kPi / 4.0).epsilon(1e-4));

  // Every chord is exactly the requested spacing, so tags are exact
  // half-meter multiples.
  double max_err = 0.0;
  for (int i = 1; i < eight.size(); ++i) {
    max_err = std::max(max_err, std::abs((eight.points.col(i) -
                                          eight.points.col(i - 1)).norm() - 0.5));
  }
  CHECK(max_err < 1e-12);
  CHECK(eight.s[eight.size() - 1] == doctest::Approx(0.5 * (eight.size() - 1)));

  plan::CurvatureProfile raw = plan::numeric_curvature(eight);
  CHECK(raw.values().cwiseAbs().maxCoeff() == doctest::Approx(0.075).epsilon(0.02));
  // The crossing is revisited mid-lap.
  double nearest_mid = 1e9;
  for (int i = eight.size() / 4; i < 3 * eight.size() / 4; ++i) {
    nearest_mid = std::min(nearest_mid, eight.points.col(i).norm());
  }
  CHECK(nearest_mid < 0.5);
}

TEST_CASE("turn generator signs the curvature by turn direction") {
  plan::SampledCourse right = plan::turn_course(10.0, 15.0, -kPi / 2.0, 10.0, 0.5);
  plan::CurvatureProfile k_right = plan::numeric_curvature(right);
  const double mid_arc = 10.0 + 0.5 * 15.0 * kPi / 2.0;
  CHECK(k_right.eval(mid_arc) == doctest::Approx(-1.0 / 15.0).epsilon(0.01));
  CHECK(k_right.eval(2.0) == doctest::Approx(0.0).epsilon(1e-6));

  plan::SampledCourse left = plan::turn_course(10.0, 15.0, kPi / 2.0, 10.0, 0.5);
  plan::CurvatureProfile k_left = plan::numeric_curvature(left);
  CHECK(k_left.eval(mid_arc) == doctest::Approx(1.0 / 15.0).epsilon(0.01));
}

TEST_CASE("receding fit converges fast and beats the raw estimate") {
  auto course =
      std::make_shared<plan::SampledCourse>(plan::lying_eight_course(0.075, 0.5));
  const plan::FitQuality raw_quality =
      plan::measure_fit(*course, plan::numeric_curvature(*course), 0.5);

  plan::CourseFitConfig cfg;
  plan::CourseFitter fitter(course, cfg);
  CHECK(fitter.intervals() == course->size() - 1);

  // Before any sweep the profile is the raw estimate resampled to interval
  // midpoints, so its quality sits near the raw run.
  plan::FitQuality q_prev = fitter.quality();
  CHECK(q_prev.rms_same_arc > 0.005);

  fitter.sweep();
  plan::FitQuality q1 = fitter.quality();
  // The first sweep is the big drop; later sweeps hold the plateau.
  CHECK(q1.rms_same_arc < q_prev.rms_same_arc / 5.0);
  q_prev = q1;
  for (int sweep = 2; sweep <= 4; ++sweep) {
    fitter.sweep();
    const plan::FitQuality q = fitter.quality();
    CHECK(q.rms_same_arc <= q_prev.rms_same_arc + 1e-4);
    q_prev = q;
  }

  CHECK(q_prev.rms_same_arc < 0.005);
  CHECK(q_prev.max_nearest < 0.01);
  // Integrating the raw estimate drifts several times further from the
  // course than integrating the fitted curvature.
  CHECK(raw_quality.max_nearest > 5.0 * q_prev.max_nearest);

  // Published profile spans the whole course.
  auto prof = fitter.profile();
  CHECK(prof->front() == doctest::Approx(0.0));
  CHECK(prof->back() == doctest::Approx(course->length()));
}

TEST_CASE("fitter rejects a course shorter than one step") {
  auto course = std::make_shared<plan::SampledCourse>(plan::straight_course(1.0, 0.5));
  plan::CourseFitConfig cfg;
  cfg.ds = 2.0;
  CHECK_THROWS_AS(plan::CourseFitter(course, cfg), plan::CourseTooShort);
}
