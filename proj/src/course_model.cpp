#include "plan/course_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plan/errors.hpp"

namespace plan {

SampledCourse SampledCourse::from_points(const Eigen::Matrix2Xd& pts) {
  const int n = static_cast<int>(pts.cols());
  if (n < 3) {
    throw DegenerateSpacing("course: need at least three sample points");
  }
  SampledCourse course;
  course.points = pts;
  course.s.resize(n);
  course.s[0] = 0.0;
  for (int i = 1; i < n; ++i) {
    const double chord = (pts.col(i) - pts.col(i - 1)).norm();
    if (!(chord > 1e-9)) {
      throw DegenerateSpacing("course: coincident consecutive sample points");
    }
    course.s[i] = course.s[i - 1] + chord;
  }
  if (!course.points.allFinite()) {
    throw NonFiniteState("course: non-finite sample point");
  }
  return course;
}

int SampledCourse::segment(double arc) const {
  const int n = static_cast<int>(s.size());
  if (arc <= s[0]) return 0;
  if (arc >= s[n - 2]) return n - 2;
  const double* begin = s.data();
  const double* it = std::upper_bound(begin, begin + n, arc);
  return static_cast<int>(it - begin) - 1;
}

Eigen::Vector2d SampledCourse::interpolate(double arc) const {
  const int j = segment(arc);
  double t = (arc - s[j]) / (s[j + 1] - s[j]);
  t = std::clamp(t, 0.0, 1.0);
  return (1.0 - t) * points.col(j) + t * points.col(j + 1);
}

double SampledCourse::chord_heading(double arc) const {
  const int j = segment(arc);
  const Eigen::Vector2d d = points.col(j + 1) - points.col(j);
  return std::atan2(d.y(), d.x());
}

double SampledCourse::nearest_distance(const Eigen::Vector2d& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j + 1 < size(); ++j) {
    const Eigen::Vector2d a = points.col(j);
    const Eigen::Vector2d d = points.col(j + 1) - a;
    const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (p - (a + t * d)).norm());
  }
  return best;
}

CurvatureProfile numeric_curvature(const SampledCourse& course, double cap) {
  const int n = course.size();
  Eigen::VectorXd kappa(n);
  for (int i = 0; i < n; ++i) {
    // Quadratic through the triple around i (shifted inward at the ends),
    // differentiated at s_i with the true spacings.
    const int j = std::clamp(i, 1, n - 2);
    const double h1 = course.s[j] - course.s[j - 1];
    const double h2 = course.s[j + 1] - course.s[j];
    const Eigen::Vector2d b = (course.points.col(j) - course.points.col(j - 1)) / h1;
    const Eigen::Vector2d c =
        ((course.points.col(j + 1) - course.points.col(j)) / h2 - b) / (h1 + h2);
    const Eigen::Vector2d d1 =
        b + c * ((course.s[i] - course.s[j - 1]) + (course.s[i] - course.s[j]));
    const Eigen::Vector2d d2 = 2.0 * c;
    const double speed = d1.norm();
    if (!(speed > 1e-9)) {
      throw DegenerateSpacing("curvature estimate: vanishing tangent");
    }
    kappa[i] = (d1.x() * d2.y() - d1.y() * d2.x()) / (speed * speed * speed);
  }
  return CurvatureProfile(course.s, kappa, cap);
}

void course_dynamics(const Eigen::Ref<const Eigen::VectorXd>& x, double kappa,
                     Eigen::Ref<Eigen::VectorXd> out) {
  out[0] = std::cos(x[2]);
  out[1] = std::sin(x[2]);
  out[2] = kappa;
}

Eigen::Vector3d course_window_start(const SampledCourse& course, double s_start) {
  const Eigen::Vector2d p = course.interpolate(s_start);
  // Tangent from the quadratic through the surrounding sample triple; a bare
  // chord direction is biased by half the turning per segment, which is
  // enough to matter when windows are stitched.
  const int j = std::clamp(course.segment(s_start), 1, course.size() - 2);
  const double h1 = course.s[j] - course.s[j - 1];
  const double h2 = course.s[j + 1] - course.s[j];
  const Eigen::Vector2d b = (course.points.col(j) - course.points.col(j - 1)) / h1;
  const Eigen::Vector2d c =
      ((course.points.col(j + 1) - course.points.col(j)) / h2 - b) / (h1 + h2);
  const Eigen::Vector2d d1 =
      b + c * ((s_start - course.s[j - 1]) + (s_start - course.s[j]));
  return Eigen::Vector3d(p.x(), p.y(), std::atan2(d1.y(), d1.x()));
}

OcpProblem build_course_problem(std::shared_ptr<const SampledCourse> course,
                                double s_start, double s_end,
                                const CourseParams& params, double ds) {
  if (!course) {
    throw ConfigError("course problem: course required");
  }
  if (!(ds > 0.0)) {
    throw ConfigError("course problem: step must be positive");
  }
  s_start = std::clamp(s_start, 0.0, course->length());
  s_end = std::clamp(s_end, s_start, course->length());
  if (!(s_end > s_start)) {
    throw ConfigError("course problem: empty window");
  }

  const int whole = static_cast<int>(std::floor((s_end - s_start) / ds + 1e-9));
  OcpProblem problem;
  problem.state_dim = 3;
  problem.input_dim = 1;
  // Whole steps only; the sub-step tail is dropped, and a window shorter than
  // one step becomes a single shorter interval.
  problem.grid = whole >= 1 ? Grid{s_start, ds, whole}
                            : Grid{s_start, s_end - s_start, 1};
  problem.u_lower = Eigen::VectorXd::Constant(1, -params.kappa_cap);
  problem.u_upper = Eigen::VectorXd::Constant(1, params.kappa_cap);

  problem.dynamics = [](Eigen::Ref<const Eigen::VectorXd> x,
                        Eigen::Ref<const Eigen::VectorXd> u, double,
                        Eigen::Ref<Eigen::VectorXd> out) {
    course_dynamics(x, u[0], out);
  };
  problem.dynamics_jac_x = [](Eigen::Ref<const Eigen::VectorXd> x,
                              Eigen::Ref<const Eigen::VectorXd>, double,
                              Eigen::Ref<Eigen::MatrixXd> out) {
    out.setZero();
    out(0, 2) = -std::sin(x[2]);
    out(1, 2) = std::cos(x[2]);
  };
  problem.dynamics_jac_u = [](Eigen::Ref<const Eigen::VectorXd>,
                              Eigen::Ref<const Eigen::VectorXd>, double,
                              Eigen::Ref<Eigen::MatrixXd> out) {
    out.setZero();
    out(2, 0) = 1.0;
  };
  problem.stage_cost = [course, params](Eigen::Ref<const Eigen::VectorXd> x,
                                        Eigen::Ref<const Eigen::VectorXd> u,
                                        double tau) -> double {
    const Eigen::Vector2d target = course->interpolate(tau);
    const double ex = x[0] - target.x();
    const double ey = x[1] - target.y();
    return params.q_c * (ex * ex + ey * ey) + params.r_c * u[0] * u[0];
  };
  problem.cost_grad_x = [course, params](Eigen::Ref<const Eigen::VectorXd> x,
                                         Eigen::Ref<const Eigen::VectorXd>, double tau,
                                         Eigen::Ref<Eigen::VectorXd> out) {
    const Eigen::Vector2d target = course->interpolate(tau);
    out[0] = 2.0 * params.q_c * (x[0] - target.x());
    out[1] = 2.0 * params.q_c * (x[1] - target.y());
    out[2] = 0.0;
  };
  problem.cost_grad_u = [params](Eigen::Ref<const Eigen::VectorXd>,
                                 Eigen::Ref<const Eigen::VectorXd> u, double,
                                 Eigen::Ref<Eigen::VectorXd> out) {
    out[0] = 2.0 * params.r_c * u[0];
  };
  problem.validate();
  return problem;
}

StateTrajectory integrate_course(const Eigen::Vector3d& x0, const CurvatureProfile& kappa,
                                 double s0, double S, double ds) {
  if (!(S > 0.0) || !(ds > 0.0)) {
    throw ConfigError("course integration: positive length and step required");
  }
  const int n = std::max(1, static_cast<int>(std::ceil(S / ds - 1e-9)));
  const Grid grid{s0, S / n, n};
  const ControlTrajectory u = ControlTrajectory::zero(grid, 1);
  auto f = [&kappa](Eigen::Ref<const Eigen::VectorXd> x,
                    Eigen::Ref<const Eigen::VectorXd>, double tau,
                    Eigen::Ref<Eigen::VectorXd> out) {
    course_dynamics(x, kappa.eval(tau), out);
  };
  return integrate_forward(f, x0, u, grid);
}

CurvatureProfile profile_from_controls(const ControlTrajectory& u, double cap) {
  const int intervals = u.grid.count;
  if (u.input_dim() != 1) {
    throw DimensionMismatch("profile from controls: one input channel expected");
  }
  if (intervals < 1) {
    throw DegenerateSpacing("profile from controls: no intervals");
  }
  Eigen::VectorXd knots(intervals + 2), values(intervals + 2);
  knots[0] = u.grid.start;
  values[0] = u.values(0, 0);
  for (int j = 0; j < intervals; ++j) {
    knots[j + 1] = u.grid.start + (j + 0.5) * u.grid.step;
    values[j + 1] = u.values(0, j);
  }
  knots[intervals + 1] = u.grid.span() + u.grid.start;
  values[intervals + 1] = u.values(0, intervals - 1);
  return CurvatureProfile(knots, values, cap);
}

FitQuality measure_fit(const SampledCourse& course, const CurvatureProfile& profile,
                       double ds) {
  const Eigen::Vector3d x0 = course_window_start(course, 0.0);
  const StateTrajectory traj = integrate_course(x0, profile, 0.0, course.length(), ds);
  const StateInterpolant dense(traj);

  FitQuality quality;
  Eigen::VectorXd at(3);
  double sum_sq = 0.0;
  for (int i = 0; i < course.size(); ++i) {
    dense.eval(course.s[i], at);
    sum_sq += (at.head<2>() - course.points.col(i)).squaredNorm();
  }
  quality.rms_same_arc = std::sqrt(sum_sq / course.size());
  for (int j = 0; j <= traj.grid.count; ++j) {
    quality.max_nearest =
        std::max(quality.max_nearest,
                 course.nearest_distance(traj.values.col(j).head<2>()));
  }
  dense.eval(course.length(), at);
  quality.endpoint_error = (at.head<2>() - course.points.rightCols<1>()).norm();
  return quality;
}

CourseFitter::CourseFitter(std::shared_ptr<const SampledCourse> course,
                           CourseFitConfig cfg)
    : course_(std::move(course)), cfg_(cfg) {
  if (!course_) {
    throw ConfigError("course fitter: course required");
  }
  n_intervals_ = static_cast<int>(std::floor(course_->length() / cfg_.ds + 1e-9));
  if (n_intervals_ < 1) {
    throw CourseTooShort("course fitter: course shorter than one fitting step");
  }
  const CurvatureProfile raw =
      numeric_curvature(*course_, cfg_.params.kappa_cap);
  mid_k_.resize(n_intervals_);
  for (int j = 0; j < n_intervals_; ++j) {
    mid_k_[j] = raw.eval((j + 0.5) * cfg_.ds);
  }
}

void CourseFitter::sweep() {
  const int window_intervals =
      std::max(1, static_cast<int>(std::llround(cfg_.window / cfg_.ds)));
  const int advance = std::max(1, window_intervals / 2);
  // Windows are chained through the integrated pose rather than re-anchored
  // on the course: each solve sees the drift accumulated so far and fits
  // curvature that steers back, so the stitched profile integrates coherently
  // from the start. Only the leading stretch of each window is committed; the
  // weakly constrained tail is refit by the next window.
  Eigen::Vector3d x_cur = course_window_start(*course_, 0.0);
  int j0 = 0;
  while (j0 < n_intervals_) {
    const int nw = std::min(window_intervals, n_intervals_ - j0);
    const double s_start = j0 * cfg_.ds;
    const double s_end = s_start + nw * cfg_.ds;
    OcpProblem problem =
        build_course_problem(course_, s_start, s_end, cfg_.params, cfg_.ds);
    ControlTrajectory u_init = ControlTrajectory::zero(problem.grid, 1);
    u_init.values.row(0) = mid_k_.segment(j0, nw).transpose();
    const MpcSolution sol = solver_.solve_step(problem, x_cur, u_init, cfg_.solver);
    const int commit = (j0 + nw >= n_intervals_) ? nw : std::min(advance, nw);
    mid_k_.segment(j0, commit) = sol.u_star.values.row(0).head(commit).transpose();
    x_cur = sol.x_star.values.col(commit);
    j0 += commit;
  }
}

std::shared_ptr<const CurvatureProfile> CourseFitter::profile() const {
  Eigen::VectorXd knots(n_intervals_ + 2), values(n_intervals_ + 2);
  knots[0] = 0.0;
  values[0] = mid_k_[0];
  for (int j = 0; j < n_intervals_; ++j) {
    knots[j + 1] = (j + 0.5) * cfg_.ds;
    values[j + 1] = mid_k_[j];
  }
  knots[n_intervals_ + 1] = course_->length();
  values[n_intervals_ + 1] = mid_k_[n_intervals_ - 1];
  return std::make_shared<CurvatureProfile>(knots, values, cfg_.params.kappa_cap);
}

FitQuality CourseFitter::quality() const {
  return measure_fit(*course_, *profile(), cfg_.ds);
}

}  // namespace plan
