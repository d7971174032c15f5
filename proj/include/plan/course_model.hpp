#pragma once

#include <Eigen/Core>
#include <memory>

#include "plan/curvature_profile.hpp"
#include "plan/grid.hpp"
#include "plan/integrators.hpp"
#include "plan/ocp.hpp"
#include "plan/pgm_solver.hpp"

namespace plan {

// 2D course given as ordered sample points with cumulative chord-length arc
// tags. Immutable by convention once built; share snapshots freely.
struct SampledCourse {
  Eigen::Matrix2Xd points;  // columns are (x, y) samples
  Eigen::VectorXd s;        // chord-cumulative arc tags, s[0] = 0

  // Computes the tags and validates: at least 3 points, no coincident
  // neighbours (throws DegenerateSpacing).
  static SampledCourse from_points(const Eigen::Matrix2Xd& pts);

  int size() const { return static_cast<int>(points.cols()); }
  double length() const { return s[s.size() - 1]; }

  // Index j of the chord [s_j, s_{j+1}] owning `arc` (right chord at tags,
  // clamped to the first and last chords outside the span).
  int segment(double arc) const;
  // Piecewise-linear point at `arc`, clamped to the span.
  Eigen::Vector2d interpolate(double arc) const;
  // Direction angle of the chord owning `arc`.
  double chord_heading(double arc) const;
  // Exact distance from a point to the sample polyline.
  double nearest_distance(const Eigen::Vector2d& p) const;
};

// Curvature estimate at every sample point, tagged at the points' arc tags:
// each value comes from the quadratic through the sample and its neighbours
// (the end points borrow their adjacent triple), differentiated with the
// true nonuniform spacing so the result is geometric.
CurvatureProfile numeric_curvature(const SampledCourse& course, double cap = 1.0);

struct CourseParams {
  double q_c = 1.0;        // position-error weight, both axes
  double r_c = 0.01;       // curvature effort weight
  double kappa_cap = 1.0;  // box bound standing in for an unconstrained input
};

// Planar pose (x, y, tangent angle) evolving over arc length under a
// curvature input: unit-speed translation plus heading rate kappa.
void course_dynamics(const Eigen::Ref<const Eigen::VectorXd>& x, double kappa,
                     Eigen::Ref<Eigen::VectorXd> out);

// Initial pose for a fitting window anchored at `s_start`: the interpolated
// point and the chord direction there.
Eigen::Vector3d course_window_start(const SampledCourse& course, double s_start);

// Arc-length optimal control problem that fits the course points over
// [s_start, s_end] (clamped to the course extent). The grid keeps whole `ds`
// steps; a window shorter than one step degenerates to a single interval.
OcpProblem build_course_problem(std::shared_ptr<const SampledCourse> course,
                                double s_start, double s_end,
                                const CourseParams& params, double ds);

// Forward integration of the course pose under a fixed curvature profile from
// arc s0 over length S. The step divides S exactly and never exceeds ds.
StateTrajectory integrate_course(const Eigen::Vector3d& x0, const CurvatureProfile& kappa,
                                 double s0, double S, double ds);

// Piecewise-linear profile through per-interval curvature values, tagged at
// the interval midpoints and padded flat out to the window edges so the
// published span covers the whole window.
CurvatureProfile profile_from_controls(const ControlTrajectory& u, double cap = 1.0);

// How well a curvature profile reproduces a course when integrated from the
// course start over its full length.
struct FitQuality {
  double rms_same_arc = 0.0;    // RMS over samples of |curve(s_i) - p_i|
  double max_nearest = 0.0;     // max over curve nodes of polyline distance
  double endpoint_error = 0.0;  // |curve(L) - p_last|
};
FitQuality measure_fit(const SampledCourse& course, const CurvatureProfile& profile,
                       double ds);

struct CourseFitConfig {
  CourseParams params;
  double ds = 0.5;       // arc step [m]
  double window = 40.0;  // receding window length [m]
  // Offline fitting budget: the chained windows need enough descent per solve
  // to absorb the drift they inherit, unlike the cyclic real-time fit.
  SolverConfig solver{10, 1e-3, 1e-6, 1e2};
};

// Receding-horizon curvature fitter over a static course. Each sweep slides a
// window across the whole course with half-window advance, warm-starting from
// the current profile and committing the fitted values; overlapped stretches
// are refined by the following window. The first sweep starts from the
// finite-difference curvature estimate.
class CourseFitter {
 public:
  CourseFitter(std::shared_ptr<const SampledCourse> course, CourseFitConfig cfg);

  void sweep();
  std::shared_ptr<const CurvatureProfile> profile() const;
  FitQuality quality() const;
  int intervals() const { return n_intervals_; }
  double ds() const { return cfg_.ds; }

 private:
  std::shared_ptr<const SampledCourse> course_;
  CourseFitConfig cfg_;
  PgmSolver solver_;
  Eigen::VectorXd mid_k_;  // fitted curvature, one value per whole ds interval
  int n_intervals_ = 0;
};

}  // namespace plan
