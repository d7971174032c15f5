#include "plan/courses.hpp"

#include <cmath>
#include <vector>

#include "plan/errors.hpp"

namespace plan {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix2Xd to_matrix(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Matrix2Xd m(2, static_cast<int>(pts.size()));
  for (int i = 0; i < m.cols(); ++i) m.col(i) = pts[static_cast<size_t>(i)];
  return m;
}

}  // namespace

Eigen::Matrix2Xd resample_exact_chords(const Eigen::Matrix2Xd& dense, double spacing) {
  if (dense.cols() < 2) {
    throw DegenerateSpacing("resample: need at least two dense points");
  }
  if (!(spacing > 0.0)) {
    throw ConfigError("resample: spacing must be positive");
  }
  std::vector<Eigen::Vector2d> out;
  out.emplace_back(dense.col(0));
  int seg = 0;
  double t = 0.0;
  while (seg + 1 < dense.cols()) {
    const Eigen::Vector2d a = dense.col(seg);
    const Eigen::Vector2d d = dense.col(seg + 1) - a;
    const Eigen::Vector2d w = a - out.back();
    // First point on this segment, past the current parameter, at exactly
    // `spacing` from the previous sample: |w + t d| = spacing.
    const double qa = d.squaredNorm();
    if (qa < 1e-24) {
      ++seg;
      t = 0.0;
      continue;
    }
    const double qb = 2.0 * w.dot(d);
    const double qc = w.squaredNorm() - spacing * spacing;
    const double disc = qb * qb - 4.0 * qa * qc;
    bool found = false;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (const double root : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
        // Tolerate roots a hair past the joint; rejecting them would leave the
        // walk already beyond `spacing` on the next segment with no crossing
        // left to find.
        if (root > t + 1e-15 && root <= 1.0 + 1e-9) {
          t = std::min(root, 1.0);
          found = true;
          break;
        }
      }
    }
    if (found) {
      out.emplace_back(a + t * d);
    } else {
      ++seg;
      t = 0.0;
    }
  }
  return to_matrix(out);
}

SampledCourse lying_eight_course(double peak_curvature, double spacing) {
  if (!(peak_curvature > 0.0)) {
    throw ConfigError("lying eight: peak curvature must be positive");
  }
  // Shape q(t) = a * (sin t, sin(2t) / 2), t in [0, 2*pi]: starts at the
  // origin heading 45 degrees with an inflection at the crossing. Curvature
  // scales as F(t) / a, so the lobe size follows from the requested peak.
  auto factor = [](double t) {
    const double ct = std::cos(t);
    const double c2t = std::cos(2.0 * t);
    const double num = std::sin(t) * c2t - 2.0 * ct * std::sin(2.0 * t);
    const double den = std::pow(ct * ct + c2t * c2t, 1.5);
    return std::abs(num) / den;
  };
  const int scan = 20000;
  double best = 0.0;
  double best_t = 0.0;
  for (int i = 0; i <= scan; ++i) {
    const double t = 2.0 * kPi * i / scan;
    const double f = factor(t);
    if (f > best) {
      best = f;
      best_t = t;
    }
  }
  double lo = best_t - 2.0 * kPi / scan;
  double hi = best_t + 2.0 * kPi / scan;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (factor(m1) < factor(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  best = factor(0.5 * (lo + hi));
  const double a = best / peak_curvature;

  const int m = 400001;
  Eigen::Matrix2Xd dense(2, m);
  for (int i = 0; i < m; ++i) {
    const double t = 2.0 * kPi * i / (m - 1);
    dense(0, i) = a * std::sin(t);
    dense(1, i) = 0.5 * a * std::sin(2.0 * t);
  }
  return SampledCourse::from_points(resample_exact_chords(dense, spacing));
}

SampledCourse circle_course(double radius, double revolutions, double spacing) {
  const double r = std::abs(radius);
  if (!(r > 0.0) || !(revolutions > 0.0)) {
    throw ConfigError("circle course: radius and revolutions must be nonzero");
  }
  if (!(spacing < 2.0 * r)) {
    throw ConfigError("circle course: spacing exceeds the diameter");
  }
  // Equal central angles make every chord exactly `spacing` long.
  const double theta = 2.0 * std::asin(spacing / (2.0 * r));
  const int n = static_cast<int>(std::floor(revolutions * 2.0 * kPi / theta));
  if (n < 2) {
    throw CourseTooShort("circle course: fewer than three samples");
  }
  const double side = radius > 0.0 ? 1.0 : -1.0;
  Eigen::Matrix2Xd pts(2, n + 1);
  for (int k = 0; k <= n; ++k) {
    pts(0, k) = r * std::sin(k * theta);
    pts(1, k) = side * r * (1.0 - std::cos(k * theta));
  }
  return SampledCourse::from_points(pts);
}

SampledCourse straight_course(double length, double spacing) {
  const int n = static_cast<int>(std::floor(length / spacing + 1e-9));
  if (n < 2) {
    throw CourseTooShort("straight course: fewer than three samples");
  }
  Eigen::Matrix2Xd pts(2, n + 1);
  for (int k = 0; k <= n; ++k) {
    pts(0, k) = k * spacing;
    pts(1, k) = 0.0;
  }
  return SampledCourse::from_points(pts);
}

SampledCourse turn_course(double lead_in, double radius, double angle,
                          double lead_out, double spacing) {
  if (!(radius > 0.0) || angle == 0.0) {
    throw ConfigError("turn course: positive radius and nonzero angle required");
  }
  const double side = angle > 0.0 ? 1.0 : -1.0;
  const double sweep = std::abs(angle);
  const double step = 1e-3;
  std::vector<Eigen::Vector2d> dense;
  for (double x = 0.0; x < lead_in; x += step) {
    dense.emplace_back(x, 0.0);
  }
  const int arc_steps = std::max(2, static_cast<int>(sweep * radius / step));
  for (int i = 0; i <= arc_steps; ++i) {
    const double phi = sweep * i / arc_steps;
    dense.emplace_back(lead_in + radius * std::sin(phi),
                       side * radius * (1.0 - std::cos(phi)));
  }
  const Eigen::Vector2d end = dense.back();
  const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
  const int out_steps = static_cast<int>(lead_out / step);
  for (int i = 1; i <= out_steps; ++i) {
    dense.emplace_back(end + (i * step) * dir);
  }
  return SampledCourse::from_points(resample_exact_chords(to_matrix(dense), spacing));
}

}  // namespace plan
