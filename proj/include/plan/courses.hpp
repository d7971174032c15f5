#pragma once

#include <Eigen/Core>

#include "plan/course_model.hpp"

namespace plan {

// Built-in course generators. All of them emit samples whose consecutive
// Euclidean chords equal `spacing` exactly (up to arithmetic), so the arc
// tags land on exact multiples of the spacing.

// Figure-of-eight lap: two mirrored lobes crossing at the origin, scaled so
// the curvature magnitude peaks at `peak_curvature`. Starts at the origin
// heading +45 degrees with zero curvature at the crossing.
SampledCourse lying_eight_course(double peak_curvature = 0.075,
                                 double spacing = 0.5);

// Circle starting at the origin heading +x. Positive radius bends left
// (positive curvature), negative bends right.
SampledCourse circle_course(double radius, double revolutions = 1.0,
                            double spacing = 0.5);

// Straight segment along +x from the origin.
SampledCourse straight_course(double length, double spacing = 0.5);

// Straight lead-in along +x, a constant-radius arc through `angle` (positive
// turns left), then a straight lead-out.
SampledCourse turn_course(double lead_in, double radius, double angle,
                          double lead_out, double spacing = 0.5);

// Rebuilds a point sequence with exact chords of length `spacing` along a
// densely sampled polyline. The final sub-spacing remainder is dropped.
Eigen::Matrix2Xd resample_exact_chords(const Eigen::Matrix2Xd& dense, double spacing);

}  // namespace plan
