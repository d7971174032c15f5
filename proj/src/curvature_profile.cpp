#include "plan/curvature_profile.hpp"

#include <algorithm>
#include <cmath>

#include "plan/errors.hpp"

namespace plan {

CurvatureProfile::CurvatureProfile(Eigen::VectorXd s_knots, Eigen::VectorXd kappa,
                                   double cap)
    : s_(std::move(s_knots)), k_(std::move(kappa)), cap_(cap) {
  if (s_.size() != k_.size()) {
    throw DimensionMismatch("curvature profile: knot/value length mismatch");
  }
  if (s_.size() < 2) {
    throw DegenerateSpacing("curvature profile: need at least two knots");
  }
  for (int i = 1; i < s_.size(); ++i) {
    if (!(s_[i] > s_[i - 1])) {
      throw DegenerateSpacing("curvature profile: knots must increase strictly");
    }
  }
  if (!(cap_ > 0.0)) {
    throw ConfigError("curvature profile: cap must be positive");
  }
  for (int i = 0; i < k_.size(); ++i) {
    if (!std::isfinite(k_[i])) {
      throw NonFiniteState("curvature profile: non-finite curvature value");
    }
    k_[i] = std::clamp(k_[i], -cap_, cap_);
  }
}

int CurvatureProfile::segment(double s) const {
  // Index i of the segment [s_i, s_{i+1}) that owns s; clamped to the first
  // and last segments outside the span.
  const int n = static_cast<int>(s_.size());
  if (s <= s_[0]) return 0;
  if (s >= s_[n - 2]) return n - 2;
  const double* begin = s_.data();
  const double* it = std::upper_bound(begin, begin + n, s);
  return static_cast<int>(it - begin) - 1;
}

double CurvatureProfile::eval(double s) const {
  if (s <= front()) return k_[0];
  if (s >= back()) return k_[k_.size() - 1];
  const int i = segment(s);
  const double t = (s - s_[i]) / (s_[i + 1] - s_[i]);
  return (1.0 - t) * k_[i] + t * k_[i + 1];
}

double CurvatureProfile::slope(double s) const {
  if (s < front() || s >= back()) return 0.0;
  const int i = segment(s);
  return (k_[i + 1] - k_[i]) / (s_[i + 1] - s_[i]);
}

}  // namespace plan
