#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>

namespace plan {

// Piecewise-linear curvature over arc length: knots s_0 < s_1 < ... with a
// curvature value at each knot, evaluated by interpolation inside the knot
// span and held constant beyond it. Values are clamped to a configurable
// sanity cap at construction. Immutable once built, so snapshots can be
// shared across threads freely.
class CurvatureProfile {
 public:
  CurvatureProfile() = default;
  CurvatureProfile(Eigen::VectorXd s_knots, Eigen::VectorXd kappa, double cap = 1.0);

  double eval(double s) const;
  // Segment slope dkappa/ds; at a knot the right segment applies, beyond the
  // span it is zero.
  double slope(double s) const;
  bool contains(double s) const { return s >= front() && s <= back(); }
  double front() const { return s_[0]; }
  double back() const { return s_[s_.size() - 1]; }
  int size() const { return static_cast<int>(s_.size()); }
  const Eigen::VectorXd& knots() const { return s_; }
  const Eigen::VectorXd& values() const { return k_; }
  double cap() const { return cap_; }
  bool empty() const { return s_.size() == 0; }

 private:
  int segment(double s) const;

  Eigen::VectorXd s_;
  Eigen::VectorXd k_;
  double cap_ = 1.0;
};

// Read access to a profile plus an optional tally of evaluations that fell
// outside the published span. The coupling layer watches that tally: it must
// stay at zero as long as the fitting window keeps its margin ahead of the
// predicted arc progress.
struct ProfileView {
  const CurvatureProfile* profile = nullptr;
  std::atomic<std::uint64_t>* extrapolations = nullptr;

  double eval(double s) const {
    if (extrapolations != nullptr && !profile->contains(s)) {
      extrapolations->fetch_add(1, std::memory_order_relaxed);
    }
    return profile->eval(s);
  }
  double slope(double s) const { return profile->slope(s); }
};

}  // namespace plan
