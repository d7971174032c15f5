#pragma once

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <vector>

#include "plan/ocp.hpp"
#include "plan/pgm_solver.hpp"

namespace plan::testing {

inline double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::VectorXd uniform_vec(std::mt19937& rng, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

// Smooth synthetic control problem with analytic derivatives:
//   f_i = (A x + B u)_i + c_i tanh(x_{p_i})
//   l   = x' diag(Q) x + u' diag(R) u + s sin(tau) x_0
// Bounded nonlinearity keeps rollouts finite for any horizon used in tests.
struct SmoothProblem {
  Eigen::MatrixXd A, B;
  Eigen::VectorXd c, Q, R;
  std::vector<int> p;
  double s = 0.0;

  plan::OcpProblem make(const plan::Grid& grid) const {
    plan::OcpProblem prob;
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    prob.state_dim = n;
    prob.input_dim = m;
    prob.grid = grid;
    prob.u_lower = Eigen::VectorXd::Constant(m, -50.0);
    prob.u_upper = Eigen::VectorXd::Constant(m, 50.0);
    prob.dynamics = [*this, n](Eigen::Ref<const Eigen::VectorXd> x,
                               Eigen::Ref<const Eigen::VectorXd> u, double,
                               Eigen::Ref<Eigen::VectorXd> out) {
      out = A * x + B * u;
      for (int i = 0; i < n; ++i) out[i] += c[i] * std::tanh(x[p[i]]);
    };
    prob.dynamics_jac_x = [*this, n](Eigen::Ref<const Eigen::VectorXd> x,
                                     Eigen::Ref<const Eigen::VectorXd>, double,
                                     Eigen::Ref<Eigen::MatrixXd> out) {
      out = A;
      for (int i = 0; i < n; ++i) {
        const double t = std::tanh(x[p[i]]);
        out(i, p[i]) += c[i] * (1.0 - t * t);
      }
    };
    prob.dynamics_jac_u = [*this](Eigen::Ref<const Eigen::VectorXd>,
                                  Eigen::Ref<const Eigen::VectorXd>, double,
                                  Eigen::Ref<Eigen::MatrixXd> out) { out = B; };
    prob.stage_cost = [*this](Eigen::Ref<const Eigen::VectorXd> x,
                              Eigen::Ref<const Eigen::VectorXd> u, double tau) {
      return x.dot(Q.asDiagonal() * x) + u.dot(R.asDiagonal() * u) +
             s * std::sin(tau) * x[0];
    };
    prob.cost_grad_x = [*this](Eigen::Ref<const Eigen::VectorXd> x,
                               Eigen::Ref<const Eigen::VectorXd>, double tau,
                               Eigen::Ref<Eigen::VectorXd> out) {
      out = 2.0 * Q.asDiagonal() * x;
      out[0] += s * std::sin(tau);
    };
    prob.cost_grad_u = [*this](Eigen::Ref<const Eigen::VectorXd>,
                               Eigen::Ref<const Eigen::VectorXd> u, double,
                               Eigen::Ref<Eigen::VectorXd> out) {
      out = 2.0 * R.asDiagonal() * u;
    };
    return prob;
  }

  static SmoothProblem random(std::mt19937& rng, int n, int m) {
    SmoothProblem sp;
    sp.A.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sp.A(i, j) = uniform(rng, -0.8, 0.8);
    sp.B.resize(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) sp.B(i, j) = uniform(rng, -1.0, 1.0);
    sp.c = uniform_vec(rng, n, -0.5, 0.5);
    sp.Q = uniform_vec(rng, n, 0.1, 1.0);
    sp.R = uniform_vec(rng, m, 0.1, 1.0);
    sp.p.resize(n);
    for (int i = 0; i < n; ++i) sp.p[i] = std::uniform_int_distribution<int>(0, n - 1)(rng);
    sp.s = uniform(rng, -0.5, 0.5);
    return sp;
  }
};

// Central finite difference of the rollout objective with respect to every
// discrete control entry, scaled to the same per-interval-average convention
// as the assembled gradient. This is the reference the costate gradient is
// judged against; it only touches the objective evaluation.
inline plan::ControlTrajectory fd_gradient(plan::PgmSolver& solver,
                                           const plan::OcpProblem& problem,
                                           const Eigen::VectorXd& x0,
                                           const plan::ControlTrajectory& u,
                                           double eps = 1e-6) {
  plan::ControlTrajectory g = u;
  plan::ControlTrajectory up = u;
  const double h = problem.grid.step;
  for (int i = 0; i < u.values.cols(); ++i) {
    for (int k = 0; k < u.values.rows(); ++k) {
      const double saved = up.values(k, i);
      up.values(k, i) = saved + eps;
      const double jp = solver.eval_cost(problem, x0, up);
      up.values(k, i) = saved - eps;
      const double jm = solver.eval_cost(problem, x0, up);
      up.values(k, i) = saved;
      g.values(k, i) = (jp - jm) / (2.0 * eps * h);
    }
  }
  return g;
}

}  // namespace plan::testing
