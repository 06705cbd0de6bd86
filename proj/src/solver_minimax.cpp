#include "membrane/solver_minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace membrane {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double objective_Fm(const FemSystem& sys, const Vector& lambda, double t,
                    double m) {
  return 0.5 * lambda.dot(sys.stiffness * lambda) - sys.load.dot(lambda) +
         0.5 * m * t;
}

/// Barrier value; +inf outside the feasible slab. When old_slacks is
/// given, also enforces the fraction-to-boundary rule: every slack must
/// keep at least the fraction `keep` of its previous value, preventing
/// iterates from slamming into the constraint wall.
double barrier_value(const FemSystem& sys, const Vector& lambda, double t,
                     double m, double beta,
                     const Vector* old_slacks = nullptr,
                     double keep = 0.05) {
  const Vector g = element_gradient_squared(sys, lambda);
  double logs = 0.0;
  for (int l = 0; l < sys.n_t; ++l) {
    const double s = t - g[l];
    if (!(s > 0.0)) return kInf;
    if (old_slacks && s < keep * (*old_slacks)[l]) return kInf;
    logs += std::log(s);
  }
  return objective_Fm(sys, lambda, t, m) - logs / beta;
}

}  // namespace

ConstrainedSolution solve_constrained(const FemSystem& system, double m,
                                      const MinimaxConfig& config) {
  if (m < 0.0) throw std::invalid_argument("mass must be nonnegative");
  const int nt = system.n_t;

  ConstrainedSolution sol;
  sol.lambda = poisson_solve(system);
  Vector g = element_gradient_squared(system, sol.lambda);
  const double gmax = g.maxCoeff();

  if (m == 0.0) {
    // Constraints carry zero weight; the unconstrained minimizer with the
    // epigraph variable at its active bound is already optimal.
    sol.t = gmax;
    sol.mu = Vector::Zero(nt);
    sol.theta = Vector::Zero(nt);
    sol.objective = objective_Fm(system, sol.lambda, sol.t, m);
    sol.duality_gap = 0.0;
    sol.beta_final = 0.0;
    sol.report.converged = true;
    sol.path_objectives.push_back(sol.objective);
    return sol;
  }

  const ElementRows ops = element_rows(system);
  std::vector<Eigen::Triplet<double>> base_triplets;
  for (int k = 0; k < system.stiffness.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(system.stiffness, k); it; ++it)
      base_triplets.emplace_back(it.row(), it.col(), it.value());
  }

  Vector lambda = sol.lambda;
  double t = gmax > 0.0 ? (1.0 + config.feasibility_margin) * gmax : 1.0;
  // Start the path where the feasible start is t-stationary (the central
  // value of beta for this t): beta = (2/m) sum_l 1/(t - g_l). Starting
  // lower only adds stages whose central points sit far from the start.
  double beta_central = 0.0;
  for (int l = 0; l < nt; ++l) beta_central += 1.0 / (t - g[l]);
  beta_central *= 2.0 / m;
  double beta = std::max(config.beta0, beta_central);
  sol.duality_gap = nt / beta;
  sol.beta_final = beta;
  const double grad_scale = std::max(1.0, system.load.norm());

  SpdSolver newton_solver;
  SparseMat hess(system.n_i, system.n_i);
  int total_newton = 0;
  bool inner_ok = false;
  double last_grad_norm = 0.0;

  int outer = 0;
  for (; outer < config.max_outer; ++outer) {
    // Damped Newton on the barrier at fixed beta.
    inner_ok = false;
    for (int it = 0; it < config.max_newton; ++it, ++total_newton) {
      auto [gx, gy] = element_gradients(system, lambda);
      g = gx.cwiseProduct(gx) + gy.cwiseProduct(gy);

      Vector slacks(nt), inv_s(nt), inv_s2(nt);
      for (int l = 0; l < nt; ++l) {
        const double s = t - g[l];
        if (!(s > 0.0))
          throw std::logic_error("barrier iterate left the feasible set");
        slacks[l] = s;
        inv_s[l] = 1.0 / (beta * s);
        inv_s2[l] = inv_s[l] / s;
      }

      // Gradient in (lambda, t).
      const Vector wx = 2.0 * inv_s.cwiseProduct(gx);
      const Vector wy = 2.0 * inv_s.cwiseProduct(gy);
      Vector grad_l =
          system.stiffness * lambda - system.load +
          system.restrict_interior(system.grad_x.transpose() * wx +
                                   system.grad_y.transpose() * wy);
      const double grad_t = 0.5 * m - inv_s.sum();
      last_grad_norm = std::sqrt(grad_l.squaredNorm() + grad_t * grad_t);
      if (last_grad_norm <= config.newton_tol * grad_scale) {
        inner_ok = true;
        break;
      }

      // Hessian blocks: A dlambda + b dt = -grad_l; b^T dlambda + c dt = -grad_t.
      auto triplets = base_triplets;
      triplets.reserve(base_triplets.size() + 9 * nt);
      Vector b_full = Vector::Zero(system.n_v);
      double c = 0.0;
      for (int l = 0; l < nt; ++l) {
        c += inv_s2[l];
        double v[3];
        for (int i = 0; i < 3; ++i) {
          v[i] = gx[l] * ops.gx[l][i] + gy[l] * ops.gy[l][i];
          b_full[ops.vert[l][i]] -= 2.0 * inv_s2[l] * v[i];
        }
        for (int i = 0; i < 3; ++i) {
          const int I = system.interior_index[ops.vert[l][i]];
          if (I < 0) continue;
          for (int j = 0; j < 3; ++j) {
            const int J = system.interior_index[ops.vert[l][j]];
            if (J < 0) continue;
            const double hij =
                2.0 * inv_s[l] *
                    (ops.gx[l][i] * ops.gx[l][j] +
                     ops.gy[l][i] * ops.gy[l][j]) +
                4.0 * inv_s2[l] * v[i] * v[j];
            triplets.emplace_back(I, J, hij);
          }
        }
      }
      hess.setFromTriplets(triplets.begin(), triplets.end());
      const Vector b = system.restrict_interior(b_full);

      Vector dl;
      double dt = 0.0;
      bool newton_direction = false;
      try {
        newton_solver.factor(hess);
        const Vector p = newton_solver.solve(grad_l);
        const Vector w = newton_solver.solve(b);
        const double denom = c - b.dot(w);
        if (denom > 0.0) {
          dt = (-grad_t + b.dot(p)) / denom;
          dl = -p - dt * w;
          newton_direction = true;
        }
      } catch (const std::runtime_error&) {
        // fall through to the gradient step
      }
      if (!newton_direction) {
        dl = -grad_l;
        dt = -grad_t;
      }
      double slope = grad_l.dot(dl) + grad_t * dt;
      if (slope >= 0.0) {  // safety net: revert to steepest descent
        dl = -grad_l;
        dt = -grad_t;
        slope = -(grad_l.squaredNorm() + grad_t * grad_t);
      }

      const double value = barrier_value(system, lambda, t, m, beta);
      // At the numerical floor the remaining predicted decrease is noise.
      if (-slope <= 1e-16 * (1.0 + std::abs(value))) {
        inner_ok = true;
        break;
      }
      double alpha = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < config.max_backtracks; ++bt) {
        const double candidate =
            barrier_value(system, lambda + alpha * dl, t + alpha * dt, m,
                          beta, &slacks);
        if (candidate <= value + 1e-4 * alpha * slope) {
          lambda += alpha * dl;
          t += alpha * dt;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;  // flagged by inner_ok below
    }

    const double objective = objective_Fm(system, lambda, t, m);
    sol.path_objectives.push_back(objective);
    sol.duality_gap = nt / beta;
    sol.beta_final = beta;
    if (!inner_ok) break;
    if (sol.duality_gap <=
        config.gap_tol_rel * (1.0 + std::abs(objective)))
      break;
    beta *= config.beta_growth;
  }

  g = element_gradient_squared(system, lambda);
  sol.lambda = lambda;
  sol.t = t;
  sol.mu.resize(nt);
  for (int l = 0; l < nt; ++l)
    sol.mu[l] = 1.0 / (sol.beta_final * (t - g[l]));
  sol.theta = 2.0 * sol.mu.cwiseQuotient(system.areas);
  sol.objective = objective_Fm(system, lambda, t, m);
  sol.report.iterations = total_newton;
  sol.report.grad_norm = last_grad_norm;
  sol.report.converged =
      inner_ok && sol.duality_gap <=
                      config.gap_tol_rel * (1.0 + std::abs(sol.objective));
  return sol;
}

Vector recover_theta_constrained(const ConstrainedSolution& solution,
                                 const FemSystem& system) {
  if (!solution.report.converged)
    throw std::invalid_argument(
        "theta recovery requires a converged constrained solve");
  const Vector theta = 2.0 * solution.mu.cwiseQuotient(system.areas);
  // lambda must solve the theta-weighted discrete equation.
  auto [gx, gy] = element_gradients(system, solution.lambda);
  const Vector wx = system.areas.cwiseProduct(theta).cwiseProduct(gx);
  const Vector wy = system.areas.cwiseProduct(theta).cwiseProduct(gy);
  const Vector residual =
      system.stiffness * solution.lambda - system.load +
      system.restrict_interior(system.grad_x.transpose() * wx +
                               system.grad_y.transpose() * wy);
  const double bound = 1e-6 * std::max(system.load.norm(), 1e-30);
  if (residual.norm() > bound)
    throw std::runtime_error(
        "multiplier-weighted equation residual " +
        std::to_string(residual.norm()) + " exceeds " +
        std::to_string(bound));
  return theta;
}

}  // namespace membrane
