#pragma once

#include <vector>

#include "membrane/fem.hpp"
#include "membrane/solver_p.hpp"

namespace membrane {

struct MinimaxConfig {
  double beta0 = 1.0;
  double beta_growth = 10.0;
  /// Path following stops once n_t / beta <= gap_tol_rel * (1 + |objective|).
  double gap_tol_rel = 1e-6;
  double feasibility_margin = 0.1;  // t0 = (1 + margin) * max_l g_l
  int max_outer = 60;
  int max_newton = 80;  // per barrier stage
  double newton_tol = 1e-9;
  int max_backtracks = 80;
};

struct ConstrainedSolution {
  Vector lambda;  // interior coefficients
  double t = 0.0;  // epigraph scalar, ||grad u||_inf^2 at the optimum
  Vector mu;       // per-constraint multipliers, mu_l = 1/(beta (t - g_l))
  Vector theta;    // 2 mu_l / area_l
  double objective = 0.0;     // F_m(lambda, t)
  double duality_gap = 0.0;   // n_t / beta at exit
  double beta_final = 0.0;
  IterationReport report;     // iterations = total Newton steps
  /// F_m at each central point; nonincreasing along the path.
  std::vector<double> path_objectives;
};

/// Minimizes F_m(lambda, t) = 1/2 l^T K l - load^T l + (m/2) t subject to
/// per-triangle constraints g_l(lambda) <= t, by a logarithmic barrier
/// with damped Newton steps in (lambda, t). The Newton system is solved
/// by eliminating t (Schur complement) on top of the sparse SPD solver.
/// m = 0 skips the barrier: constraints carry zero weight and the Poisson
/// solution is returned with t = max_l g_l.
ConstrainedSolution solve_constrained(const FemSystem& system, double m,
                                      const MinimaxConfig& config = {});

/// theta_l = 2 mu_l / area_l. Verifies that lambda solves the
/// theta-weighted discrete equation with residual <= 1e-6 ||load||;
/// rejects non-converged input.
Vector recover_theta_constrained(const ConstrainedSolution& solution,
                                 const FemSystem& system);

}  // namespace membrane
