#pragma once

#include <optional>
#include <vector>

#include "membrane/fem.hpp"

namespace membrane {

struct PConfig {
  /// Dual exponents q = p/(p-1); increasing, capped at 64 so that the
  /// per-triangle powers stay representable (all powers are evaluated in
  /// log space regardless).
  std::vector<double> q_schedule{2, 4, 8, 16, 32, 64};
  double grad_tol = 1e-8;  // stop on ||grad|| <= grad_tol * load scale
  int max_iters = 500;     // per stage
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
};

struct IterationReport {
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<double> objective_history;  // one entry per accepted step
};

struct PSolution {
  Vector lambda;           // interior coefficients of u_p
  double q = 0.0;
  double p = 0.0;          // q/(q-1)
  double C_p = 0.0;        // ||grad u_p||_{2q}^{-2(q-1)}
  Vector theta;            // per-triangle recovered reinforcement
  double objective = 0.0;
  double grad_norm_2q = 0.0;  // discrete ||grad u_p||_{L^{2q}}
  bool theta_degenerate = false;
  IterationReport report;
};

/// Value of 1/2 l^T K l + (m/2) (sum_l A_l g_l^q)^{1/q} - load^T l with
/// g_l the per-triangle squared gradient norm.
double eval_Fp(const FemSystem& system, const Vector& lambda, double q,
               double m);

/// Exact gradient of eval_Fp. The power term contributes the
/// theta-weighted stiffness applied to lambda; its derivative at an
/// identically zero gradient field is zero.
Vector grad_Fp(const FemSystem& system, const Vector& lambda, double q,
               double m);

/// Closed-form maximizer of the Holder pairing:
/// theta_l = m g_l^{q-1} (sum_k A_k g_k^q)^{-(q-1)/q}.
/// Exposed on raw per-triangle data for oracle tests; an identically zero
/// gradient field yields all-zero theta with *degenerate set.
Vector theta_from_gradients(const Vector& areas, const Vector& g, double q,
                            double m, bool* degenerate = nullptr);

Vector recover_theta_p(const FemSystem& system, const Vector& lambda,
                       double q, double m, bool* degenerate = nullptr);

/// Monotone descent on eval_Fp: Barzilai-Borwein step initialization in
/// the stiffness metric (the direction is K^{-1} grad) with Armijo
/// backtracking. Terminates on the relative gradient norm.
PSolution minimize_Fp(const FemSystem& system, double q, double m,
                      const std::optional<Vector>& warm_start = std::nullopt,
                      const PConfig& config = {});

/// Runs minimize_Fp over the schedule with warm starts. A non-converged
/// stage aborts the schedule; the partial results are returned.
std::vector<PSolution> continuation(const FemSystem& system, double m,
                                    const PConfig& config = {});

}  // namespace membrane
