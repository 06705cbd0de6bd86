#include "membrane/solver_p.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace membrane {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum_l A_l g_l^q) by max-shifted summation; -inf when all g vanish.
double log_power_sum(const Vector& areas, const Vector& g, double q) {
  const int nt = static_cast<int>(g.size());
  double shift = kNegInf;
  for (int l = 0; l < nt; ++l) {
    if (g[l] > 0.0)
      shift = std::max(shift, std::log(areas[l]) + q * std::log(g[l]));
  }
  if (shift == kNegInf) return kNegInf;
  double sum = 0.0;
  for (int l = 0; l < nt; ++l) {
    if (g[l] > 0.0)
      sum += std::exp(std::log(areas[l]) + q * std::log(g[l]) - shift);
  }
  return shift + std::log(sum);
}

void check_exponent(double q) {
  if (!(q > 1.0)) throw std::invalid_argument("dual exponent q must be > 1");
}

}  // namespace

double eval_Fp(const FemSystem& system, const Vector& lambda, double q,
               double m) {
  check_exponent(q);
  const double quadratic = 0.5 * lambda.dot(system.stiffness * lambda) -
                           system.load.dot(lambda);
  if (m == 0.0) return quadratic;
  const Vector g = element_gradient_squared(system, lambda);
  const double log_s = log_power_sum(system.areas, g, q);
  if (log_s == kNegInf) return quadratic;
  return quadratic + 0.5 * m * std::exp(log_s / q);
}

Vector theta_from_gradients(const Vector& areas, const Vector& g, double q,
                            double m, bool* degenerate) {
  check_exponent(q);
  const int nt = static_cast<int>(g.size());
  Vector theta = Vector::Zero(nt);
  const double log_s = log_power_sum(areas, g, q);
  if (degenerate) *degenerate = (log_s == kNegInf) && m > 0.0;
  if (log_s == kNegInf || m == 0.0) return theta;
  for (int l = 0; l < nt; ++l) {
    if (g[l] > 0.0) {
      theta[l] = m * std::exp((q - 1.0) * std::log(g[l]) -
                              (q - 1.0) / q * log_s);
    }
  }
  return theta;
}

Vector recover_theta_p(const FemSystem& system, const Vector& lambda,
                       double q, double m, bool* degenerate) {
  const Vector g = element_gradient_squared(system, lambda);
  return theta_from_gradients(system.areas, g, q, m, degenerate);
}

Vector grad_Fp(const FemSystem& system, const Vector& lambda, double q,
               double m) {
  check_exponent(q);
  Vector grad = system.stiffness * lambda - system.load;
  if (m == 0.0) return grad;
  auto [gx, gy] = element_gradients(system, lambda);
  const Vector g = gx.cwiseProduct(gx) + gy.cwiseProduct(gy);
  const Vector theta = theta_from_gradients(system.areas, g, q, m);
  // Power-term gradient equals the theta-weighted stiffness applied to
  // lambda: sum_l A_l theta_l G_l^T G_l lambda.
  const Vector wx = system.areas.cwiseProduct(theta).cwiseProduct(gx);
  const Vector wy = system.areas.cwiseProduct(theta).cwiseProduct(gy);
  const Vector full = system.grad_x.transpose() * wx +
                      system.grad_y.transpose() * wy;
  return grad + system.restrict_interior(full);
}

PSolution minimize_Fp(const FemSystem& system, double q, double m,
                      const std::optional<Vector>& warm_start,
                      const PConfig& config) {
  check_exponent(q);
  if (m < 0.0) throw std::invalid_argument("mass must be nonnegative");
  if (!(config.grad_tol > 0.0))
    throw std::invalid_argument("gradient tolerance must be positive");

  SpdSolver precond;
  precond.factor(system.stiffness);

  Vector lambda;
  if (warm_start) {
    if (warm_start->size() != system.n_i)
      throw std::invalid_argument("warm start has wrong length");
    lambda = *warm_start;
  } else {
    lambda = precond.solve(system.load);
  }

  const double grad_scale = std::max(system.load.norm(), 1e-30);
  const double tol = config.grad_tol * grad_scale;

  PSolution sol;
  sol.q = q;
  sol.p = q / (q - 1.0);

  const ElementRows rows = element_rows(system);
  std::vector<Eigen::Triplet<double>> base_triplets;
  for (int k = 0; k < system.stiffness.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(system.stiffness, k); it; ++it)
      base_triplets.emplace_back(it.row(), it.col(), it.value());
  }
  SpdSolver newton;
  SparseMat hess(system.n_i, system.n_i);

  double value = eval_Fp(system, lambda, q, m);
  Vector grad = grad_Fp(system, lambda, q, m);
  sol.report.objective_history.push_back(value);

  // Damped Newton with the exact Hessian
  //   K + sum_l A_l [theta_l G_l^T G_l + 2(q-1)(theta_l/g_l) v_l v_l^T]
  //     - (2(q-1)/m) S^{-1/q} yhat yhat^T,
  // v_l = G_l^T G_l lambda, yhat the power-term gradient. The rank-one
  // downdate is applied through the Sherman-Morrison identity; a failed
  // direction falls back to a Barzilai-Borwein step on K^{-1} grad.
  double bb_step = 1.0;
  Vector prev_lambda, prev_grad;
  bool at_floor = false;
  int it = 0;
  for (; it < config.max_iters; ++it) {
    if (grad.norm() <= tol) break;

    Vector direction;
    double alpha0 = 1.0;
    bool newton_ok = false;
    if (m > 0.0) {
      auto [gx, gy] = element_gradients(system, lambda);
      const Vector g = gx.cwiseProduct(gx) + gy.cwiseProduct(gy);
      const double log_s = log_power_sum(system.areas, g, q);
      if (log_s != kNegInf) {
        auto triplets = base_triplets;
        triplets.reserve(base_triplets.size() + 9 * system.n_t);
        Vector yhat_full = Vector::Zero(system.n_v);
        for (int l = 0; l < system.n_t; ++l) {
          if (g[l] <= 0.0) continue;
          const double log_g = std::log(g[l]);
          const double theta =
              m * std::exp((q - 1.0) * log_g - (q - 1.0) / q * log_s);
          const double w1 = system.areas[l] * theta;
          const double w2 =
              2.0 * (q - 1.0) * system.areas[l] * m *
              std::exp((q - 2.0) * log_g - (q - 1.0) / q * log_s);
          double v[3];
          for (int i = 0; i < 3; ++i) {
            v[i] = gx[l] * rows.gx[l][i] + gy[l] * rows.gy[l][i];
            yhat_full[rows.vert[l][i]] += w1 * v[i];
          }
          for (int i = 0; i < 3; ++i) {
            const int I = system.interior_index[rows.vert[l][i]];
            if (I < 0) continue;
            for (int j = 0; j < 3; ++j) {
              const int J = system.interior_index[rows.vert[l][j]];
              if (J < 0) continue;
              triplets.emplace_back(
                  I, J,
                  w1 * (rows.gx[l][i] * rows.gx[l][j] +
                        rows.gy[l][i] * rows.gy[l][j]) +
                      w2 * v[i] * v[j]);
            }
          }
        }
        hess.setFromTriplets(triplets.begin(), triplets.end());
        const Vector yhat = system.restrict_interior(yhat_full);
        const double c = 2.0 * (q - 1.0) / m * std::exp(-log_s / q);
        try {
          newton.factor(hess);
          const Vector p = newton.solve(grad);
          const Vector r = newton.solve(yhat);
          const double denom = 1.0 - c * yhat.dot(r);
          if (denom > 1e-12) {
            direction = -(p + (c * yhat.dot(p) / denom) * r);
            newton_ok = grad.dot(direction) < 0.0;
          }
        } catch (const std::runtime_error&) {
          // keep newton_ok = false
        }
      }
    }
    if (!newton_ok) {
      // Fallback: gradient descent in the stiffness metric with a
      // Barzilai-Borwein step length. For m = 0 the problem is the pure
      // quadratic and the unit preconditioned step is the exact solve.
      direction = -precond.solve(grad);
      alpha0 = m == 0.0 ? 1.0 : std::clamp(bb_step, 1e-12, 1e12);
    }

    const double slope = grad.dot(direction);
    // The remaining predicted decrease is below double-precision noise on
    // the objective: the iterate is the representable minimizer.
    if (newton_ok && -slope <= 1e-15 * (1.0 + std::abs(value))) {
      at_floor = true;
      break;
    }
    double alpha = alpha0;
    Vector candidate;
    double candidate_value = value;
    bool accepted = false;
    for (int bt = 0; bt < config.max_backtracks; ++bt) {
      candidate = lambda + alpha * direction;
      candidate_value = eval_Fp(system, candidate, q, m);
      if (candidate_value <= value + config.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= config.shrink;
    }
    if (!accepted) {
      // A Newton direction that cannot decrease the objective at any step
      // length has hit double precision; a failed fallback step has not.
      at_floor = newton_ok;
      break;
    }

    prev_lambda = lambda;
    prev_grad = grad;
    lambda = candidate;
    if (candidate_value > value)
      throw std::logic_error("objective increased on an accepted step");
    value = candidate_value;
    grad = grad_Fp(system, lambda, q, m);
    sol.report.objective_history.push_back(value);

    if (!newton_ok) {
      const Vector y = grad - prev_grad;
      const Vector zy = precond.solve(y);
      const double sy = (lambda - prev_lambda).dot(y);
      const double yzy = y.dot(zy);
      bb_step = (sy > 0.0 && yzy > 0.0) ? sy / yzy : 1.0;
    }
  }

  sol.lambda = lambda;
  sol.objective = value;
  sol.report.iterations = it;
  sol.report.grad_norm = grad.norm();
  sol.report.converged = grad.norm() <= tol || at_floor;

  const Vector g = element_gradient_squared(system, lambda);
  const double log_s = log_power_sum(system.areas, g, q);
  sol.grad_norm_2q = log_s == kNegInf ? 0.0 : std::exp(log_s / (2.0 * q));
  sol.C_p = log_s == kNegInf
                ? 0.0
                : std::exp(-(q - 1.0) / q * log_s);
  sol.theta = theta_from_gradients(system.areas, g, q, m,
                                   &sol.theta_degenerate);
  return sol;
}

std::vector<PSolution> continuation(const FemSystem& system, double m,
                                    const PConfig& config) {
  for (std::size_t i = 1; i < config.q_schedule.size(); ++i) {
    if (config.q_schedule[i] <= config.q_schedule[i - 1])
      throw std::invalid_argument("q schedule must be increasing");
  }
  std::vector<PSolution> stages;
  std::optional<Vector> warm;
  for (double q : config.q_schedule) {
    stages.push_back(minimize_Fp(system, q, m, warm, config));
    if (!stages.back().report.converged) break;  // partial results
    warm = stages.back().lambda;
  }
  return stages;
}

}  // namespace membrane
