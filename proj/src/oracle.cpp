#include "membrane/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace membrane {

namespace {

void check_radius(double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw std::invalid_argument("radius outside [0, 1]");
}

}  // namespace

double unit_ball_volume(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  double gamma = d % 2 == 0 ? 1.0 : std::sqrt(std::numbers::pi);
  for (double x = d % 2 == 0 ? 1.0 : 0.5; x <= d / 2.0; x += 1.0)
    gamma *= x;
  return std::pow(std::numbers::pi, d / 2.0) / gamma;
}

double solve_am(int d, double m) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (m < 0.0) throw std::invalid_argument("mass must be nonnegative");
  if (m == 0.0) return 1.0;
  const double coef = (d + 1) * (1.0 + m / unit_ball_volume(d));
  auto g = [&](double a) { return std::pow(a, d + 1) - coef * a + d; };
  double lo = 0.0, hi = 1.0;  // g(0) = d > 0, g(1) = -(d+1) m / omega < 0
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

RadialSolution radial_solution(int d, double m) {
  RadialSolution sol;
  sol.d = d;
  sol.m = m;
  sol.omega_d = unit_ball_volume(d);
  sol.a = solve_am(d, m);
  sol.kappa = sol.a / d;
  return sol;
}

double RadialSolution::u(double r) const {
  check_radius(r);
  if (r <= a) return (a * a - r * r) / (2.0 * d) + a * (1.0 - a) / d;
  return a / d * (1.0 - r);
}

double RadialSolution::du(double r) const {
  check_radius(r);
  return r <= a ? -r / d : -a / d;
}

double RadialSolution::theta(double r) const {
  check_radius(r);
  return r < a ? 0.0 : r / a - 1.0;
}

}  // namespace membrane
