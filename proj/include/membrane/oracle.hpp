#pragma once

namespace membrane {

/// Closed-form optimal reinforcement of the unit ball of R^d under the
/// constant load f = 1. The displacement is a paraboloid capped by the
/// cone (a/d)(1-r); the reinforcement lives on the annulus r >= a.
struct RadialSolution {
  int d = 2;
  double m = 0.0;
  double omega_d = 0.0;  // measure of the unit ball
  double a = 1.0;        // free-boundary radius a_m
  double kappa = 0.0;    // gradient bound a_m / d

  double u(double r) const;
  double du(double r) const;     // radial derivative, |du| <= kappa
  double theta(double r) const;  // 0 for r < a, r/a - 1 beyond
};

/// Measure of the unit ball, pi^{d/2} / Gamma(d/2 + 1), with Gamma at
/// half-integers evaluated by the factorial recurrence.
double unit_ball_volume(int d);

/// Unique root of a^{d+1} - (d+1) a (1 + m/omega_d) + d in (0, 1],
/// bracketed by the sign change and found by bisection.
double solve_am(int d, double m);

RadialSolution radial_solution(int d, double m);

}  // namespace membrane
