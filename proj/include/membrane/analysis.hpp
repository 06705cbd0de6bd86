#pragma once

#include <cstdint>
#include <vector>

#include "membrane/fem.hpp"
#include "membrane/mesh.hpp"

namespace membrane {

struct EnergyReport {
  double E_f = 0.0;      // -1/2 int f u
  double J_value = 0.0;  // 1/2 sum A (1+theta) g - int f u
  double F1_value = 0.0; // 1/2 l^T K l + (m/2) kappa_hat^2 - int f u
};

EnergyReport energy_report(const FemSystem& system, const Vector& lambda,
                           const Vector& theta, double m);

struct FreeBoundaryReport {
  double kappa_hat = 0.0;  // max per-triangle |grad u|
  /// Triangle is plastic when g_l >= (1 - eps_fb)^2 kappa_hat^2.
  std::vector<std::uint8_t> plastic;
  /// Chains of mesh vertices along edges separating plastic from elastic
  /// triangles; closed loops repeat the first vertex at the end.
  std::vector<std::vector<int>> polylines;
  double plastic_area_fraction = 0.0;
};

/// Classification from a per-triangle squared-gradient field; exposed for
/// tests with synthetic fields.
FreeBoundaryReport free_boundary_from_g(const Mesh& mesh, const Vector& g,
                                        double eps_fb);

FreeBoundaryReport extract_free_boundary(const Mesh& mesh,
                                         const FemSystem& system,
                                         const Vector& lambda,
                                         double eps_fb = 0.05);

/// Max over vertices of u - kappa_hat * d_boundary; nonpositive means the
/// obstacle inequality of the f = 1 problem holds discretely.
double obstacle_check(const FemSystem& system, const Vector& lambda,
                      const std::vector<double>& d_boundary);

/// Solves the constrained problem at mass m_large and returns
/// ||m u - C_D d||_L2 / ||C_D d||_L2 with C_D = int d f. Requires f >= 0;
/// returns 0 for f = 0 by convention.
double asymptotic_check(const Mesh& mesh, const Vector& f_vertices,
                        double m_large);

}  // namespace membrane
