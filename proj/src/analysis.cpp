#include "membrane/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "membrane/solver_minimax.hpp"

namespace membrane {

EnergyReport energy_report(const FemSystem& system, const Vector& lambda,
                           const Vector& theta, double m) {
  if (theta.size() != system.n_t)
    throw std::invalid_argument("theta must be a per-triangle field");
  EnergyReport rep;
  const double load_pair = system.load.dot(lambda);
  rep.E_f = -0.5 * load_pair;
  const Vector g = element_gradient_squared(system, lambda);
  rep.J_value =
      0.5 * system.areas.dot((Vector::Ones(system.n_t) + theta)
                                 .cwiseProduct(g)) -
      load_pair;
  const double kappa_sq = system.n_t > 0 ? g.maxCoeff() : 0.0;
  rep.F1_value = 0.5 * lambda.dot(system.stiffness * lambda) +
                 0.5 * m * kappa_sq - load_pair;
  return rep;
}

FreeBoundaryReport free_boundary_from_g(const Mesh& mesh, const Vector& g,
                                        double eps_fb) {
  if (!(eps_fb > 0.0 && eps_fb < 0.5))
    throw std::invalid_argument("eps_fb must lie in (0, 0.5)");
  if (g.size() != mesh.n_triangles())
    throw std::invalid_argument("g must be a per-triangle field");

  FreeBoundaryReport rep;
  const double kappa_sq = mesh.n_triangles() > 0 ? g.maxCoeff() : 0.0;
  rep.kappa_hat = std::sqrt(std::max(kappa_sq, 0.0));
  const double threshold = (1.0 - eps_fb) * (1.0 - eps_fb) * kappa_sq;
  rep.plastic.resize(mesh.n_triangles());
  double plastic_area = 0.0;
  for (int l = 0; l < mesh.n_triangles(); ++l) {
    rep.plastic[l] = g[l] >= threshold ? 1 : 0;
    if (rep.plastic[l]) plastic_area += mesh.triangle_area[l];
  }
  rep.plastic_area_fraction = plastic_area / mesh.total_area();

  // Edges separating one plastic from one elastic triangle.
  std::map<std::pair<int, int>, std::pair<int, int>> edge_tris;
  for (int l = 0; l < mesh.n_triangles(); ++l) {
    const auto& t = mesh.triangles[l];
    for (int e = 0; e < 3; ++e) {
      auto key = std::minmax(t[e], t[(e + 1) % 3]);
      auto [it, inserted] =
          edge_tris.insert({{key.first, key.second}, {l, -1}});
      if (!inserted) it->second.second = l;
    }
  }
  std::map<int, std::vector<int>> incident;  // vertex -> neighbor vertices
  std::map<std::pair<int, int>, bool> used;
  for (const auto& [edge, tris] : edge_tris) {
    if (tris.second < 0) continue;
    if (rep.plastic[tris.first] != rep.plastic[tris.second]) {
      incident[edge.first].push_back(edge.second);
      incident[edge.second].push_back(edge.first);
      used[edge] = false;
    }
  }

  auto take_next = [&](int v) {
    auto it = incident.find(v);
    if (it == incident.end()) return -1;
    for (int w : it->second) {
      auto key = std::minmax(v, w);
      auto& flag = used[{key.first, key.second}];
      if (!flag) {
        flag = true;
        return w;
      }
    }
    return -1;
  };

  // Open chains first (started at odd-degree vertices), then cycles;
  // smallest start vertex first for determinism.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& [start, nbrs] : incident) {
      if (pass == 0 && nbrs.size() % 2 == 0) continue;
      while (true) {
        int next = take_next(start);
        if (next < 0) break;
        std::vector<int> chain{start, next};
        for (int v = next; (v = take_next(v)) >= 0;) chain.push_back(v);
        rep.polylines.push_back(std::move(chain));
      }
    }
  }
  return rep;
}

FreeBoundaryReport extract_free_boundary(const Mesh& mesh,
                                         const FemSystem& system,
                                         const Vector& lambda,
                                         double eps_fb) {
  return free_boundary_from_g(
      mesh, element_gradient_squared(system, lambda), eps_fb);
}

double obstacle_check(const FemSystem& system, const Vector& lambda,
                      const std::vector<double>& d_boundary) {
  if (static_cast<int>(d_boundary.size()) != system.n_v)
    throw std::invalid_argument("distance field must be per-vertex");
  const Vector g = element_gradient_squared(system, lambda);
  const double kappa_hat =
      std::sqrt(std::max(system.n_t > 0 ? g.maxCoeff() : 0.0, 0.0));
  const Vector u = system.zero_extend(lambda);
  double worst = -std::numeric_limits<double>::infinity();
  for (int v = 0; v < system.n_v; ++v)
    worst = std::max(worst, u[v] - kappa_hat * d_boundary[v]);
  return worst;
}

double asymptotic_check(const Mesh& mesh, const Vector& f_vertices,
                        double m_large) {
  if (f_vertices.minCoeff() < 0.0)
    throw std::invalid_argument("asymptotic check assumes f >= 0");
  FemSystem sys = assemble(mesh, f_vertices);
  const auto dist = distance_to_boundary(mesh);
  Vector d(sys.n_v);
  for (int v = 0; v < sys.n_v; ++v) d[v] = dist[v];
  const double C_D = d.dot(sys.mass_full * f_vertices);
  if (C_D == 0.0) return 0.0;

  ConstrainedSolution sol = solve_constrained(sys, m_large);
  const Vector limit = C_D * d;
  const Vector err = m_large * sys.zero_extend(sol.lambda) - limit;
  return std::sqrt(err.dot(sys.mass_full * err)) /
         std::sqrt(limit.dot(sys.mass_full * limit));
}

}  // namespace membrane
