#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "membrane/analysis.hpp"
#include "membrane/fem.hpp"
#include "membrane/mesh.hpp"
#include "membrane/oracle.hpp"
#include "membrane/solver_minimax.hpp"

using namespace membrane;

TEST_CASE("energy report at lambda = 0") {
  Mesh mesh = generate(DomainSpec::square(4));
  FemSystem sys = assemble(mesh, Vector::Ones(mesh.n_vertices()));
  EnergyReport rep = energy_report(sys, Vector::Zero(sys.n_i),
                                   Vector::Zero(sys.n_t), 0.5);
  CHECK(rep.E_f == 0.0);
  CHECK(rep.J_value == 0.0);
  CHECK(rep.F1_value == 0.0);
}

TEST_CASE("energy identities at the constrained optimum") {
  Mesh mesh = generate(DomainSpec::disk(24));
  FemSystem sys = assemble(mesh, Vector::Ones(mesh.n_vertices()));
  const double m = 0.5;
  ConstrainedSolution sol = solve_constrained(sys, m);
  REQUIRE(sol.report.converged);
  EnergyReport rep = energy_report(sys, sol.lambda, sol.theta, m);
  CHECK(std::abs(rep.E_f - rep.J_value) <= 1e-5 * std::abs(rep.E_f));
  CHECK(std::abs(rep.F1_value - rep.E_f) <= 1e-4 * std::abs(rep.E_f));
}

TEST_CASE("uniform gradient field classifies as all plastic") {
  Mesh mesh = generate(DomainSpec::square(5));
  FreeBoundaryReport rep = free_boundary_from_g(
      mesh, Vector::Constant(mesh.n_triangles(), 0.4), 0.05);
  CHECK(rep.polylines.empty());
  CHECK(rep.plastic_area_fraction == 1.0);
  for (auto f : rep.plastic) CHECK(f == 1);
  CHECK(rep.kappa_hat == doctest::Approx(std::sqrt(0.4)).epsilon(1e-14));
}

TEST_CASE("free boundary on the disk approximates the oracle annulus") {
  Mesh mesh = generate(DomainSpec::disk(30));
  FemSystem sys = assemble(mesh, Vector::Ones(mesh.n_vertices()));
  const double m = 0.5;
  ConstrainedSolution sol = solve_constrained(sys, m);
  REQUIRE(sol.report.converged);
  FreeBoundaryReport rep = extract_free_boundary(mesh, sys, sol.lambda);

  // Plastic and elastic triangles partition the mesh.
  int plastic = 0;
  for (auto f : rep.plastic) plastic += f;
  CHECK(plastic > 0);
  CHECK(plastic < mesh.n_triangles());

  // Every polyline edge bounds exactly one plastic and one elastic
  // triangle; verified against an independent edge scan.
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
  std::set<std::pair<int, int>> separating;
  for (const auto& [edge, tris] : edge_tris) {
    if (tris.second >= 0 &&
        rep.plastic[tris.first] != rep.plastic[tris.second])
      separating.insert(edge);
  }
  std::size_t walked = 0;
  for (const auto& chain : rep.polylines) {
    for (std::size_t i = 1; i < chain.size(); ++i, ++walked) {
      auto key = std::minmax(chain[i - 1], chain[i]);
      CHECK(separating.count({key.first, key.second}) == 1);
    }
  }
  CHECK(walked == separating.size());

  // Innermost plastic triangles sit near the oracle free boundary r = a_m.
  RadialSolution oracle = radial_solution(2, m);
  double radius_sum = 0.0;
  int count = 0;
  for (const auto& [edge, tris] : edge_tris) {
    if (tris.second < 0) continue;
    if (rep.plastic[tris.first] == rep.plastic[tris.second]) continue;
    const int pl = rep.plastic[tris.first] ? tris.first : tris.second;
    const Vec2 c = mesh.centroid(pl);
    radius_sum += std::hypot(c.x, c.y);
    ++count;
  }
  REQUIRE(count > 0);
  CHECK(std::abs(radius_sum / count - oracle.a) <= 0.05 * oracle.a);
}

TEST_CASE("classification is invariant under an exact rigid motion") {
  Mesh m1 = generate(DomainSpec::square(16));
  // Quarter-turn (x, y) -> (-y, x): exact in floating point.
  std::vector<Vec2> verts;
  for (const auto& v : m1.vertices) verts.push_back({-v.y, v.x});
  Mesh m2 = make_mesh(std::move(verts), m1.triangles);

  FemSystem s1 = assemble(m1, Vector::Ones(m1.n_vertices()));
  FemSystem s2 = assemble(m2, Vector::Ones(m2.n_vertices()));
  ConstrainedSolution sol1 = solve_constrained(s1, 0.5);
  ConstrainedSolution sol2 = solve_constrained(s2, 0.5);
  REQUIRE(sol1.report.converged);
  REQUIRE(sol2.report.converged);
  FreeBoundaryReport r1 = extract_free_boundary(m1, s1, sol1.lambda);
  FreeBoundaryReport r2 = extract_free_boundary(m2, s2, sol2.lambda);
  CHECK(r1.kappa_hat == r2.kappa_hat);
  CHECK(r1.plastic == r2.plastic);
}

TEST_CASE("obstacle inequality") {
  SUBCASE("zero displacement sits below the obstacle") {
    Mesh mesh = generate(DomainSpec::disk(8));
    FemSystem sys = assemble(mesh, Vector::Ones(mesh.n_vertices()));
    CHECK(obstacle_check(sys, Vector::Zero(sys.n_i),
                         distance_to_boundary(mesh)) <= 0.0);
  }
  SUBCASE("disk, m = 0.5") {
    Mesh mesh = generate(DomainSpec::disk(30));
    FemSystem sys = assemble(mesh, Vector::Ones(mesh.n_vertices()));
    ConstrainedSolution sol = solve_constrained(sys, 0.5);
    REQUIRE(sol.report.converged);
    const auto dist = distance_to_boundary(mesh);
    CHECK(obstacle_check(sys, sol.lambda, dist) <= 1e-3);

    // Contact set concentrates on the oracle annulus r >= a_m.
    RadialSolution oracle = radial_solution(2, 0.5);
    const Vector u = sys.zero_extend(sol.lambda);
    const Vector g = element_gradient_squared(sys, sol.lambda);
    const double kappa_hat = std::sqrt(g.maxCoeff());
    double min_contact_radius = 1.0;
    for (int v = 0; v < sys.n_v; ++v) {
      if (mesh.boundary_vertex[v]) continue;
      if (u[v] >= kappa_hat * dist[v] - 1e-4) {
        min_contact_radius =
            std::min(min_contact_radius,
                     std::hypot(mesh.vertices[v].x, mesh.vertices[v].y));
      }
    }
    CHECK(min_contact_radius >= 0.9 * oracle.a);
  }
  SUBCASE("square, m = 0.1") {
    Mesh mesh = generate(DomainSpec::square(24));
    FemSystem sys = assemble(mesh, Vector::Ones(mesh.n_vertices()));
    ConstrainedSolution sol = solve_constrained(sys, 0.1);
    REQUIRE(sol.report.converged);
    CHECK(obstacle_check(sys, sol.lambda, distance_to_boundary(mesh)) <=
          1e-3);
  }
}

TEST_CASE("large-m asymptotics approach the scaled distance function") {
  SUBCASE("C_D on the disk is pi/3") {
    Mesh mesh = generate(DomainSpec::disk(24));
    FemSystem sys = assemble(mesh, Vector::Ones(mesh.n_vertices()));
    const auto dist = distance_to_boundary(mesh);
    Vector d(sys.n_v);
    for (int v = 0; v < sys.n_v; ++v) d[v] = dist[v];
    const double C_D = d.dot(sys.mass_full * Vector::Ones(sys.n_v));
    CHECK(C_D == doctest::Approx(std::numbers::pi / 3).epsilon(0.01));
  }
  SUBCASE("square, m = 50") {
    Mesh mesh = generate(DomainSpec::square(24));
    CHECK(asymptotic_check(mesh, Vector::Ones(mesh.n_vertices()), 50.0) <=
          0.10);
  }
  SUBCASE("f = 0 gives zero distance by convention") {
    Mesh mesh = generate(DomainSpec::square(6));
    CHECK(asymptotic_check(mesh, Vector::Zero(mesh.n_vertices()), 50.0) ==
          0.0);
  }
  SUBCASE("negative f is rejected") {
    Mesh mesh = generate(DomainSpec::square(6));
    CHECK_THROWS_AS(
        asymptotic_check(mesh, -Vector::Ones(mesh.n_vertices()), 50.0),
        std::invalid_argument);
  }
}

TEST_CASE("eps_fb validation") {
  Mesh mesh = generate(DomainSpec::square(4));
  const Vector g = Vector::Ones(mesh.n_triangles());
  CHECK_THROWS_AS(free_boundary_from_g(mesh, g, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(free_boundary_from_g(mesh, g, 0.7),
                  std::invalid_argument);
}
