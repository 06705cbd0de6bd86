#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "membrane/fem.hpp"
#include "membrane/mesh.hpp"

using namespace membrane;

namespace {

Mesh reference_triangle() {
  return make_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
}

double simpson(double a, double b, int n, auto f) {
  double s = f(a) + f(b);
  const double h = (b - a) / n;
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("reference triangle local stiffness and mass") {
  Mesh m = reference_triangle();
  FemSystem sys = assemble(m, Vector::Ones(3));

  const double K[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0},
                          {-0.5, 0.0, 0.5}};
  const double M[3][3] = {{2.0 / 24, 1.0 / 24, 1.0 / 24},
                          {1.0 / 24, 2.0 / 24, 1.0 / 24},
                          {1.0 / 24, 1.0 / 24, 2.0 / 24}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(sys.stiffness_full.coeff(i, j) ==
            doctest::Approx(K[i][j]).epsilon(1e-14));
      CHECK(sys.mass_full.coeff(i, j) ==
            doctest::Approx(M[i][j]).epsilon(1e-14));
    }
  }

  // Vertex values (0,1,0) represent u = x: per-triangle gradient (1, 0).
  Vector w(3);
  w << 0, 1, 0;
  Vector gx = sys.grad_x * w, gy = sys.grad_y * w;
  CHECK(gx[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gy[0] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("assembly invariants on generated meshes") {
  for (auto spec : {DomainSpec::disk(5), DomainSpec::square(6),
                    DomainSpec::treffle(5)}) {
    Mesh m = generate(spec);
    Vector f(m.n_vertices());
    for (int v = 0; v < m.n_vertices(); ++v)
      f[v] = 1.0 + 0.3 * m.vertices[v].x;
    FemSystem sys = assemble(m, f);

    // Constants in the kernel of the unrestricted stiffness.
    Vector row_sums = sys.stiffness_full * Vector::Ones(sys.n_v);
    CHECK(row_sums.lpNorm<Eigen::Infinity>() <= 1e-12);

    // Mass entries sum to the total area.
    const double mass_sum =
        Vector::Ones(sys.n_v).dot(sys.mass_full * Vector::Ones(sys.n_v));
    CHECK(mass_sum == doctest::Approx(m.total_area()).epsilon(1e-12));

    // Gradients of the coordinate functions.
    Vector X(sys.n_v), Y(sys.n_v);
    for (int v = 0; v < sys.n_v; ++v) {
      X[v] = m.vertices[v].x;
      Y[v] = m.vertices[v].y;
    }
    CHECK((sys.grad_x * X - Vector::Ones(sys.n_t)).lpNorm<Eigen::Infinity>()
          <= 1e-12);
    CHECK((sys.grad_y * X).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((sys.grad_x * Y).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((sys.grad_y * Y - Vector::Ones(sys.n_t)).lpNorm<Eigen::Infinity>()
          <= 1e-12);

    // Stiffness / gradient-operator consistency on random coefficients.
    std::mt19937 rng(42);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 5; ++trial) {
      Vector lambda(sys.n_i);
      for (int k = 0; k < sys.n_i; ++k) lambda[k] = gauss(rng);
      const double quad = lambda.dot(sys.stiffness * lambda);
      const Vector g = element_gradient_squared(sys, lambda);
      const double sum = sys.areas.dot(g);
      CHECK(quad == doctest::Approx(sum).epsilon(1e-12));
    }
  }
}

TEST_CASE("element gradients") {
  Mesh m = generate(DomainSpec::square(5));
  FemSystem sys = assemble(m, Vector::Ones(m.n_vertices()));

  SUBCASE("zero coefficients give zero gradients") {
    auto [gx, gy] = element_gradients(sys, Vector::Zero(sys.n_i));
    CHECK(gx.norm() == 0.0);
    CHECK(gy.norm() == 0.0);
  }

  SUBCASE("hat function is supported on its star") {
    const int slot = sys.n_i / 2;
    const int v = sys.interior_vertices[slot];
    Vector lambda = Vector::Zero(sys.n_i);
    lambda[slot] = 1.0;
    Vector g = element_gradient_squared(sys, lambda);
    for (int l = 0; l < sys.n_t; ++l) {
      const auto& t = m.triangles[l];
      const bool in_star = t[0] == v || t[1] == v || t[2] == v;
      CHECK((g[l] > 0.0) == in_star);
    }
  }

  SUBCASE("y-independent field has zero y-gradient on the tensor mesh") {
    Vector w(sys.n_v);
    for (int v = 0; v < sys.n_v; ++v)
      w[v] = m.vertices[v].x * (1.0 - m.vertices[v].x);
    CHECK((sys.grad_y * w).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  SUBCASE("length mismatch is rejected") {
    CHECK_THROWS_AS(element_gradients(sys, Vector::Zero(sys.n_i + 1)),
                    std::invalid_argument);
  }
}

TEST_CASE("poisson solve on the unit disk, f = 1") {
  Mesh m = generate(DomainSpec::disk(20));
  FemSystem sys = assemble(m, Vector::Ones(m.n_vertices()));
  SolveReport report;
  Vector lambda = poisson_solve(sys, &report);
  CHECK(report.converged);
  CHECK(report.residual <= 1e-10 * sys.load.norm());

  // Center value: u(0) = 1/(2d) = 0.25 for d = 2.
  REQUIRE(sys.interior_index[0] >= 0);  // vertex 0 is the mesh center
  CHECK(lambda[sys.interior_index[0]] == doctest::Approx(0.25).epsilon(0.01));

  // Energy -1/2 int(u f): the exact value is -pi/16, cross-checked here by
  // 1D quadrature of -1/2 * int_0^1 2 pi r (1 - r^2)/4 dr.
  const double by_quadrature =
      -0.5 * simpson(0.0, 1.0, 200, [](double r) {
        return 2.0 * std::numbers::pi * r * (1.0 - r * r) / 4.0;
      });
  CHECK(by_quadrature == doctest::Approx(-std::numbers::pi / 16).epsilon(1e-8));
  const double energy = -0.5 * sys.load_pairing(lambda);
  CHECK(energy == doctest::Approx(-std::numbers::pi / 16).epsilon(0.01));
}

TEST_CASE("poisson solve with f = 0 returns zero") {
  Mesh m = generate(DomainSpec::square(4));
  FemSystem sys = assemble(m, Vector::Zero(m.n_vertices()));
  Vector lambda = poisson_solve(sys);
  CHECK(lambda.norm() == 0.0);
}

TEST_CASE("poisson L2 error drops by >= 3x when h halves") {
  auto l2_error = [](int rings) {
    Mesh m = generate(DomainSpec::disk(rings));
    FemSystem sys = assemble(m, Vector::Ones(m.n_vertices()));
    Vector lambda = poisson_solve(sys);
    Vector err = sys.zero_extend(lambda);
    for (int v = 0; v < sys.n_v; ++v) {
      const double r = std::hypot(m.vertices[v].x, m.vertices[v].y);
      err[v] -= (1.0 - r * r) / 4.0;
    }
    return std::sqrt(err.dot(sys.mass_full * err));
  };
  const double coarse = l2_error(8);
  const double fine = l2_error(16);
  CHECK(coarse / fine >= 3.0);
}

TEST_CASE("assembly is permutation equivariant") {
  Mesh m1 = generate(DomainSpec::square(4));
  const int nv = m1.n_vertices();
  std::vector<int> sigma(nv);
  for (int v = 0; v < nv; ++v) sigma[v] = nv - 1 - v;

  std::vector<Vec2> verts2(nv);
  for (int v = 0; v < nv; ++v) verts2[sigma[v]] = m1.vertices[v];
  std::vector<std::array<int, 3>> tris2;
  for (const auto& t : m1.triangles)
    tris2.push_back({sigma[t[0]], sigma[t[1]], sigma[t[2]]});
  Mesh m2 = make_mesh(std::move(verts2), std::move(tris2));

  Vector f1(nv), f2(nv);
  for (int v = 0; v < nv; ++v) {
    f1[v] = 1.0 + m1.vertices[v].x + 2.0 * m1.vertices[v].y;
    f2[sigma[v]] = f1[v];
  }
  FemSystem s1 = assemble(m1, f1);
  FemSystem s2 = assemble(m2, f2);

  std::mt19937 rng(7);
  std::normal_distribution<double> gauss;
  Vector w1(nv), w2(nv);
  for (int v = 0; v < nv; ++v) {
    w1[v] = gauss(rng);
    w2[sigma[v]] = w1[v];
  }
  CHECK(w1.dot(s1.stiffness_full * w1) ==
        doctest::Approx(w2.dot(s2.stiffness_full * w2)).epsilon(1e-12));
  CHECK(w1.dot(s1.mass_full * w1) ==
        doctest::Approx(w2.dot(s2.mass_full * w2)).epsilon(1e-12));
  Vector gx1 = s1.grad_x * w1, gx2 = s2.grad_x * w2;
  Vector gy1 = s1.grad_y * w1, gy2 = s2.grad_y * w2;
  for (int l = 0; l < s1.n_t; ++l) {
    CHECK(gx1[l] == doctest::Approx(gx2[l]).epsilon(1e-12));
    CHECK(gy1[l] == doctest::Approx(gy2[l]).epsilon(1e-12));
  }
  for (int v = 0; v < nv; ++v) {
    const int i1 = s1.interior_index[v];
    const int i2 = s2.interior_index[sigma[v]];
    CHECK((i1 >= 0) == (i2 >= 0));
    if (i1 >= 0)
      CHECK(s1.load[i1] == doctest::Approx(s2.load[i2]).epsilon(1e-12));
  }
}

TEST_CASE("assembly invariants survive an unstructured perturbation") {
  // Jiggle the interior vertices of a structured grid so no triangle is
  // axis-aligned or congruent to another.
  Mesh base = generate(DomainSpec::square(6));
  std::mt19937 rng(2718);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::vector<Vec2> verts = base.vertices;
  for (int v = 0; v < base.n_vertices(); ++v) {
    if (base.boundary_vertex[v]) continue;
    verts[v].x += jitter(rng) / 6.0;
    verts[v].y += jitter(rng) / 6.0;
  }
  Mesh mesh = make_mesh(std::move(verts), base.triangles);
  Vector f(mesh.n_vertices());
  for (int v = 0; v < mesh.n_vertices(); ++v)
    f[v] = std::sin(3.0 * mesh.vertices[v].x) + 1.5;
  FemSystem sys = assemble(mesh, f);

  Vector row_sums = sys.stiffness_full * Vector::Ones(sys.n_v);
  CHECK(row_sums.lpNorm<Eigen::Infinity>() <= 1e-12);
  const double mass_sum =
      Vector::Ones(sys.n_v).dot(sys.mass_full * Vector::Ones(sys.n_v));
  CHECK(mass_sum == doctest::Approx(mesh.total_area()).epsilon(1e-12));

  Vector X(sys.n_v);
  for (int v = 0; v < sys.n_v; ++v) X[v] = mesh.vertices[v].x;
  CHECK((sys.grad_x * X - Vector::Ones(sys.n_t)).lpNorm<Eigen::Infinity>()
        <= 1e-11);

  std::normal_distribution<double> gauss;
  Vector lambda(sys.n_i);
  for (int k = 0; k < sys.n_i; ++k) lambda[k] = gauss(rng);
  const double quad = lambda.dot(sys.stiffness * lambda);
  CHECK(quad == doctest::Approx(
                    sys.areas.dot(element_gradient_squared(sys, lambda)))
                    .epsilon(1e-12));

  SolveReport report;
  poisson_solve(sys, &report);
  CHECK(report.converged);
}

TEST_CASE("degenerate triangle is rejected by name") {
  Mesh m = make_mesh({{0, 0}, {1, 0}, {0.5, 1e-18}}, {{0, 1, 2}});
  try {
    assemble(m, Vector::Ones(3));
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("triangle 0") != std::string::npos);
  }
}

TEST_CASE("non-finite f is rejected") {
  Mesh m = reference_triangle();
  Vector f(3);
  f << 1.0, std::nan(""), 1.0;
  CHECK_THROWS_AS(assemble(m, f), std::invalid_argument);
}
