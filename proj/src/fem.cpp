#include "membrane/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace membrane {

Vector FemSystem::zero_extend(const Vector& lambda) const {
  if (lambda.size() != n_i)
    throw std::invalid_argument("coefficient vector has length " +
                                std::to_string(lambda.size()) +
                                ", expected " + std::to_string(n_i));
  Vector full = Vector::Zero(n_v);
  for (int k = 0; k < n_i; ++k) full[interior_vertices[k]] = lambda[k];
  return full;
}

Vector FemSystem::restrict_interior(const Vector& full) const {
  if (full.size() != n_v)
    throw std::invalid_argument("full vector has wrong length");
  Vector lambda(n_i);
  for (int k = 0; k < n_i; ++k) lambda[k] = full[interior_vertices[k]];
  return lambda;
}

FemSystem assemble(const Mesh& mesh, const Vector& f_vertices) {
  const int nv = mesh.n_vertices();
  const int nt = mesh.n_triangles();
  if (f_vertices.size() != nv)
    throw std::invalid_argument("f must be sampled at all vertices");
  if (!f_vertices.allFinite())
    throw std::invalid_argument("f has non-finite vertex values");

  const double scale = mesh.diameter();
  const double area_floor = 1e-14 * scale * scale;

  FemSystem sys;
  sys.n_v = nv;
  sys.n_t = nt;
  sys.f_vertices = f_vertices;
  sys.areas.resize(nt);

  sys.interior_index.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (!mesh.boundary_vertex[v]) {
      sys.interior_index[v] = static_cast<int>(sys.interior_vertices.size());
      sys.interior_vertices.push_back(v);
    }
  }
  sys.n_i = static_cast<int>(sys.interior_vertices.size());

  std::vector<Eigen::Triplet<double>> k_full, k_int, m_full, gx, gy;
  k_full.reserve(9 * nt);
  m_full.reserve(9 * nt);
  gx.reserve(3 * nt);
  gy.reserve(3 * nt);

  for (int l = 0; l < nt; ++l) {
    const auto& t = mesh.triangles[l];
    const double area = mesh.triangle_area[l];
    if (!(area > area_floor))
      throw std::invalid_argument("degenerate triangle " + std::to_string(l));
    sys.areas[l] = area;

    const Vec2& p0 = mesh.vertices[t[0]];
    const Vec2& p1 = mesh.vertices[t[1]];
    const Vec2& p2 = mesh.vertices[t[2]];
    // Gradients of the P1 shape functions: grad phi_i = (b_i, c_i)/(2A).
    const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};

    for (int i = 0; i < 3; ++i) {
      gx.emplace_back(l, t[i], b[i] / (2.0 * area));
      gy.emplace_back(l, t[i], c[i] / (2.0 * area));
      for (int j = 0; j < 3; ++j) {
        const double kij = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        k_full.emplace_back(t[i], t[j], kij);
        const int ii = sys.interior_index[t[i]];
        const int jj = sys.interior_index[t[j]];
        if (ii >= 0 && jj >= 0) k_int.emplace_back(ii, jj, kij);
        m_full.emplace_back(t[i], t[j], area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }

  sys.stiffness_full.resize(nv, nv);
  sys.stiffness_full.setFromTriplets(k_full.begin(), k_full.end());
  sys.stiffness.resize(sys.n_i, sys.n_i);
  sys.stiffness.setFromTriplets(k_int.begin(), k_int.end());
  sys.mass_full.resize(nv, nv);
  sys.mass_full.setFromTriplets(m_full.begin(), m_full.end());
  sys.grad_x.resize(nt, nv);
  sys.grad_x.setFromTriplets(gx.begin(), gx.end());
  sys.grad_y.resize(nt, nv);
  sys.grad_y.setFromTriplets(gy.begin(), gy.end());

  sys.load = sys.restrict_interior(sys.mass_full * f_vertices);
  return sys;
}

std::pair<Vector, Vector> element_gradients(const FemSystem& system,
                                            const Vector& lambda) {
  const Vector full = system.zero_extend(lambda);
  return {system.grad_x * full, system.grad_y * full};
}

Vector element_gradient_squared(const FemSystem& system,
                                const Vector& lambda) {
  auto [gx, gy] = element_gradients(system, lambda);
  return gx.cwiseProduct(gx) + gy.cwiseProduct(gy);
}

double dirichlet_energy(const FemSystem& system, const Vector& lambda) {
  return 0.5 * lambda.dot(system.stiffness * lambda);
}

ElementRows element_rows(const FemSystem& system) {
  ElementRows rows;
  rows.vert.resize(system.n_t);
  rows.gx.resize(system.n_t);
  rows.gy.resize(system.n_t);
  Eigen::SparseMatrix<double, Eigen::RowMajor> gxr = system.grad_x;
  Eigen::SparseMatrix<double, Eigen::RowMajor> gyr = system.grad_y;
  for (int l = 0; l < system.n_t; ++l) {
    int slot = 0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gxr,
                                                                        l);
         it; ++it, ++slot) {
      rows.vert[l][slot] = static_cast<int>(it.col());
      rows.gx[l][slot] = it.value();
    }
    slot = 0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gyr,
                                                                        l);
         it; ++it, ++slot) {
      if (rows.vert[l][slot] != static_cast<int>(it.col()))
        throw std::logic_error("gradient operators disagree on sparsity");
      rows.gy[l][slot] = it.value();
    }
  }
  return rows;
}

void SpdSolver::factor(const SparseMat& A) {
  if (!analyzed_) {
    ldlt_.analyzePattern(A);
    analyzed_ = true;
  }
  ldlt_.factorize(A);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error("sparse LDLT factorization failed");
  factored_ = true;
}

Vector SpdSolver::solve(const Vector& b) const {
  if (!factored_) throw std::logic_error("SpdSolver::solve before factor");
  return ldlt_.solve(b);
}

Vector poisson_solve(const FemSystem& system, SolveReport* report) {
  const double load_norm = system.load.norm();
  if (load_norm == 0.0) {
    if (report) *report = {0, 0.0, true};
    return Vector::Zero(system.n_i);
  }
  SpdSolver solver;
  solver.factor(system.stiffness);
  Vector lambda = solver.solve(system.load);
  Vector residual = system.load - system.stiffness * lambda;
  int steps = 0;
  // Iterative refinement down to the contract residual.
  while (residual.norm() > 1e-10 * load_norm && steps < 5) {
    lambda += solver.solve(residual);
    residual = system.load - system.stiffness * lambda;
    ++steps;
  }
  const double res = residual.norm();
  const bool ok = res <= 1e-10 * load_norm;
  if (report) *report = {steps, res, ok};
  if (!ok)
    throw std::runtime_error("poisson_solve: residual " +
                             std::to_string(res) + " above tolerance " +
                             std::to_string(1e-10 * load_norm));
  return lambda;
}

}  // namespace membrane
