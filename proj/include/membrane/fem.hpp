#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <utility>
#include <vector>

#include "membrane/mesh.hpp"

namespace membrane {

using SparseMat = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// P1 finite-element operators for a triangulation with homogeneous
/// Dirichlet conditions imposed by restriction to interior vertices.
struct FemSystem {
  SparseMat stiffness;       // interior x interior, SPD
  SparseMat stiffness_full;  // n_v x n_v, constants in the kernel
  SparseMat mass_full;       // n_v x n_v
  SparseMat grad_x;          // n_t x n_v, per-triangle d/dx
  SparseMat grad_y;          // n_t x n_v, per-triangle d/dy
  Vector load;               // (mass_full * f)|interior
  Vector f_vertices;         // vertex samples of the data f
  Vector areas;              // per triangle
  std::vector<int> interior_index;     // vertex -> interior slot or -1
  std::vector<int> interior_vertices;  // interior slot -> vertex
  int n_v = 0, n_t = 0, n_i = 0;

  /// Interior coefficients -> full vertex vector with zero boundary values.
  Vector zero_extend(const Vector& lambda) const;
  Vector restrict_interior(const Vector& full) const;

  /// Discrete integral of f * u_h for interior coefficients lambda.
  double load_pairing(const Vector& lambda) const { return load.dot(lambda); }
};

/// Assembles stiffness, mass, per-triangle gradient operators and load
/// vector. f is sampled at vertices. Rejects degenerate triangles (area
/// below 1e-14 * diameter^2) and non-finite data.
FemSystem assemble(const Mesh& mesh, const Vector& f_vertices);

/// Per-triangle gradient components of the zero-extended coefficients.
std::pair<Vector, Vector> element_gradients(const FemSystem& system,
                                            const Vector& lambda);

/// Per-triangle squared gradient norms g_l = |grad u|^2 on triangle l.
Vector element_gradient_squared(const FemSystem& system,
                                const Vector& lambda);

/// 1/2 lambda^T K lambda.
double dirichlet_energy(const FemSystem& system, const Vector& lambda);

/// Compact per-triangle rows of the gradient operators (the three vertex
/// ids with their d/dx and d/dy coefficients); used by the optimizers for
/// per-element Hessian assembly.
struct ElementRows {
  std::vector<std::array<int, 3>> vert;
  std::vector<std::array<double, 3>> gx;
  std::vector<std::array<double, 3>> gy;
};

ElementRows element_rows(const FemSystem& system);

struct SolveReport {
  int refinement_steps = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Unconstrained minimizer of 1/2 l^T K l - load^T l, i.e. the discrete
/// Poisson solution. Guarantees ||K l - load|| <= 1e-10 ||load|| via a
/// direct factorization plus iterative refinement; throws with the final
/// residual if that cannot be met.
Vector poisson_solve(const FemSystem& system, SolveReport* report = nullptr);

/// Shared SPD solver: analyzes the sparsity pattern once, refactors per
/// call. Used by both optimizers for their inner linear solves.
class SpdSolver {
 public:
  void factor(const SparseMat& A);
  Vector solve(const Vector& b) const;
  bool ready() const { return factored_; }

 private:
  Eigen::SimplicialLDLT<SparseMat> ldlt_;
  bool analyzed_ = false;
  bool factored_ = false;
};

}  // namespace membrane
