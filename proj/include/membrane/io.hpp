#pragma once

#include <functional>
#include <string>

#include "membrane/fem.hpp"
#include "membrane/mesh.hpp"

namespace membrane {

using ScalarField = std::function<double(double, double)>;

/// Parses an f specification: a numeric constant ("1", "0.25") or one of
/// the named analytic fields "one", "linear" (2 + x), "bump"
/// (exp(-4(x^2+y^2))).
ScalarField parse_field_spec(const std::string& spec);

Vector sample_field(const ScalarField& f, const Mesh& mesh);

/// "id,x,y,u" per vertex; 17 significant digits, deterministic bytes.
void write_u_csv(const std::string& path, const Mesh& mesh,
                 const Vector& u_full);

/// "id,cx,cy,theta" per triangle.
void write_theta_csv(const std::string& path, const Mesh& mesh,
                     const Vector& theta);

Vector read_u_csv(const std::string& path, int n_vertices);
Vector read_theta_csv(const std::string& path, int n_triangles);

/// "polyline,idx,x,y" rows for each free-boundary chain.
void write_freeboundary_csv(const std::string& path, const Mesh& mesh,
                            const std::vector<std::vector<int>>& polylines);

/// Legacy ASCII VTK unstructured grid: POINTS/CELLS/CELL_TYPES (type 5),
/// POINT_DATA scalar u, CELL_DATA scalars theta and grad_norm.
void write_vtk(const std::string& path, const Mesh& mesh,
               const Vector& u_full, const Vector& theta,
               const Vector& grad_norm);

}  // namespace membrane
