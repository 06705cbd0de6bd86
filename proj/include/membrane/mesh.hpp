#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace membrane {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// 2D simplicial mesh. Triangles are stored counter-clockwise; areas are
/// positive by construction. Immutable after construction.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::uint8_t> boundary_vertex;  // 1 if on a one-triangle edge
  std::vector<double> triangle_area;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double total_area() const;
  Vec2 centroid(int l) const;
  /// Bounding-box diagonal; used as the length scale for tolerances.
  double diameter() const;
  double max_edge_length() const;
  double mean_edge_length() const;
};

enum class DomainKind { disk, square, ellipse, treffle, file };

struct DomainSpec {
  DomainKind kind = DomainKind::disk;
  /// Rings for polar domains, cells per side for the square. When 0 it is
  /// derived from target_triangles.
  int subdiv = 0;
  int target_triangles = 0;
  double ellipse_a = 1.5;
  double ellipse_b = 1.0;
  double lobes = 0.3;  // treffle boundary r(phi) = 1 + lobes*cos(3 phi)
  std::string path;    // kind == file

  static DomainSpec disk(int subdiv);
  static DomainSpec square(int subdiv);
  static DomainSpec ellipse(int subdiv, double a, double b);
  static DomainSpec treffle(int subdiv, double lobes = 0.3);
};

/// Structured, deterministic triangulation of the requested domain.
/// Throws std::invalid_argument for bad parameters or a resolution too
/// coarse to represent the boundary (fewer than 8 boundary vertices).
Mesh generate(const DomainSpec& spec);

/// Builds a mesh from raw vertices and triangles, computing areas and
/// boundary flags. Throws on non-positively-oriented triangles.
Mesh make_mesh(std::vector<Vec2> vertices,
               std::vector<std::array<int, 3>> triangles);

struct LoadReport {
  int reoriented = 0;  // clockwise triangles fixed up during load
};

/// Plain-text mesh format, see save_mesh. Throws std::runtime_error with
/// the offending line number on malformed input.
Mesh load_mesh(const std::string& path, LoadReport* report = nullptr);

/// Header "mesh2d <n_v> <n_t>", then one "x y" line per vertex and one
/// "i j k b1 b2 b3" line per triangle (indices plus per-vertex boundary
/// flags). Coordinates are written with 17 significant digits so that a
/// save/load round trip is bit-exact.
void save_mesh(const Mesh& mesh, const std::string& path);

/// Directed boundary edges (a, b) in triangle orientation; each belongs to
/// exactly one triangle. Deterministic order.
std::vector<std::pair<int, int>> boundary_edges(const Mesh& mesh);

/// Exact Euclidean distance from every vertex to the union of boundary
/// segments. Throws if the mesh has no boundary edges.
std::vector<double> distance_to_boundary(const Mesh& mesh);

double signed_triangle_area(const Vec2& a, const Vec2& b, const Vec2& c);

/// Area of the polygonal region enclosed by the boundary loops (Green's
/// theorem over directed boundary edges).
double polygon_area(const Mesh& mesh);

}  // namespace membrane
