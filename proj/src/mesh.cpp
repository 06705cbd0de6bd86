#include "membrane/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace membrane {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Minimum distance from p to segment [a, b].
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double vv = vx * vx + vy * vy;
  if (vv == 0.0) return std::hypot(wx, wy);
  double s = (wx * vx + wy * vy) / vv;
  s = std::clamp(s, 0.0, 1.0);
  return std::hypot(wx - s * vx, wy - s * vy);
}

void compute_areas_and_flags(Mesh& mesh) {
  const int nt = mesh.n_triangles();
  mesh.triangle_area.resize(nt);
  for (int l = 0; l < nt; ++l) {
    const auto& t = mesh.triangles[l];
    const double a = signed_triangle_area(mesh.vertices[t[0]],
                                          mesh.vertices[t[1]],
                                          mesh.vertices[t[2]]);
    if (a <= 0.0) {
      throw std::runtime_error("non-positive triangle " + std::to_string(l));
    }
    mesh.triangle_area[l] = a;
  }
  mesh.boundary_vertex.assign(mesh.n_vertices(), 0);
  for (const auto& [a, b] : boundary_edges(mesh)) {
    mesh.boundary_vertex[a] = 1;
    mesh.boundary_vertex[b] = 1;
  }
}

Mesh make_square(int n) {
  if (n < 2) {
    throw std::invalid_argument(
        "square resolution too coarse: fewer than 8 boundary vertices");
  }
  Mesh mesh;
  const int nv = (n + 1) * (n + 1);
  mesh.vertices.reserve(nv);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.push_back({double(i) / n, double(j) / n});
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  mesh.triangles.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  compute_areas_and_flags(mesh);
  return mesh;
}

/// Concentric-ring triangulation of the unit disk: ring k carries 6k
/// vertices at radius k/n, zipper-merged between consecutive rings.
/// 6n^2 triangles in total. `map` sends reference polar coordinates
/// (rho, phi) to the actual domain point.
template <typename MapFn>
Mesh make_polar(int n, MapFn map) {
  if (n < 2) {
    throw std::invalid_argument(
        "polar resolution too coarse: fewer than 8 boundary vertices");
  }
  Mesh mesh;
  std::vector<int> ring_start(n + 1);
  mesh.vertices.push_back(map(0.0, 0.0));
  for (int k = 1; k <= n; ++k) {
    ring_start[k] = mesh.n_vertices();
    const int mk = 6 * k;
    for (int j = 0; j < mk; ++j)
      mesh.vertices.push_back(map(double(k) / n, kTwoPi * j / mk));
  }
  // Center fan.
  for (int j = 0; j < 6; ++j)
    mesh.triangles.push_back({0, 1 + j, 1 + (j + 1) % 6});
  // Zipper between ring k and ring k+1, advancing whichever ring has the
  // smaller next angle (ties advance the outer ring).
  for (int k = 1; k < n; ++k) {
    const int m1 = 6 * k, m2 = 6 * (k + 1);
    const int s1 = ring_start[k], s2 = ring_start[k + 1];
    int i = 0, j = 0;
    while (i < m1 || j < m2) {
      const bool advance_outer =
          j < m2 && (i == m1 || double(j + 1) * m1 <= double(i + 1) * m2);
      if (advance_outer) {
        mesh.triangles.push_back(
            {s1 + i % m1, s2 + j, s2 + (j + 1) % m2});
        ++j;
      } else {
        mesh.triangles.push_back(
            {s1 + i, s2 + j % m2, s1 + (i + 1) % m1});
        ++i;
      }
    }
  }
  compute_areas_and_flags(mesh);
  return mesh;
}

int polar_subdiv(const DomainSpec& spec) {
  if (spec.subdiv > 0) return spec.subdiv;
  if (spec.target_triangles > 0) {
    return std::max(
        2, int(std::lround(std::sqrt(spec.target_triangles / 6.0))));
  }
  throw std::invalid_argument("domain spec needs subdiv or target_triangles");
}

int square_subdiv(const DomainSpec& spec) {
  if (spec.subdiv > 0) return spec.subdiv;
  if (spec.target_triangles > 0) {
    return std::max(
        2, int(std::lround(std::sqrt(spec.target_triangles / 2.0))));
  }
  throw std::invalid_argument("domain spec needs subdiv or target_triangles");
}

}  // namespace

double signed_triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh::total_area() const {
  double s = 0.0;
  for (double a : triangle_area) s += a;
  return s;
}

Vec2 Mesh::centroid(int l) const {
  const auto& t = triangles[l];
  return {(vertices[t[0]].x + vertices[t[1]].x + vertices[t[2]].x) / 3.0,
          (vertices[t[0]].y + vertices[t[1]].y + vertices[t[2]].y) / 3.0};
}

double Mesh::diameter() const {
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& v : vertices) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  return std::hypot(xmax - xmin, ymax - ymin);
}

double Mesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e)
      m = std::max(m, dist(vertices[t[e]], vertices[t[(e + 1) % 3]]));
  return m;
}

double Mesh::mean_edge_length() const {
  double s = 0.0;
  std::size_t count = 0;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e, ++count)
      s += dist(vertices[t[e]], vertices[t[(e + 1) % 3]]);
  return count ? s / double(count) : 0.0;
}

DomainSpec DomainSpec::disk(int subdiv) {
  DomainSpec spec;
  spec.kind = DomainKind::disk;
  spec.subdiv = subdiv;
  return spec;
}
DomainSpec DomainSpec::square(int subdiv) {
  DomainSpec spec;
  spec.kind = DomainKind::square;
  spec.subdiv = subdiv;
  return spec;
}
DomainSpec DomainSpec::ellipse(int subdiv, double a, double b) {
  DomainSpec spec;
  spec.kind = DomainKind::ellipse;
  spec.subdiv = subdiv;
  spec.ellipse_a = a;
  spec.ellipse_b = b;
  return spec;
}
DomainSpec DomainSpec::treffle(int subdiv, double lobes) {
  DomainSpec spec;
  spec.kind = DomainKind::treffle;
  spec.subdiv = subdiv;
  spec.lobes = lobes;
  return spec;
}

Mesh make_mesh(std::vector<Vec2> vertices,
               std::vector<std::array<int, 3>> triangles) {
  Mesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.triangles = std::move(triangles);
  const int nv = mesh.n_vertices();
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      if (t[e] < 0 || t[e] >= nv)
        throw std::invalid_argument("triangle index out of range");
    }
  }
  compute_areas_and_flags(mesh);
  return mesh;
}

Mesh generate(const DomainSpec& spec) {
  switch (spec.kind) {
    case DomainKind::square:
      return make_square(square_subdiv(spec));
    case DomainKind::disk:
      return make_polar(polar_subdiv(spec), [](double rho, double phi) {
        return Vec2{rho * std::cos(phi), rho * std::sin(phi)};
      });
    case DomainKind::ellipse: {
      if (spec.ellipse_a <= 0.0 || spec.ellipse_b <= 0.0)
        throw std::invalid_argument("ellipse semi-axes must be positive");
      const double a = spec.ellipse_a, b = spec.ellipse_b;
      return make_polar(polar_subdiv(spec), [a, b](double rho, double phi) {
        return Vec2{a * rho * std::cos(phi), b * rho * std::sin(phi)};
      });
    }
    case DomainKind::treffle: {
      if (std::abs(spec.lobes) >= 1.0)
        throw std::invalid_argument(
            "treffle lobes coefficient must satisfy |lobes| < 1 "
            "(boundary radius stays positive)");
      const double L = spec.lobes;
      return make_polar(polar_subdiv(spec), [L](double rho, double phi) {
        const double r = rho * (1.0 + L * std::cos(3.0 * phi));
        return Vec2{r * std::cos(phi), r * std::sin(phi)};
      });
    }
    case DomainKind::file:
      return load_mesh(spec.path);
  }
  throw std::invalid_argument("unknown domain kind");
}

std::vector<std::pair<int, int>> boundary_edges(const Mesh& mesh) {
  // Undirected edge -> (count, directed representative in triangle order).
  std::map<std::pair<int, int>, std::pair<int, std::pair<int, int>>> edges;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      auto key = std::minmax(a, b);
      auto& slot = edges[{key.first, key.second}];
      slot.first += 1;
      slot.second = {a, b};
    }
  }
  std::vector<std::pair<int, int>> result;
  for (const auto& [key, slot] : edges) {
    if (slot.first == 1) result.push_back(slot.second);
    if (slot.first > 2) {
      throw std::runtime_error("non-manifold edge " +
                               std::to_string(key.first) + "-" +
                               std::to_string(key.second));
    }
  }
  return result;
}

std::vector<double> distance_to_boundary(const Mesh& mesh) {
  const auto edges = boundary_edges(mesh);
  if (edges.empty()) throw std::runtime_error("mesh has no boundary edges");
  std::vector<double> d(mesh.n_vertices(),
                        std::numeric_limits<double>::max());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (mesh.boundary_vertex[v]) {
      d[v] = 0.0;
      continue;
    }
    for (const auto& [a, b] : edges) {
      d[v] = std::min(d[v], point_segment_distance(mesh.vertices[v],
                                                   mesh.vertices[a],
                                                   mesh.vertices[b]));
    }
  }
  return d;
}

double polygon_area(const Mesh& mesh) {
  double s = 0.0;
  for (const auto& [a, b] : boundary_edges(mesh)) {
    s += mesh.vertices[a].x * mesh.vertices[b].y -
         mesh.vertices[b].x * mesh.vertices[a].y;
  }
  return 0.5 * s;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "mesh2d " << mesh.n_vertices() << ' ' << mesh.n_triangles() << '\n';
  char buf[64];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
    out << buf;
  }
  for (const auto& t : mesh.triangles) {
    out << t[0] << ' ' << t[1] << ' ' << t[2];
    for (int e = 0; e < 3; ++e)
      out << ' ' << int(mesh.boundary_vertex[t[e]]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Mesh load_mesh(const std::string& path, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto fail = [&](int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
  };

  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) fail(1, "empty file");
  ++lineno;
  std::istringstream header(line);
  std::string magic;
  long nv = -1, nt = -1;
  header >> magic >> nv >> nt;
  if (magic != "mesh2d" || header.fail() || nv < 0 || nt < 0)
    fail(lineno, "expected header 'mesh2d <n_v> <n_t>'");

  Mesh mesh;
  mesh.vertices.resize(nv);
  std::vector<std::uint8_t> file_flags(nv, 0);
  std::vector<std::uint8_t> flag_seen(nv, 0);
  for (long i = 0; i < nv; ++i) {
    if (!std::getline(in, line)) fail(lineno + 1, "unexpected end of file");
    ++lineno;
    std::istringstream ls(line);
    if (!(ls >> mesh.vertices[i].x >> mesh.vertices[i].y))
      fail(lineno, "malformed vertex line");
  }

  int reoriented = 0;
  mesh.triangles.resize(nt);
  for (long l = 0; l < nt; ++l) {
    if (!std::getline(in, line)) fail(lineno + 1, "unexpected end of file");
    ++lineno;
    std::istringstream ls(line);
    long idx[3];
    int flags[3];
    if (!(ls >> idx[0] >> idx[1] >> idx[2] >> flags[0] >> flags[1] >>
          flags[2]))
      fail(lineno, "malformed triangle line");
    for (int e = 0; e < 3; ++e) {
      if (idx[e] < 0 || idx[e] >= nv)
        fail(lineno, "vertex index " + std::to_string(idx[e]) +
                         " out of range [0," + std::to_string(nv) + ")");
      if (flags[e] != 0 && flags[e] != 1)
        fail(lineno, "boundary flag must be 0 or 1");
    }
    if (idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2])
      fail(lineno, "repeated vertex index in triangle");
    const double area = signed_triangle_area(mesh.vertices[idx[0]],
                                             mesh.vertices[idx[1]],
                                             mesh.vertices[idx[2]]);
    if (area == 0.0) fail(lineno, "degenerate (zero-area) triangle");
    if (area < 0.0) {
      std::swap(idx[1], idx[2]);
      std::swap(flags[1], flags[2]);
      ++reoriented;
    }
    mesh.triangles[l] = {int(idx[0]), int(idx[1]), int(idx[2])};
    for (int e = 0; e < 3; ++e) {
      if (flag_seen[idx[e]] && file_flags[idx[e]] != flags[e])
        fail(lineno, "inconsistent boundary flag for vertex " +
                         std::to_string(idx[e]));
      flag_seen[idx[e]] = 1;
      file_flags[idx[e]] = std::uint8_t(flags[e]);
    }
  }

  compute_areas_and_flags(mesh);
  for (long v = 0; v < nv; ++v) {
    if (flag_seen[v] && file_flags[v] != mesh.boundary_vertex[v])
      throw std::runtime_error(
          path + ": boundary flag of vertex " + std::to_string(v) +
          " disagrees with mesh topology");
  }
  if (report) report->reoriented = reoriented;
  return mesh;
}

}  // namespace membrane
