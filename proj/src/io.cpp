#include "membrane/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace membrane {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ScalarField parse_field_spec(const std::string& spec) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(spec, &consumed);
    if (consumed == spec.size())
      return [value](double, double) { return value; };
  } catch (const std::exception&) {
    // not a number, try the named fields
  }
  if (spec == "one") return [](double, double) { return 1.0; };
  if (spec == "linear") return [](double x, double) { return 2.0 + x; };
  if (spec == "bump") {
    return [](double x, double y) {
      return std::exp(-4.0 * (x * x + y * y));
    };
  }
  throw std::invalid_argument("unknown field spec '" + spec +
                              "' (expected a number, one, linear, or bump)");
}

Vector sample_field(const ScalarField& f, const Mesh& mesh) {
  Vector values(mesh.n_vertices());
  for (int v = 0; v < mesh.n_vertices(); ++v)
    values[v] = f(mesh.vertices[v].x, mesh.vertices[v].y);
  return values;
}

void write_u_csv(const std::string& path, const Mesh& mesh,
                 const Vector& u_full) {
  if (u_full.size() != mesh.n_vertices())
    throw std::invalid_argument("u must be a per-vertex field");
  auto out = open_out(path);
  out << "id,x,y,u\n";
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    out << v << ',' << fmt(mesh.vertices[v].x) << ','
        << fmt(mesh.vertices[v].y) << ',' << fmt(u_full[v]) << '\n';
  }
}

void write_theta_csv(const std::string& path, const Mesh& mesh,
                     const Vector& theta) {
  if (theta.size() != mesh.n_triangles())
    throw std::invalid_argument("theta must be a per-triangle field");
  auto out = open_out(path);
  out << "id,cx,cy,theta\n";
  for (int l = 0; l < mesh.n_triangles(); ++l) {
    const Vec2 c = mesh.centroid(l);
    out << l << ',' << fmt(c.x) << ',' << fmt(c.y) << ',' << fmt(theta[l])
        << '\n';
  }
}

namespace {

Vector read_last_column_csv(const std::string& path, int expected,
                            const std::string& what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": missing header");
  Vector values(expected);
  for (int i = 0; i < expected; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": expected " +
                               std::to_string(expected) + " " + what +
                               " rows");
    const auto pos = line.rfind(',');
    if (pos == std::string::npos)
      throw std::runtime_error(path + ": malformed row " + line);
    values[i] = std::stod(line.substr(pos + 1));
  }
  return values;
}

}  // namespace

Vector read_u_csv(const std::string& path, int n_vertices) {
  return read_last_column_csv(path, n_vertices, "vertex");
}

Vector read_theta_csv(const std::string& path, int n_triangles) {
  return read_last_column_csv(path, n_triangles, "triangle");
}

void write_freeboundary_csv(const std::string& path, const Mesh& mesh,
                            const std::vector<std::vector<int>>& polylines) {
  auto out = open_out(path);
  out << "polyline,idx,x,y\n";
  for (std::size_t c = 0; c < polylines.size(); ++c) {
    for (std::size_t i = 0; i < polylines[c].size(); ++i) {
      const Vec2& v = mesh.vertices[polylines[c][i]];
      out << c << ',' << i << ',' << fmt(v.x) << ',' << fmt(v.y) << '\n';
    }
  }
}

void write_vtk(const std::string& path, const Mesh& mesh,
               const Vector& u_full, const Vector& theta,
               const Vector& grad_norm) {
  if (u_full.size() != mesh.n_vertices() ||
      theta.size() != mesh.n_triangles() ||
      grad_norm.size() != mesh.n_triangles())
    throw std::invalid_argument("field sizes do not match the mesh");
  auto out = open_out(path);
  out << "# vtk DataFile Version 2.0\n";
  out << "membrane reinforcement solution\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_vertices() << " double\n";
  for (const auto& v : mesh.vertices)
    out << fmt(v.x) << ' ' << fmt(v.y) << " 0\n";
  out << "CELLS " << mesh.n_triangles() << ' ' << 4 * mesh.n_triangles()
      << '\n';
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.n_triangles() << '\n';
  for (int l = 0; l < mesh.n_triangles(); ++l) out << "5\n";
  out << "POINT_DATA " << mesh.n_vertices() << '\n';
  out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < mesh.n_vertices(); ++v) out << fmt(u_full[v]) << '\n';
  out << "CELL_DATA " << mesh.n_triangles() << '\n';
  out << "SCALARS theta double 1\nLOOKUP_TABLE default\n";
  for (int l = 0; l < mesh.n_triangles(); ++l) out << fmt(theta[l]) << '\n';
  out << "SCALARS grad_norm double 1\nLOOKUP_TABLE default\n";
  for (int l = 0; l < mesh.n_triangles(); ++l)
    out << fmt(grad_norm[l]) << '\n';
}

}  // namespace membrane
