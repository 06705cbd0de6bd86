#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "membrane/analysis.hpp"
#include "membrane/fem.hpp"
#include "membrane/io.hpp"
#include "membrane/mesh.hpp"
#include "membrane/oracle.hpp"
#include "membrane/solver_minimax.hpp"
#include "membrane/solver_p.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace membrane;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct MeshArgs {
  std::string domain = "disk";
  int subdiv = 0;
  int target_triangles = 0;
  double ellipse_a = 1.5;
  double ellipse_b = 1.0;
  double lobes = 0.3;
  std::string out = "mesh.m2d";
};

struct SolveArgs {
  std::string mesh_path;
  std::string f_spec = "1";
  double m = 0.0;
  std::string method = "constrained";
  std::string out_dir = ".";
  bool vtk = false;
  double grad_tol = 1e-8;
  double gap_tol = 1e-6;
  double q_max = 64.0;
  int max_outer = 0;  // 0 = solver default
};

struct DiagnoseArgs {
  std::string run_dir = ".";
  std::string summary = "";
  std::string mesh_override = "";
};

DomainSpec to_spec(const MeshArgs& args) {
  DomainSpec spec;
  if (args.domain == "disk")
    spec.kind = DomainKind::disk;
  else if (args.domain == "square")
    spec.kind = DomainKind::square;
  else if (args.domain == "ellipse")
    spec.kind = DomainKind::ellipse;
  else if (args.domain == "treffle")
    spec.kind = DomainKind::treffle;
  else
    throw std::invalid_argument("unknown domain '" + args.domain + "'");
  spec.subdiv = args.subdiv;
  spec.target_triangles = args.target_triangles;
  spec.ellipse_a = args.ellipse_a;
  spec.ellipse_b = args.ellipse_b;
  spec.lobes = args.lobes;
  return spec;
}

int cmd_mesh(const MeshArgs& args) {
  Mesh mesh = generate(to_spec(args));
  save_mesh(mesh, args.out);
  std::cout << "vertices " << mesh.n_vertices() << "\ntriangles "
            << mesh.n_triangles() << "\narea " << mesh.total_area()
            << "\nwrote " << args.out << "\n";
  return 0;
}

struct SolverOutput {
  std::string name;
  Vector lambda;
  Vector theta;
  bool converged = false;
  json extra;
};

json summary_json(const Mesh& mesh, const FemSystem& sys,
                  const SolveArgs& args, const SolverOutput& out,
                  double wall_time_s) {
  const Vector g = element_gradient_squared(sys, out.lambda);
  const double kappa_hat =
      std::sqrt(std::max(sys.n_t > 0 ? g.maxCoeff() : 0.0, 0.0));
  const EnergyReport energies =
      energy_report(sys, out.lambda, out.theta, args.m);
  json j = out.extra;
  j["solver"] = out.name;
  j["mesh"] = args.mesh_path;
  j["f"] = args.f_spec;
  j["m"] = args.m;
  j["n_vertices"] = mesh.n_vertices();
  j["n_triangles"] = mesh.n_triangles();
  j["energy_Ef"] = energies.E_f;
  j["energy_J"] = energies.J_value;
  j["energy_F1"] = energies.F1_value;
  j["kappa_hat"] = kappa_hat;
  j["theta_mass"] = sys.areas.dot(out.theta);
  j["converged"] = out.converged;
  j["unconstrained"] = args.m == 0.0;
  j["wall_time_s"] = wall_time_s;
  return j;
}

int cmd_solve(const SolveArgs& args) {
  Mesh mesh = load_mesh(args.mesh_path);
  const Vector f_vertices = sample_field(parse_field_spec(args.f_spec), mesh);
  FemSystem sys = assemble(mesh, f_vertices);
  fs::create_directories(args.out_dir);
  const bool both = args.method == "both";
  if (!both && args.method != "p" && args.method != "constrained")
    throw std::invalid_argument("method must be p, constrained, or both");

  bool all_converged = true;
  std::vector<std::string> methods;
  if (both || args.method == "p") methods.push_back("p");
  if (both || args.method == "constrained") methods.push_back("constrained");

  for (const std::string& method : methods) {
    const auto start = std::chrono::steady_clock::now();
    SolverOutput out;
    out.name = method;
    if (method == "p") {
      PConfig config;
      config.grad_tol = args.grad_tol;
      while (config.q_schedule.size() > 1 &&
             config.q_schedule.back() > args.q_max)
        config.q_schedule.pop_back();
      auto stages = continuation(sys, args.m, config);
      const PSolution& final = stages.back();
      out.lambda = final.lambda;
      out.theta = final.theta;
      out.converged = final.report.converged;
      out.extra["q_final"] = final.q;
      out.extra["stages"] = stages.size();
      out.extra["iterations"] = final.report.iterations;
      out.extra["grad_norm"] = final.report.grad_norm;
      out.extra["objective"] = final.objective;
      out.extra["grad_norm_2q"] = final.grad_norm_2q;
    } else {
      MinimaxConfig config;
      config.gap_tol_rel = args.gap_tol;
      if (args.max_outer > 0) config.max_outer = args.max_outer;
      ConstrainedSolution sol = solve_constrained(sys, args.m, config);
      out.lambda = sol.lambda;
      out.theta = sol.theta;
      out.converged = sol.report.converged;
      out.extra["iterations"] = sol.report.iterations;
      out.extra["duality_gap"] = sol.duality_gap;
      out.extra["objective"] = sol.objective;
      out.extra["t"] = sol.t;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();

    const std::string suffix = both ? "_" + method : "";
    const fs::path dir(args.out_dir);
    const Vector u_full = sys.zero_extend(out.lambda);
    write_u_csv((dir / ("u" + suffix + ".csv")).string(), mesh, u_full);
    write_theta_csv((dir / ("theta" + suffix + ".csv")).string(), mesh,
                    out.theta);
    if (args.vtk) {
      const Vector g = element_gradient_squared(sys, out.lambda);
      write_vtk((dir / ("solution" + suffix + ".vtk")).string(), mesh,
                u_full, out.theta, g.cwiseSqrt());
    }
    const json summary = summary_json(mesh, sys, args, out, wall);
    std::ofstream summary_file(dir / ("summary" + suffix + ".json"));
    summary_file << summary.dump(2) << '\n';
    std::cout << "[" << method << "] converged=" << out.converged
              << " E_f=" << summary["energy_Ef"].get<double>() << "\n";
    all_converged = all_converged && out.converged;
  }
  return all_converged ? 0 : kExitNumerical;
}

int cmd_diagnose(const DiagnoseArgs& args) {
  const fs::path dir(args.run_dir);
  fs::path summary_path =
      args.summary.empty() ? dir / "summary.json" : fs::path(args.summary);
  std::ifstream in(summary_path);
  if (!in)
    throw std::runtime_error("cannot open summary " + summary_path.string());
  json summary = json::parse(in);

  const std::string mesh_path = args.mesh_override.empty()
                                    ? summary.at("mesh").get<std::string>()
                                    : args.mesh_override;
  const double m = summary.at("m").get<double>();
  const std::string f_spec = summary.at("f").get<std::string>();
  Mesh mesh = load_mesh(mesh_path);
  const Vector f_vertices = sample_field(parse_field_spec(f_spec), mesh);
  FemSystem sys = assemble(mesh, f_vertices);

  const std::string suffix = [&] {
    const std::string name = summary_path.filename().string();
    if (name.size() > std::string("summary.json").size())
      return name.substr(7, name.size() - 7 - 5);  // "summary<sfx>.json"
    return std::string();
  }();
  const Vector u_full = read_u_csv((dir / ("u" + suffix + ".csv")).string(),
                                   mesh.n_vertices());
  const Vector theta = read_theta_csv(
      (dir / ("theta" + suffix + ".csv")).string(), mesh.n_triangles());
  const Vector lambda = sys.restrict_interior(u_full);

  const Vector g = element_gradient_squared(sys, lambda);
  FreeBoundaryReport fb = free_boundary_from_g(mesh, g, 0.05);
  write_freeboundary_csv((dir / ("freeboundary" + suffix + ".csv")).string(),
                         mesh, fb.polylines);

  const auto dist = distance_to_boundary(mesh);
  const double kappa_hat = fb.kappa_hat;
  const EnergyReport energies = energy_report(sys, lambda, theta, m);

  json checks;
  checks["kappa_hat"] = kappa_hat;
  checks["theta_mass"] = sys.areas.dot(theta);
  int plastic_count = 0;
  for (auto flag : fb.plastic) plastic_count += flag;
  checks["plastic_triangles"] = plastic_count;
  checks["elastic_triangles"] = mesh.n_triangles() - plastic_count;
  checks["plastic_area_fraction"] = fb.plastic_area_fraction;
  checks["polylines"] = fb.polylines.size();
  checks["minmax_residual_rel"] =
      energies.E_f != 0.0
          ? std::abs(energies.F1_value - energies.E_f) /
                std::abs(energies.E_f)
          : 0.0;
  double off_max_mass = 0.0;
  const double threshold = 0.81 * kappa_hat * kappa_hat;
  for (int l = 0; l < sys.n_t; ++l)
    if (g[l] < threshold) off_max_mass += sys.areas[l] * theta[l];
  checks["optimality_offmax_mass_fraction"] =
      m > 0.0 ? off_max_mass / m : 0.0;

  // The obstacle comparison applies to constant loads, where the solution
  // scales linearly with f.
  const bool f_constant = [&] {
    const double f0 = f_vertices[0];
    return (f_vertices.array() == f0).all();
  }();
  if (f_constant) {
    checks["obstacle_violation"] = obstacle_check(sys, lambda, dist);
    checks["obstacle_bound"] = 1e-3 * kappa_hat * mesh.diameter();
  }

  // Oracle comparison on the unit disk with constant f.
  bool is_unit_disk = true;
  for (int v = 0; v < mesh.n_vertices() && is_unit_disk; ++v) {
    if (!mesh.boundary_vertex[v]) continue;
    const double r = std::hypot(mesh.vertices[v].x, mesh.vertices[v].y);
    if (std::abs(r - 1.0) > 1e-8) is_unit_disk = false;
  }
  if (f_constant && is_unit_disk && f_vertices[0] != 0.0) {
    RadialSolution oracle = radial_solution(2, m);
    const double c = f_vertices[0];
    Vector err(mesh.n_vertices());
    Vector exact(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      const double r =
          std::min(1.0, std::hypot(mesh.vertices[v].x, mesh.vertices[v].y));
      exact[v] = c * oracle.u(r);
      err[v] = u_full[v] - exact[v];
    }
    checks["oracle"] = {
        {"a_m", oracle.a},
        {"kappa", oracle.kappa},
        {"rel_l2_u", std::sqrt(err.dot(sys.mass_full * err)) /
                         std::sqrt(exact.dot(sys.mass_full * exact))},
        {"kappa_hat_rel_err",
         std::abs(kappa_hat - std::abs(c) * oracle.kappa) /
             (std::abs(c) * oracle.kappa)},
    };
    // Free-boundary radius estimate: mean centroid radius of plastic
    // triangles touching the elastic region.
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
    double radius_sum = 0.0;
    int count = 0;
    for (const auto& [edge, tris] : edge_tris) {
      if (tris.second < 0) continue;
      if (fb.plastic[tris.first] == fb.plastic[tris.second]) continue;
      const int pl = fb.plastic[tris.first] ? tris.first : tris.second;
      const Vec2 c2 = mesh.centroid(pl);
      radius_sum += std::hypot(c2.x, c2.y);
      ++count;
    }
    if (count > 0) checks["oracle"]["a_m_estimate"] = radius_sum / count;
  }

  std::ofstream out(dir / ("checks" + suffix + ".json"));
  out << checks.dump(2) << '\n';
  std::cout << "wrote " << (dir / ("checks" + suffix + ".json")).string()
            << " and freeboundary" << suffix << ".csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("MEMBRANE_OPT_THREADS")) {
    const int threads = std::atoi(env);
    if (threads > 0) Eigen::setNbThreads(threads);
  }

  CLI::App app{"Optimal membrane reinforcement: mesh, solve, diagnose"};
  app.require_subcommand(1);

  MeshArgs mesh_args;
  auto* mesh_cmd = app.add_subcommand("mesh", "generate a domain mesh");
  mesh_cmd->add_option("--domain", mesh_args.domain,
                       "disk|square|ellipse|treffle");
  mesh_cmd->add_option("--subdiv", mesh_args.subdiv,
                       "rings (polar) or cells per side (square)");
  mesh_cmd->add_option("--target-triangles", mesh_args.target_triangles,
                       "approximate triangle count");
  mesh_cmd->add_option("--ellipse-a", mesh_args.ellipse_a, "semi-axis a");
  mesh_cmd->add_option("--ellipse-b", mesh_args.ellipse_b, "semi-axis b");
  mesh_cmd->add_option("--lobes", mesh_args.lobes,
                       "treffle lobe coefficient, |lobes| < 1");
  mesh_cmd->add_option("--out", mesh_args.out, "output mesh file");

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "solve a reinforcement run");
  solve_cmd->add_option("--mesh", solve_args.mesh_path, "mesh file")
      ->required();
  solve_cmd->add_option("--f", solve_args.f_spec,
                        "load: a number, one, linear, or bump");
  solve_cmd->add_option("--m", solve_args.m, "reinforcement mass")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--method", solve_args.method,
                        "p|constrained|both");
  solve_cmd->add_option("--out", solve_args.out_dir, "output directory");
  solve_cmd->add_flag("--vtk", solve_args.vtk, "write legacy ASCII VTK");
  solve_cmd->add_option("--grad-tol", solve_args.grad_tol,
                        "p-solver gradient tolerance");
  solve_cmd->add_option("--gap-tol", solve_args.gap_tol,
                        "interior-point duality gap tolerance");
  solve_cmd->add_option("--q-max", solve_args.q_max,
                        "cap for the dual exponent schedule");
  solve_cmd->add_option("--max-outer", solve_args.max_outer,
                        "cap on interior-point path stages (0 = default)");

  DiagnoseArgs diag_args;
  auto* diag_cmd =
      app.add_subcommand("diagnose", "free boundary and theory checks");
  diag_cmd->add_option("--run", diag_args.run_dir, "solve output directory");
  diag_cmd->add_option("--summary", diag_args.summary,
                       "summary file (default <run>/summary.json)");
  diag_cmd->add_option("--mesh", diag_args.mesh_override,
                       "override mesh path from the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (mesh_cmd->parsed()) return cmd_mesh(mesh_args);
    if (solve_cmd->parsed()) return cmd_solve(solve_args);
    if (diag_cmd->parsed()) return cmd_diagnose(diag_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
