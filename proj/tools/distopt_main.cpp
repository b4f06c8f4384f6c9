// Command-line driver: build-sim | identify | optimize | sweep-gamma.
// Exit codes: 0 success, 2 config error, 3 solver error, 4 I/O error.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>

#include "distopt/build_sim.hpp"
#include "distopt/config.hpp"
#include "distopt/io.hpp"
#include "distopt/level_set.hpp"
#include "distopt/optimizer.hpp"
#include "distopt/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace distopt;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string profile_path;  // identify override
  int snapshot_every = 0;    // 0: final snapshot only
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

RunManifest start_manifest(const AppConfig& cfg, const std::string& command) {
  RunManifest m;
  m.config = config_echo(cfg);
  m.command = command;
  m.run_id = run_id_for(m.config, command);
  m.started_at = iso8601_now();
  m.termination = "completed";
  return m;
}

void finish_manifest(RunManifest& m, const std::string& out_dir) {
  m.finished_at = iso8601_now();
  const std::string path = join_path(out_dir, "manifest.json");
  m.outputs.push_back(path);
  write_manifest(m, path);
}

Eigen::VectorXd node_magnitude(const Mesh2D& mesh, const Eigen::VectorXd& u) {
  Eigen::VectorXd mag(mesh.node_count());
  for (int k = 0; k < mesh.node_count(); ++k)
    mag[k] = std::hypot(u[2 * k], u[2 * k + 1]);
  return mag;
}

void write_build_fields(const Mesh2D& mesh, const Eigen::VectorXd& u,
                        const Eigen::Matrix3Xd& stress, const std::string& path) {
  std::vector<VtkPointField> points;
  points.push_back({"displacement", u, true});
  points.push_back({"displacement_magnitude", node_magnitude(mesh, u), false});
  std::vector<VtkCellField> cells;
  cells.push_back({"sigma_xx", stress.row(0).transpose()});
  cells.push_back({"sigma_yy", stress.row(1).transpose()});
  cells.push_back({"sigma_xy", stress.row(2).transpose()});
  write_vtk(mesh, points, cells, path, "build fields");
}

int cmd_build_sim(const AppConfig& cfg, const Options& opt) {
  const OptConfig& o = cfg.opt;
  const Mesh2D mesh = build_structured_mesh(o.width, o.height, o.nx, o.ny, o.layers);
  const ElasticityModel model = plane_stress_model(o.youngs_modulus, o.poisson_ratio);
  BuildConfig bc{o.layers, o.inactive_ratio, o.inherent_strain, o.bcs.substrate};

  RunManifest manifest = start_manifest(cfg, "build-sim");
  const auto result =
      simulate_build(mesh, model, bc, Eigen::VectorXd::Ones(mesh.element_count()), nullptr,
                     default_worker_count(o.layers));

  const std::string vtk_path = join_path(opt.out_dir, "build_fields.vtk");
  write_build_fields(mesh, result.displacement, result.stress, vtk_path);
  manifest.outputs.push_back(vtk_path);

  const std::string profile_path = join_path(opt.out_dir, "top_profile.csv");
  write_profile_csv(top_surface_profile(mesh, result.displacement), profile_path);
  manifest.outputs.push_back(profile_path);

  finish_manifest(manifest, opt.out_dir);
  std::printf("build-sim: %d layers, max |u| = %g\n", o.layers,
              result.displacement.cwiseAbs().maxCoeff());
  return 0;
}

int cmd_identify(const AppConfig& cfg, const Options& opt) {
  const OptConfig& o = cfg.opt;
  const std::string profile_path =
      !opt.profile_path.empty() ? opt.profile_path : cfg.identify_profile_csv;
  if (profile_path.empty())
    throw ConfigError({"identify: no profile given (set identify.profile_csv or --profile)"});

  const Mesh2D mesh = build_structured_mesh(o.width, o.height, o.nx, o.ny, o.layers);
  const ElasticityModel model = plane_stress_model(o.youngs_modulus, o.poisson_ratio);
  const auto measured = read_profile_csv(profile_path);
  if (static_cast<int>(measured.size()) != mesh.nx + 1)
    throw ConfigError({"identify: profile has " + std::to_string(measured.size()) +
                       " samples, expected one per top node (" + std::to_string(mesh.nx + 1) +
                       ")"});
  std::vector<double> uy(measured.size());
  for (std::size_t k = 0; k < measured.size(); ++k) {
    const double station = static_cast<double>(k) * mesh.dx();
    if (std::abs(measured[k].first - station) > 1e-6 * std::max(1.0, mesh.width))
      throw ConfigError({"identify: profile x stations do not match the mesh top nodes"});
    uy[k] = measured[k].second;
  }

  RunManifest manifest = start_manifest(cfg, "identify");
  BuildConfig bc{o.layers, o.inactive_ratio, o.inherent_strain, o.bcs.substrate};
  const IdentifyResult fit = identify_inherent_strain(mesh, model, bc, uy);

  const std::string out_path = join_path(opt.out_dir, "identified.csv");
  {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open for writing: " + out_path);
    out << "epsilon,residual\n"
        << format_double(fit.strain_value) << "," << format_double(fit.residual_norm) << "\n";
  }
  manifest.outputs.push_back(out_path);
  finish_manifest(manifest, opt.out_dir);
  std::printf("identify: epsilon = %.12g (residual %.3g)\n", fit.strain_value, fit.residual_norm);
  return 0;
}

void write_snapshot(const Mesh2D& mesh, const Eigen::VectorXd& phi, const OptConfig& o,
                    const IterationState& state, const std::string& vtk_path,
                    const std::string& pgm_path) {
  Eigen::VectorXd node_h(mesh.node_count());
  for (int k = 0; k < mesh.node_count(); ++k) node_h[k] = heaviside(phi[k], o.transition_width);
  std::vector<VtkPointField> points;
  points.push_back({"phi", phi, false});
  points.push_back({"heaviside", node_h, false});
  points.push_back({"displacement", *state.build_displacement, true});
  points.push_back({"displacement_magnitude", node_magnitude(mesh, *state.build_displacement), false});
  points.push_back({"equilibrium_displacement", *state.equilibrium, true});
  if (state.sensitivity && state.sensitivity->size() == mesh.node_count())
    points.push_back({"sensitivity", *state.sensitivity, false});
  std::vector<VtkCellField> cells;
  cells.push_back({"sigma_xx", state.stress->row(0).transpose()});
  cells.push_back({"sigma_yy", state.stress->row(1).transpose()});
  cells.push_back({"sigma_xy", state.stress->row(2).transpose()});
  write_vtk(mesh, points, cells, vtk_path, "optimization snapshot");
  write_pgm(mesh, element_heaviside(mesh, phi, o.transition_width), pgm_path);
}

int cmd_optimize(const AppConfig& cfg, const Options& opt) {
  RunManifest manifest = start_manifest(cfg, "optimize");
  std::vector<std::string> snapshot_files;

  IterationCallback callback;
  if (opt.snapshot_every > 0) {
    callback = [&](int iter, const IterationState& state) {
      if (iter % opt.snapshot_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof(name), "fields_%06d.vtk", iter);
      const std::string vtk_path = join_path(opt.out_dir, name);
      std::snprintf(name, sizeof(name), "density_%06d.pgm", iter);
      const std::string pgm_path = join_path(opt.out_dir, name);
      write_snapshot(*state.mesh, *state.phi, cfg.opt, state, vtk_path, pgm_path);
      snapshot_files.push_back(vtk_path);
      snapshot_files.push_back(pgm_path);
    };
  }

  const OptResult result = run_optimization(cfg.opt, callback);
  manifest.termination = result.termination;
  manifest.outputs = snapshot_files;

  const std::string history_path = join_path(opt.out_dir, "history.csv");
  write_history_csv(result.history, history_path);
  manifest.outputs.push_back(history_path);

  IterationState final_state;
  final_state.mesh = &result.mesh;
  final_state.phi = &result.phi;
  final_state.build_displacement = &result.build_displacement;
  final_state.stress = &result.stress;
  final_state.equilibrium = &result.equilibrium;
  const std::string vtk_path = join_path(opt.out_dir, "fields_final.vtk");
  const std::string pgm_path = join_path(opt.out_dir, "density_final.pgm");
  write_snapshot(result.mesh, result.phi, cfg.opt, final_state, vtk_path, pgm_path);
  manifest.outputs.push_back(vtk_path);
  manifest.outputs.push_back(pgm_path);

  finish_manifest(manifest, opt.out_dir);
  const auto& last = result.history.back();
  std::printf("optimize: %s after %d iterations, F = %g (F_MC %g, F_AM %g, volume %.4f)\n",
              result.termination.c_str(), last.iter, last.combined, last.compliance,
              last.distortion, last.volume);
  return 0;
}

int cmd_sweep_gamma(const AppConfig& cfg, const Options& opt) {
  RunManifest manifest = start_manifest(cfg, "sweep-gamma");
  std::string summary = "gamma,F_MC,F_AM\n";

  for (const double gamma : cfg.sweep_gammas) {
    char tag[32];
    std::snprintf(tag, sizeof(tag), "gamma_%g", gamma);
    const std::string run_dir = join_path(opt.out_dir, tag);
    fs::create_directories(run_dir);

    AppConfig run_cfg = cfg;
    run_cfg.opt.gamma = gamma;
    Options run_opt = opt;
    run_opt.out_dir = run_dir;
    cmd_optimize(run_cfg, run_opt);

    // converged values from the run's history
    std::ifstream hist(join_path(run_dir, "history.csv"));
    std::string line, last;
    std::getline(hist, line);  // header
    while (std::getline(hist, line))
      if (!line.empty()) last = line;
    // columns: iter,F,F_MC,F_AM,...
    std::size_t p1 = last.find(','), p2 = last.find(',', p1 + 1), p3 = last.find(',', p2 + 1),
                p4 = last.find(',', p3 + 1);
    summary += format_double(gamma) + "," + last.substr(p2 + 1, p3 - p2 - 1) + "," +
               last.substr(p3 + 1, p4 - p3 - 1) + "\n";
    manifest.outputs.push_back(join_path(run_dir, "history.csv"));
  }

  const std::string summary_path = join_path(opt.out_dir, "summary.csv");
  {
    std::ofstream out(summary_path);
    if (!out) throw IoError("cannot open for writing: " + summary_path);
    out << summary;
  }
  manifest.outputs.push_back(summary_path);
  finish_manifest(manifest, opt.out_dir);
  std::printf("sweep-gamma: %zu runs\n%s", cfg.sweep_gammas.size(), summary.c_str());
  return 0;
}

void report_error(const std::string& kind, const std::string& message, int code,
                  const std::string& out_dir) {
  nlohmann::json rec{{"error", message}, {"kind", kind}, {"exit_code", code}};
  std::cerr << rec.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream out(join_path(out_dir, "error.json"));
    if (out) out << rec.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D level-set topology optimization with build-distortion control"};
  app.require_subcommand(1);

  Options opt;
  std::string command;
  const std::map<std::string, std::string> about = {
      {"build-sim", "simulate the layer-by-layer build of the full domain"},
      {"identify", "fit the inherent strain to a measured top-surface profile"},
      {"optimize", "run the level-set optimization"},
      {"sweep-gamma", "run the optimization for each sweep gamma"}};
  for (const auto& name : {"build-sim", "identify", "optimize", "sweep-gamma"}) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", opt.config_path, "JSON configuration file")->required();
    sub->add_option("--out", opt.out_dir, "output directory")->required();
    if (std::string(name) == "optimize" || std::string(name) == "sweep-gamma")
      sub->add_option("--snapshot-every", opt.snapshot_every, "snapshot interval (iterations)");
    if (std::string(name) == "identify")
      sub->add_option("--profile", opt.profile_path, "measured profile CSV (x,u_y)");
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const AppConfig cfg = load_config(opt.config_path);
    fs::create_directories(opt.out_dir);
    if (command == "build-sim") return cmd_build_sim(cfg, opt);
    if (command == "identify") return cmd_identify(cfg, opt);
    if (command == "optimize") return cmd_optimize(cfg, opt);
    return cmd_sweep_gamma(cfg, opt);
  } catch (const ConfigError& e) {
    report_error("config", e.what(), 2, opt.out_dir);
    return 2;
  } catch (const SolverError& e) {
    report_error("solver", e.what(), 3, opt.out_dir);
    return 3;
  } catch (const IoError& e) {
    report_error("io", e.what(), 4, opt.out_dir);
    return 4;
  } catch (const fs::filesystem_error& e) {
    report_error("io", e.what(), 4, opt.out_dir);
    return 4;
  } catch (const std::exception& e) {
    report_error("solver", e.what(), 3, opt.out_dir);
    return 3;
  }
}
