#include "distopt/optimizer.hpp"

#include <chrono>
#include <cmath>

namespace distopt {

bool converged(const std::vector<HistoryRecord>& history, int window, double tol,
               double volume_max) {
  if (window < 2) throw std::invalid_argument("converged: window must be at least 2");
  const int n = static_cast<int>(history.size());
  if (n < 30 || n < window) return false;
  double lo = history[n - 1].combined, hi = lo;
  for (int k = n - window; k < n; ++k) {
    lo = std::min(lo, history[k].combined);
    hi = std::max(hi, history[k].combined);
  }
  const double ref = std::abs(history[n - 1].combined);
  if (ref > 0.0 && (hi - lo) / ref > tol) return false;
  if (ref == 0.0 && hi - lo > tol) return false;
  return std::abs(history[n - 1].volume - volume_max) <= 0.005 * volume_max;
}

namespace {

std::vector<std::uint8_t> structural_fixed_mask(const Mesh2D& mesh, const ProblemBcs& bcs) {
  if (bcs.structural_supports.empty())
    throw std::invalid_argument("equilibrium: no structural supports configured");
  std::vector<int> dofs;
  for (const auto& sel : bcs.structural_supports) {
    const auto nodes = select_boundary_nodes(mesh, sel);
    const auto nd = dirichlet_dofs(nodes);
    dofs.insert(dofs.end(), nd.begin(), nd.end());
  }
  return fixed_dof_mask(mesh, dofs);
}

}  // namespace

Eigen::VectorXd solve_equilibrium(const Mesh2D& mesh, const ElasticityModel& model,
                                  const Eigen::VectorXd& element_scale, const ProblemBcs& bcs) {
  const auto fixed = structural_fixed_mask(mesh, bcs);
  LinearSystem system(assemble_constrained_stiffness(mesh, element_scale, model, fixed), fixed);
  TractionBC bc{select_boundary_edges(mesh, bcs.traction_region), bcs.traction};
  return system.solve(traction_load(mesh, bc));
}

OptResult run_optimization(const OptConfig& config, const IterationCallback& callback) {
  const Mesh2D mesh =
      build_structured_mesh(config.width, config.height, config.nx, config.ny, config.layers);
  const ElasticityModel model = plane_stress_model(config.youngs_modulus, config.poisson_ratio);
  if (config.gamma < 0.0 || config.gamma > 1.0)
    throw std::invalid_argument("optimizer: gamma must lie in [0,1]");
  if (!(config.volume_max > 0.0) || config.volume_max > 1.0)
    throw std::invalid_argument("optimizer: volume_max must lie in (0,1]");
  if (config.max_iterations < 1)
    throw std::invalid_argument("optimizer: max_iterations must be at least 1");

  BuildConfig build_cfg;
  build_cfg.layers = config.layers;
  build_cfg.inactive_ratio = config.inactive_ratio;
  build_cfg.inherent_strain = config.inherent_strain;
  build_cfg.substrate = config.bcs.substrate;

  const auto fixed_v = structural_fixed_mask(mesh, config.bcs);
  const TractionBC traction_bc{select_boundary_edges(mesh, config.bcs.traction_region),
                               config.bcs.traction};
  const Eigen::VectorXd f_t = traction_load(mesh, traction_bc);

  const RdeSolver rde(mesh, config.rde, config.transition_width);
  const int workers = default_worker_count(config.layers);

  OptResult result;
  result.mesh = mesh;
  result.phi = Eigen::VectorXd::Ones(mesh.node_count());  // full-material start
  double volume_prev = volume_fraction(mesh, result.phi, config.transition_width);
  result.termination = "max_iterations";

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Eigen::VectorXd scale =
          element_ersatz(mesh, result.phi, config.transition_width, config.void_ratio);
      const Eigen::VectorXd hw =
          element_heaviside(mesh, result.phi, config.transition_width);

      LinearSystem eq_system(assemble_constrained_stiffness(mesh, scale, model, fixed_v), fixed_v);
      const Eigen::VectorXd v = eq_system.solve(f_t);
      ++result.stats.equilibrium_solves;

      BuildSystems systems;
      const BuildResult build = simulate_build(mesh, model, build_cfg, scale, &systems, workers);
      result.stats.layer_solves += config.layers;

      HistoryRecord rec;
      rec.iter = iter;
      rec.compliance = compliance_value(f_t, v);
      rec.distortion = distortion_objective(mesh, build.displacement, config.beta, hw);
      rec.combined = (1.0 - config.gamma) * rec.compliance + config.gamma * rec.distortion;
      rec.volume = volume_fraction(mesh, result.phi, config.transition_width);
      if (!std::isfinite(rec.combined))
        throw std::runtime_error("objective became non-finite");
      result.history.push_back(rec);

      result.build_displacement = build.displacement;
      result.stress = build.stress;
      result.equilibrium = v;

      const bool stop =
          converged(result.history, config.convergence_window, config.convergence_tol,
                    config.volume_max);

      Eigen::VectorXd combined_sensitivity;
      if (!stop) {
        const Eigen::VectorXd td_mc = td_compliance(mesh, model, v);
        Eigen::VectorXd td_am = Eigen::VectorXd::Zero(mesh.node_count());
        if (config.gamma > 0.0) {
          const Eigen::VectorXd g = distortion_adjoint_load(
              mesh, build.displacement, config.beta, rec.distortion, hw);
          const auto adjoints =
              solve_adjoints(mesh, model, build_cfg, scale, g, &systems, workers);
          result.stats.adjoint_solves += config.layers;
          td_am = td_distortion(mesh, model, build_cfg, build.layer_displacement, adjoints);
        }
        combined_sensitivity = normalize_combine(mesh, td_mc, td_am, config.gamma);
      }

      if (callback) {
        IterationState state;
        state.mesh = &mesh;
        state.phi = &result.phi;
        state.build_displacement = &build.displacement;
        state.stress = &build.stress;
        state.equilibrium = &v;
        state.sensitivity = stop ? nullptr : &combined_sensitivity;
        callback(iter, state);
      }

      if (stop) {
        result.termination = "converged";
        result.history.back().wall_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
        return result;
      }

      const double v_target = std::max(config.volume_max, volume_prev * 0.97);
      auto [phi_next, lambda] = rde.volume_controlled_step(
          result.phi, combined_sensitivity, v_target, &result.stats.volume_evaluations);
      result.phi = std::move(phi_next);
      volume_prev = volume_fraction(mesh, result.phi, config.transition_width);
      result.history.back().lambda = lambda;
      result.history.back().wall_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(
              std::chrono::steady_clock::now() - t0)
              .count();
    } catch (const SolverError& err) {
      throw SolverError(err.kind,
                        "iteration " + std::to_string(iter) + ": " + err.what(), err.layer);
    } catch (const std::runtime_error& err) {
      throw std::runtime_error("iteration " + std::to_string(iter) + ": " + err.what());
    }
  }
  return result;
}

}  // namespace distopt
