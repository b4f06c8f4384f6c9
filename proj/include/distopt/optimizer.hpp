// The outer optimization loop: equilibrium solve with the ersatz tensor,
// layer-by-layer build simulation, objectives, adjoint-based topological
// derivatives, normalized combination, and the volume-controlled
// reaction-diffusion update of the level-set field.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "distopt/build_sim.hpp"
#include "distopt/fem.hpp"
#include "distopt/level_set.hpp"
#include "distopt/mesh.hpp"
#include "distopt/sensitivity.hpp"

namespace distopt {

struct ProblemBcs {
  std::vector<BoundarySelector> structural_supports;  // Γ_v, both components fixed
  BoundarySelector traction_region = BoundarySelector::right_edge();  // Γ_t
  Eigen::Vector2d traction = Eigen::Vector2d::Zero();
  BoundarySelector substrate = BoundarySelector::bottom_span(0.0, 0.0);  // Γ_u
};

struct OptConfig {
  double width = 100.0, height = 50.0;
  int nx = 100, ny = 50;

  double youngs_modulus = 75000.0;  // MPa
  double poisson_ratio = 0.34;

  int layers = 50;
  double inactive_ratio = 1e-9;
  EigenstrainTensor inherent_strain{-0.25, 0.0};

  double transition_width = 0.5;  // w
  double void_ratio = 1e-3;       // d
  RdeParams rde;                  // tau, gain K, dt

  double gamma = 0.1;
  double beta = 5.0;
  double volume_max = 0.5;
  int max_iterations = 300;
  int convergence_window = 10;
  double convergence_tol = 1e-3;

  ProblemBcs bcs;
};

struct HistoryRecord {
  int iter = 0;  // 1-based
  double combined = 0.0;
  double compliance = 0.0;
  double distortion = 0.0;
  double volume = 0.0;
  double lambda = 0.0;
  long long wall_ms = 0;
};

struct OptStats {
  long equilibrium_solves = 0;
  long layer_solves = 0;
  long adjoint_solves = 0;
  long volume_evaluations = 0;
};

struct IterationState {
  const Mesh2D* mesh = nullptr;
  const Eigen::VectorXd* phi = nullptr;
  const Eigen::VectorXd* build_displacement = nullptr;
  const Eigen::Matrix3Xd* stress = nullptr;
  const Eigen::VectorXd* equilibrium = nullptr;
  const Eigen::VectorXd* sensitivity = nullptr;  // null on the stopping iteration
};

using IterationCallback = std::function<void(int iter, const IterationState&)>;

struct OptResult {
  Mesh2D mesh;
  Eigen::VectorXd phi;
  std::vector<HistoryRecord> history;
  std::string termination;  // "converged" or "max_iterations"
  OptStats stats;
  Eigen::VectorXd build_displacement;
  Eigen::Matrix3Xd stress;
  Eigen::VectorXd equilibrium;
};

// iterations >= 30, relative spread of F over the trailing window <= tol,
// and volume within 0.5% of the allowed maximum
bool converged(const std::vector<HistoryRecord>& history, int window, double tol,
               double volume_max);

// static equilibrium with stiffness scaled by the ersatz projection of phi
Eigen::VectorXd solve_equilibrium(const Mesh2D& mesh, const ElasticityModel& model,
                                  const Eigen::VectorXd& element_scale, const ProblemBcs& bcs);

OptResult run_optimization(const OptConfig& config, const IterationCallback& callback = {});

}  // namespace distopt
