// Layer-by-layer build simulation driven by the inherent strain method:
// bottom-up activation with an ersatz inactive domain, eigenstrain loading of
// the newly activated layer, per-layer solves against the substrate fixity,
// and accumulation of the per-layer stress and distortion. Also the cutting
// (springback) analysis, top-surface profiles and the closed-form inherent
// strain identification.
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <utility>
#include <vector>

#include "distopt/fem.hpp"
#include "distopt/mesh.hpp"

namespace distopt {

struct BuildConfig {
  int layers = 1;
  double inactive_ratio = 1e-9;  // stiffness scale of the not-yet-built domain
  EigenstrainTensor inherent_strain;
  BoundarySelector substrate = BoundarySelector::bottom_span(0.0, 0.0);
};

struct BuildResult {
  std::vector<Eigen::VectorXd> layer_displacement;  // u_i, zero outside step-i active nodes
  std::vector<Eigen::Matrix3Xd> layer_stress;       // σ_i, zero outside step-i active elements
  Eigen::VectorXd displacement;                     // Σ u_i
  Eigen::Matrix3Xd stress;                          // Σ σ_i
};

// Optional per-step system cache so adjoint solves can reuse the forward
// factorizations; populated only while the dof count stays small enough.
struct BuildSystems {
  std::vector<std::shared_ptr<LinearSystem>> per_layer;
  bool cached = false;
};

inline constexpr int kFactorCacheDofLimit = 6000;

// Worker count for the mutually independent layer solves: DISTOPT_THREADS
// when set, otherwise hardware concurrency, clamped to [1, cap].
int default_worker_count(int cap);

// nodes kept by step i (any adjacent element active); the rest of u_i is zero
std::vector<std::uint8_t> active_node_mask(const Mesh2D& mesh, int layer);

BuildResult simulate_build(const Mesh2D& mesh, const ElasticityModel& model,
                           const BuildConfig& config, const Eigen::VectorXd& material_scale,
                           BuildSystems* keep_systems = nullptr, int workers = 1);

// Deformation released when the accumulated elastic strain C⁻¹σ relaxes over
// the released region, with the part refixed only at the new fixture.
Eigen::VectorXd springback_cut(const Mesh2D& mesh, const ElasticityModel& model,
                               const BuildResult& build, const BoundarySelector& new_fixture,
                               const std::vector<std::uint8_t>& release_mask,
                               const Eigen::VectorXd* material_scale = nullptr);

// (x, u_y) samples at the top-edge nodes, ordered by x.
std::vector<std::pair<double, double>> top_surface_profile(const Mesh2D& mesh,
                                                           const Eigen::VectorXd& displacement);

struct IdentifyResult {
  double strain_value = 0.0;   // fitted in-plane component (build direction zero)
  double residual_norm = 0.0;  // ‖fit − measured‖₂
};

// Closed-form least squares against the profile simulated at unit reference
// strain (1, 0): ε* = ⟨p_unit, p_meas⟩ / ⟨p_unit, p_unit⟩.
IdentifyResult identify_inherent_strain(const Mesh2D& mesh, const ElasticityModel& model,
                                        const BuildConfig& config_template,
                                        const std::vector<double>& measured_uy);

}  // namespace distopt
