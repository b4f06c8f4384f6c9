// Objectives, adjoint solves, topological derivatives and their normalized
// combination. The distortion objective is a p-norm of the accumulated build
// distortion sampled at element centroids; the adjoint load is assembled with
// the same centroid rule, so the discrete adjoint is the exact gradient of
// the implemented objective (finite-difference consistency holds to solver
// precision).
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "distopt/build_sim.hpp"
#include "distopt/fem.hpp"
#include "distopt/mesh.hpp"

namespace distopt {

inline constexpr double kDistortionLengthReg = 1e-12;  // squared-length regularizer

// external work of the applied traction, load · displacement
double compliance_value(const Eigen::VectorXd& load, const Eigen::VectorXd& displacement);

// (Σ_e weight_e·|u_e|^β·area_e)^{1/β}, |u_e| = sqrt(u·u + reg) at centroids
double distortion_objective(const Mesh2D& mesh, const Eigen::VectorXd& displacement, double beta,
                            const Eigen::VectorXd& element_weight,
                            double length_reg = kDistortionLengthReg);

// Nodal adjoint body-force density −F^{1−β}·|u|^{β−2}·u (zero if F <= 0).
Eigen::VectorXd adjoint_load_density(const Eigen::VectorXd& displacement, double beta,
                                     double distortion_value,
                                     double length_reg = kDistortionLengthReg);

// Exact gradient of distortion_objective with respect to the nodal
// displacements (assembled with the objective's own centroid rule).
Eigen::VectorXd distortion_gradient_load(const Mesh2D& mesh, const Eigen::VectorXd& displacement,
                                         double beta, double distortion_value,
                                         const Eigen::VectorXd& element_weight,
                                         double length_reg = kDistortionLengthReg);

// The adjoint right-hand side: the negated objective gradient, matching the
// sign of adjoint_load_density.
Eigen::VectorXd distortion_adjoint_load(const Mesh2D& mesh, const Eigen::VectorXd& displacement,
                                        double beta, double distortion_value,
                                        const Eigen::VectorXd& element_weight,
                                        double length_reg = kDistortionLengthReg);

// Per-step adjoint fields: for each step i, solves the step-i stiffness
// (same activation pattern and substrate fixity as the forward build) against
// the adjoint load restricted to the step-i active nodes. Reuses cached
// forward factorizations when provided.
std::vector<Eigen::VectorXd> solve_adjoints(const Mesh2D& mesh, const ElasticityModel& model,
                                            const BuildConfig& config,
                                            const Eigen::VectorXd& material_scale,
                                            const Eigen::VectorXd& adjoint_load,
                                            BuildSystems* forward_systems = nullptr,
                                            int workers = 1);

// dF_AM/ds for the build driven by s·ε_inh, from the per-step contraction of
// ε_inh : C̃ : ε(adjoint_i) over the layer-i support.
double adjoint_strain_scale_derivative(const Mesh2D& mesh, const ElasticityModel& model,
                                       const BuildConfig& config,
                                       const Eigen::VectorXd& material_scale,
                                       const std::vector<Eigen::VectorXd>& adjoints);

Eigen::Matrix3Xd centroid_strains(const Mesh2D& mesh, const Eigen::VectorXd& displacement);

// −ε(v):A:ε(v), projected to nodes
Eigen::VectorXd td_compliance(const Mesh2D& mesh, const ElasticityModel& model,
                              const Eigen::VectorXd& equilibrium_displacement);

// Σ_i ( −ε(u_i):A:ε(adjoint_i) + ε_inh:A:ε(adjoint_i)·[element in layer i] ),
// projected to nodes
Eigen::VectorXd td_distortion(const Mesh2D& mesh, const ElasticityModel& model,
                              const BuildConfig& config,
                              const std::vector<Eigen::VectorXd>& layer_displacement,
                              const std::vector<Eigen::VectorXd>& adjoints);

// (1−γ)·f_mc·|D|/∫|f_mc| + γ·f_am·|D|/∫|f_am| with lumped nodal integration;
// a component with vanishing L1 norm contributes zero.
Eigen::VectorXd normalize_combine(const Mesh2D& mesh, const Eigen::VectorXd& td_mc,
                                  const Eigen::VectorXd& td_am, double gamma);

}  // namespace distopt
