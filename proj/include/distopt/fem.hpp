// Plane-stress linear elasticity on the structured grid: element matrices,
// sparse assembly, eigenstrain/traction/body-force loads, Dirichlet handling,
// direct solves and centroid strain/stress recovery.
//
// Tensor convention: 2D Voigt with engineering shear, (xx, yy, xy) with
// γ_xy = 2ε_xy. All contractions below, including ε:A:ε, are expressed in
// this convention (the A matrix's shear entry already absorbs the factor 2).
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "distopt/mesh.hpp"

namespace distopt {

using SparseMat = Eigen::SparseMatrix<double>;

struct ElasticityModel {
  double youngs_modulus = 0.0;  // MPa
  double poisson_ratio = 0.0;
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();  // plane-stress elasticity
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();  // plane-stress polarization
};

ElasticityModel plane_stress_model(double youngs_modulus, double poisson_ratio);

struct EigenstrainTensor {
  double ex = 0.0;  // in-plane normal component
  double ey = 0.0;  // build-direction normal component (zero by convention)
  Eigen::Vector3d voigt() const { return {ex, ey, 0.0}; }  // shear identically zero
};

// Element operators on the uniform dx-by-dy rectangle (identical for every
// element of a structured mesh, so they are computed once per assembly).
Eigen::Matrix<double, 3, 8> strain_displacement(double xi, double eta, double dx, double dy);
Eigen::Matrix<double, 8, 8> element_stiffness(const ElasticityModel& model, double dx, double dy);
Eigen::Matrix<double, 8, 1> element_eigenstrain_load(const ElasticityModel& model,
                                                     const Eigen::Vector3d& strain_voigt,
                                                     double dx, double dy);
Eigen::Matrix4d element_mass(double dx, double dy);
Eigen::Matrix4d element_laplacian(double dx, double dy);

// Global symmetric stiffness, per-element scalar stiffness scale.
SparseMat assemble_stiffness(const Mesh2D& mesh, const Eigen::VectorXd& element_scale,
                             const ElasticityModel& model);

// Same matrix with homogeneous Dirichlet rows/columns eliminated
// symmetrically (unit diagonal on fixed dofs).
SparseMat assemble_constrained_stiffness(const Mesh2D& mesh, const Eigen::VectorXd& element_scale,
                                         const ElasticityModel& model,
                                         const std::vector<std::uint8_t>& fixed_dof);

// Equivalent nodal forces of a stress-free strain imposed on the masked
// elements, scaled like the stiffness so soft regions emit no spurious load.
Eigen::VectorXd eigenstrain_load(const Mesh2D& mesh, const EigenstrainTensor& strain,
                                 const std::vector<std::uint8_t>& element_mask,
                                 const Eigen::VectorXd& element_scale,
                                 const ElasticityModel& model);

// Per-element strain variant (springback uses the accumulated elastic strain).
Eigen::VectorXd eigenstrain_load_field(const Mesh2D& mesh, const Eigen::Matrix3Xd& strain_voigt,
                                       const std::vector<std::uint8_t>& element_mask,
                                       const Eigen::VectorXd& element_scale,
                                       const ElasticityModel& model);

struct TractionBC {
  std::vector<std::array<int, 2>> edges;
  Eigen::Vector2d traction = Eigen::Vector2d::Zero();  // force per unit length
};

Eigen::VectorXd traction_load(const Mesh2D& mesh, const TractionBC& bc);

// Body force from a nodal density field (interleaved 2N), integrated at
// element centroids over the masked elements; optional per-element weight.
Eigen::VectorXd body_force_load(const Mesh2D& mesh, const Eigen::VectorXd& nodal_density,
                                const std::vector<std::uint8_t>& element_mask,
                                const Eigen::VectorXd* element_weight = nullptr);

enum class SolveFailure { Singular, Breakdown };

class SolverError : public std::runtime_error {
 public:
  SolverError(SolveFailure kind, const std::string& what, int layer = -1)
      : std::runtime_error(what), kind(kind), layer(layer) {}
  SolveFailure kind;
  int layer;  // build-step index when applicable, -1 otherwise
};

// Constrained SPD system with a cached LDLT factorization. Fixed dofs are
// exactly zero in every solution; solutions are residual-checked (relative
// residual <= 1e-10) with iterative refinement on the cached factors.
class LinearSystem {
 public:
  LinearSystem(SparseMat constrained_matrix, std::vector<std::uint8_t> fixed_dof);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  const SparseMat& matrix() const { return matrix_; }
  const std::vector<std::uint8_t>& fixed() const { return fixed_; }

 private:
  void factorize() const;

  SparseMat matrix_;
  std::vector<std::uint8_t> fixed_;
  int free_count_ = 0;
  mutable Eigen::SimplicialLDLT<SparseMat> ldlt_;
  mutable bool factorized_ = false;
};

// One-shot convenience: constrain, factor, solve.
Eigen::VectorXd solve(const Mesh2D& mesh, const SparseMat& stiffness, const Eigen::VectorXd& load,
                      const std::vector<int>& fixed_dofs);

std::vector<std::uint8_t> fixed_dof_mask(const Mesh2D& mesh, const std::vector<int>& fixed_dofs);

// Both displacement components of every node in the selection.
std::vector<int> dirichlet_dofs(const std::vector<int>& nodes);

struct StrainStress {
  Eigen::Matrix3Xd strain;  // per element, centroid value, Voigt
  Eigen::Matrix3Xd stress;
};

// σ = scale·C·(ε(u) − ε_inh·[mask]) with centroid strain evaluation.
StrainStress recover_strain_stress(const Mesh2D& mesh, const Eigen::VectorXd& u,
                                   const EigenstrainTensor& inherent,
                                   const std::vector<std::uint8_t>& inherent_mask,
                                   const ElasticityModel& model,
                                   const Eigen::VectorXd& element_scale);

// Area-weighted element-to-node projection (uniform grids: plain average of
// the adjacent elements).
Eigen::VectorXd project_elements_to_nodes(const Mesh2D& mesh, const Eigen::VectorXd& element_values);

}  // namespace distopt
