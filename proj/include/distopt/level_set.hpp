// Level-set design representation: smoothed Heaviside projection, ersatz
// material scaling, semi-implicit reaction-diffusion update with clamping,
// and bisection-based volume control.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <utility>

#include "distopt/fem.hpp"
#include "distopt/mesh.hpp"

namespace distopt {

// C¹ quintic ramp of width 2w mapping the level-set value to [0,1].
double heaviside(double phi, double w);

// stiffness multiplier {(1−d)·H + d} at the element's mean nodal phi
double ersatz_scale(double phi_element_mean, double w, double d);

// sharp material indicator, 1 iff phi >= 0
int characteristic(double phi);

Eigen::VectorXd element_mean_phi(const Mesh2D& mesh, const Eigen::VectorXd& phi);
Eigen::VectorXd element_heaviside(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w);
Eigen::VectorXd element_ersatz(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w, double d);

// (Σ_e H_e·area_e) / |D|
double volume_fraction(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w);

// number of 4-connected components of the void region {H_e < 1/2}
int count_void_components(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w);

struct RdeParams {
  double tau = 1e-4;   // diffusion regularization
  double gain = 0.8;   // update gain K
  double dt = 0.1;     // fictitious time step
};

// One semi-implicit step of  ∂φ/∂t = −K(F' + λ − τ∇̂²φ):
//   (M + Δt·K·τ·L̂)·φ' = M·(φ − Δt·K·(F' + λ)),  natural BCs,  clamp to [−1,1].
// L̂ is the Laplacian in domain-normalized coordinates (|D|·L), so tau keeps
// its meaning across domain sizes. The operator is constant for fixed
// parameters and is factorized once.
class RdeSolver {
 public:
  RdeSolver(const Mesh2D& mesh, const RdeParams& params, double transition_width);

  Eigen::VectorXd step(const Eigen::VectorXd& phi, const Eigen::VectorXd& sensitivity,
                       double shift) const;
  Eigen::VectorXd step_unclamped(const Eigen::VectorXd& phi, const Eigen::VectorXd& sensitivity,
                                 double shift) const;

  // Finds the uniform shift λ so the stepped volume lands within the control
  // band of v_target (geometric bracket expansion + bisection, <= 60 iters).
  // Returns the stepped field and the shift used; counts candidate
  // evaluations into *evaluations when given.
  std::pair<Eigen::VectorXd, double> volume_controlled_step(const Eigen::VectorXd& phi,
                                                            const Eigen::VectorXd& sensitivity,
                                                            double v_target,
                                                            long* evaluations = nullptr) const;

  const SparseMat& mass() const { return mass_; }
  const SparseMat& laplacian() const { return laplacian_; }
  const RdeParams& params() const { return params_; }

 private:
  const Mesh2D* mesh_;
  RdeParams params_;
  double width_;
  SparseMat mass_;
  SparseMat laplacian_;
  Eigen::SimplicialLDLT<SparseMat> op_;
};

}  // namespace distopt
