#include "distopt/fem.hpp"

#include <cmath>

namespace distopt {

namespace {

constexpr double kGauss = 0.5773502691896257;  // 1/sqrt(3)

const std::array<std::array<double, 2>, 4> kGaussPoints = {
    {{-kGauss, -kGauss}, {kGauss, -kGauss}, {kGauss, kGauss}, {-kGauss, kGauss}}};

}  // namespace

ElasticityModel plane_stress_model(double youngs_modulus, double poisson_ratio) {
  if (!(youngs_modulus > 0.0))
    throw std::invalid_argument("elasticity: Young's modulus must be positive");
  if (poisson_ratio < 0.0 || poisson_ratio >= 0.5)
    throw std::invalid_argument("elasticity: Poisson ratio must lie in [0, 0.5)");

  ElasticityModel m;
  m.youngs_modulus = youngs_modulus;
  m.poisson_ratio = poisson_ratio;

  const double E = youngs_modulus, nu = poisson_ratio;
  const double c = E / (1.0 - nu * nu);
  m.C << c, c * nu, 0.0,
         c * nu, c, 0.0,
         0.0, 0.0, c * (1.0 - nu) / 2.0;

  // A_ijkl = 1/(1+ν)² { −(1−6ν+ν²)E/(1−ν)² δ_ij δ_kl + 2E(δ_ik δ_jl + δ_il δ_jk) }
  // reduces to ε:A:η = a·trε·trη + 2b·(ε_xx η_xx + ε_yy η_yy + 2 ε_xy η_xy),
  // i.e. the Voigt matrix below (shear entry b carries engineering shear).
  const double a = -(1.0 - 6.0 * nu + nu * nu) * E / ((1.0 - nu) * (1.0 - nu) * (1.0 + nu) * (1.0 + nu));
  const double b = 2.0 * E / ((1.0 + nu) * (1.0 + nu));
  m.A << a + 2.0 * b, a, 0.0,
         a, a + 2.0 * b, 0.0,
         0.0, 0.0, b;
  return m;
}

Eigen::Matrix<double, 3, 8> strain_displacement(double xi, double eta, double dx, double dy) {
  // bilinear shape derivatives on [-1,1]^2, node order (-,-),(+,-),(+,+),(-,+)
  const double dndxi[4] = {-(1.0 - eta) / 4.0, (1.0 - eta) / 4.0, (1.0 + eta) / 4.0,
                           -(1.0 + eta) / 4.0};
  const double dndeta[4] = {-(1.0 - xi) / 4.0, -(1.0 + xi) / 4.0, (1.0 + xi) / 4.0,
                            (1.0 - xi) / 4.0};
  Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    const double dndx = dndxi[a] * 2.0 / dx;
    const double dndy = dndeta[a] * 2.0 / dy;
    B(0, 2 * a) = dndx;
    B(1, 2 * a + 1) = dndy;
    B(2, 2 * a) = dndy;
    B(2, 2 * a + 1) = dndx;
  }
  return B;
}

Eigen::Matrix<double, 8, 8> element_stiffness(const ElasticityModel& model, double dx, double dy) {
  const double jac = dx * dy / 4.0;
  Eigen::Matrix<double, 8, 8> K = Eigen::Matrix<double, 8, 8>::Zero();
  for (const auto& gp : kGaussPoints) {
    const auto B = strain_displacement(gp[0], gp[1], dx, dy);
    K += jac * B.transpose() * model.C * B;
  }
  K = 0.5 * (K + K.transpose()).eval();  // exact symmetry
  return K;
}

Eigen::Matrix<double, 8, 1> element_eigenstrain_load(const ElasticityModel& model,
                                                     const Eigen::Vector3d& strain_voigt,
                                                     double dx, double dy) {
  const double jac = dx * dy / 4.0;
  const Eigen::Vector3d stress = model.C * strain_voigt;
  Eigen::Matrix<double, 8, 1> f = Eigen::Matrix<double, 8, 1>::Zero();
  for (const auto& gp : kGaussPoints)
    f += jac * strain_displacement(gp[0], gp[1], dx, dy).transpose() * stress;
  return f;
}

Eigen::Matrix4d element_mass(double dx, double dy) {
  const double jac = dx * dy / 4.0;
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  for (const auto& gp : kGaussPoints) {
    const double xi = gp[0], eta = gp[1];
    Eigen::Vector4d N;
    N << (1 - xi) * (1 - eta) / 4.0, (1 + xi) * (1 - eta) / 4.0, (1 + xi) * (1 + eta) / 4.0,
        (1 - xi) * (1 + eta) / 4.0;
    M += jac * N * N.transpose();
  }
  M = 0.5 * (M + M.transpose()).eval();
  return M;
}

Eigen::Matrix4d element_laplacian(double dx, double dy) {
  const double jac = dx * dy / 4.0;
  Eigen::Matrix4d L = Eigen::Matrix4d::Zero();
  for (const auto& gp : kGaussPoints) {
    const double xi = gp[0], eta = gp[1];
    const double dndxi[4] = {-(1 - eta) / 4.0, (1 - eta) / 4.0, (1 + eta) / 4.0, -(1 + eta) / 4.0};
    const double dndeta[4] = {-(1 - xi) / 4.0, -(1 + xi) / 4.0, (1 + xi) / 4.0, (1 - xi) / 4.0};
    Eigen::Matrix<double, 2, 4> G;
    for (int a = 0; a < 4; ++a) {
      G(0, a) = dndxi[a] * 2.0 / dx;
      G(1, a) = dndeta[a] * 2.0 / dy;
    }
    L += jac * G.transpose() * G;
  }
  L = 0.5 * (L + L.transpose()).eval();
  return L;
}

namespace {

void check_scale(const Mesh2D& mesh, const Eigen::VectorXd& element_scale) {
  if (element_scale.size() != mesh.element_count())
    throw std::invalid_argument("assembly: element scale size mismatch");
}

SparseMat assemble_impl(const Mesh2D& mesh, const Eigen::VectorXd& element_scale,
                        const ElasticityModel& model, const std::vector<std::uint8_t>* fixed) {
  check_scale(mesh, element_scale);
  const auto Ke = element_stiffness(model, mesh.dx(), mesh.dy());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.element_count()) * 64 + mesh.dof_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const double s = element_scale[e];
    if (!(s > 0.0)) throw std::invalid_argument("assembly: element scale must be positive");
    const auto nodes = mesh.element_nodes(e);
    int dofs[8];
    for (int a = 0; a < 4; ++a) {
      dofs[2 * a] = 2 * nodes[a];
      dofs[2 * a + 1] = 2 * nodes[a] + 1;
    }
    for (int r = 0; r < 8; ++r) {
      if (fixed && (*fixed)[dofs[r]]) continue;
      for (int c = 0; c < 8; ++c) {
        if (fixed && (*fixed)[dofs[c]]) continue;
        trip.emplace_back(dofs[r], dofs[c], s * Ke(r, c));
      }
    }
  }
  if (fixed)
    for (int d = 0; d < mesh.dof_count(); ++d)
      if ((*fixed)[d]) trip.emplace_back(d, d, 1.0);
  SparseMat K(mesh.dof_count(), mesh.dof_count());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

}  // namespace

SparseMat assemble_stiffness(const Mesh2D& mesh, const Eigen::VectorXd& element_scale,
                             const ElasticityModel& model) {
  return assemble_impl(mesh, element_scale, model, nullptr);
}

SparseMat assemble_constrained_stiffness(const Mesh2D& mesh, const Eigen::VectorXd& element_scale,
                                         const ElasticityModel& model,
                                         const std::vector<std::uint8_t>& fixed_dof) {
  if (static_cast<int>(fixed_dof.size()) != mesh.dof_count())
    throw std::invalid_argument("assembly: fixed dof mask size mismatch");
  return assemble_impl(mesh, element_scale, model, &fixed_dof);
}

Eigen::VectorXd eigenstrain_load(const Mesh2D& mesh, const EigenstrainTensor& strain,
                                 const std::vector<std::uint8_t>& element_mask,
                                 const Eigen::VectorXd& element_scale,
                                 const ElasticityModel& model) {
  check_scale(mesh, element_scale);
  if (static_cast<int>(element_mask.size()) != mesh.element_count())
    throw std::invalid_argument("eigenstrain_load: mask size mismatch");
  const auto fe = element_eigenstrain_load(model, strain.voigt(), mesh.dx(), mesh.dy());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (!element_mask[e]) continue;
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a) {
      f[2 * nodes[a]] += element_scale[e] * fe[2 * a];
      f[2 * nodes[a] + 1] += element_scale[e] * fe[2 * a + 1];
    }
  }
  return f;
}

Eigen::VectorXd eigenstrain_load_field(const Mesh2D& mesh, const Eigen::Matrix3Xd& strain_voigt,
                                       const std::vector<std::uint8_t>& element_mask,
                                       const Eigen::VectorXd& element_scale,
                                       const ElasticityModel& model) {
  check_scale(mesh, element_scale);
  if (strain_voigt.cols() != mesh.element_count())
    throw std::invalid_argument("eigenstrain_load_field: strain field size mismatch");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (!element_mask[e]) continue;
    const auto fe =
        element_eigenstrain_load(model, strain_voigt.col(e), mesh.dx(), mesh.dy());
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a) {
      f[2 * nodes[a]] += element_scale[e] * fe[2 * a];
      f[2 * nodes[a] + 1] += element_scale[e] * fe[2 * a + 1];
    }
  }
  return f;
}

Eigen::VectorXd traction_load(const Mesh2D& mesh, const TractionBC& bc) {
  if (bc.edges.empty()) throw std::invalid_argument("traction_load: empty edge set");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
  for (const auto& edge : bc.edges) {
    const double ax = mesh.node_x(edge[0]), ay = mesh.node_y(edge[0]);
    const double bx = mesh.node_x(edge[1]), by = mesh.node_y(edge[1]);
    const double len = std::hypot(bx - ax, by - ay);
    for (int end = 0; end < 2; ++end) {
      f[2 * edge[end]] += 0.5 * len * bc.traction[0];
      f[2 * edge[end] + 1] += 0.5 * len * bc.traction[1];
    }
  }
  return f;
}

Eigen::VectorXd body_force_load(const Mesh2D& mesh, const Eigen::VectorXd& nodal_density,
                                const std::vector<std::uint8_t>& element_mask,
                                const Eigen::VectorXd* element_weight) {
  if (nodal_density.size() != mesh.dof_count())
    throw std::invalid_argument("body_force_load: density size mismatch");
  if (static_cast<int>(element_mask.size()) != mesh.element_count())
    throw std::invalid_argument("body_force_load: mask size mismatch");
  const double quarter_area = mesh.element_area() / 4.0;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (!element_mask[e]) continue;
    const double w = element_weight ? (*element_weight)[e] : 1.0;
    const auto nodes = mesh.element_nodes(e);
    Eigen::Vector2d rho = Eigen::Vector2d::Zero();
    for (int a = 0; a < 4; ++a) {
      rho[0] += 0.25 * nodal_density[2 * nodes[a]];
      rho[1] += 0.25 * nodal_density[2 * nodes[a] + 1];
    }
    for (int a = 0; a < 4; ++a) {
      f[2 * nodes[a]] += w * quarter_area * rho[0];
      f[2 * nodes[a] + 1] += w * quarter_area * rho[1];
    }
  }
  return f;
}

LinearSystem::LinearSystem(SparseMat constrained_matrix, std::vector<std::uint8_t> fixed_dof)
    : matrix_(std::move(constrained_matrix)), fixed_(std::move(fixed_dof)) {
  if (matrix_.rows() != matrix_.cols() ||
      matrix_.rows() != static_cast<Eigen::Index>(fixed_.size()))
    throw std::invalid_argument("LinearSystem: matrix/mask size mismatch");
  for (const auto fl : fixed_)
    if (!fl) ++free_count_;
}

void LinearSystem::factorize() const {
  if (factorized_) return;
  if (free_count_ > 0) {
    int constrained = 0;
    for (const auto fl : fixed_)
      if (fl) ++constrained;
    if (constrained < 3)
      throw SolverError(SolveFailure::Singular,
                        "linear solve: fewer than 3 constrained dofs, rigid modes remain");
  }
  ldlt_.compute(matrix_);
  if (ldlt_.info() != Eigen::Success)
    throw SolverError(SolveFailure::Singular, "linear solve: factorization failed");
  factorized_ = true;
}

Eigen::VectorXd LinearSystem::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != matrix_.rows())
    throw std::invalid_argument("linear solve: rhs size mismatch");
  factorize();
  Eigen::VectorXd f = rhs;
  for (Eigen::Index d = 0; d < f.size(); ++d)
    if (fixed_[d]) f[d] = 0.0;
  const double fnorm = f.norm();
  if (fnorm == 0.0) return Eigen::VectorXd::Zero(f.size());

  Eigen::VectorXd x = ldlt_.solve(f);
  double rel = (f - matrix_ * x).norm() / fnorm;
  for (int pass = 0; pass < 3 && rel > 1e-12; ++pass) {
    x += ldlt_.solve(f - matrix_ * x);
    rel = (f - matrix_ * x).norm() / fnorm;
  }
  if (!std::isfinite(rel) || rel > 1e-10)
    throw SolverError(SolveFailure::Breakdown,
                      "linear solve: residual " + std::to_string(rel) +
                          " above tolerance (possible under-constraint or breakdown)");
  for (Eigen::Index d = 0; d < x.size(); ++d)
    if (fixed_[d]) x[d] = 0.0;
  return x;
}

std::vector<std::uint8_t> fixed_dof_mask(const Mesh2D& mesh, const std::vector<int>& fixed_dofs) {
  std::vector<std::uint8_t> mask(mesh.dof_count(), 0);
  for (const int d : fixed_dofs) {
    if (d < 0 || d >= mesh.dof_count())
      throw std::invalid_argument("fixed dof index out of range");
    mask[d] = 1;
  }
  return mask;
}

std::vector<int> dirichlet_dofs(const std::vector<int>& nodes) {
  std::vector<int> dofs;
  dofs.reserve(nodes.size() * 2);
  for (const int n : nodes) {
    dofs.push_back(2 * n);
    dofs.push_back(2 * n + 1);
  }
  return dofs;
}

Eigen::VectorXd solve(const Mesh2D& mesh, const SparseMat& stiffness, const Eigen::VectorXd& load,
                      const std::vector<int>& fixed_dofs) {
  const auto mask = fixed_dof_mask(mesh, fixed_dofs);
  // rebuild with eliminated rows/columns so the cached path and the one-shot
  // path produce identical constrained systems
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(stiffness.nonZeros() + mesh.dof_count());
  for (int k = 0; k < stiffness.outerSize(); ++k)
    for (SparseMat::InnerIterator it(stiffness, k); it; ++it)
      if (!mask[it.row()] && !mask[it.col()]) trip.emplace_back(it.row(), it.col(), it.value());
  for (int d = 0; d < mesh.dof_count(); ++d)
    if (mask[d]) trip.emplace_back(d, d, 1.0);
  SparseMat constrained(mesh.dof_count(), mesh.dof_count());
  constrained.setFromTriplets(trip.begin(), trip.end());
  return LinearSystem(std::move(constrained), mask).solve(load);
}

StrainStress recover_strain_stress(const Mesh2D& mesh, const Eigen::VectorXd& u,
                                   const EigenstrainTensor& inherent,
                                   const std::vector<std::uint8_t>& inherent_mask,
                                   const ElasticityModel& model,
                                   const Eigen::VectorXd& element_scale) {
  if (u.size() != mesh.dof_count())
    throw std::invalid_argument("recover_strain_stress: displacement size mismatch");
  check_scale(mesh, element_scale);
  const auto B0 = strain_displacement(0.0, 0.0, mesh.dx(), mesh.dy());
  const Eigen::Vector3d inh = inherent.voigt();
  StrainStress out;
  out.strain.resize(3, mesh.element_count());
  out.stress.resize(3, mesh.element_count());
  Eigen::Matrix<double, 8, 1> ue;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a) {
      ue[2 * a] = u[2 * nodes[a]];
      ue[2 * a + 1] = u[2 * nodes[a] + 1];
    }
    const Eigen::Vector3d eps = B0 * ue;
    out.strain.col(e) = eps;
    const Eigen::Vector3d elastic = inherent_mask[e] ? (eps - inh).eval() : eps;
    out.stress.col(e) = element_scale[e] * (model.C * elastic);
  }
  return out;
}

Eigen::VectorXd project_elements_to_nodes(const Mesh2D& mesh, const Eigen::VectorXd& element_values) {
  if (element_values.size() != mesh.element_count())
    throw std::invalid_argument("projection: element field size mismatch");
  Eigen::VectorXd num = Eigen::VectorXd::Zero(mesh.node_count());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(mesh.node_count());
  const double area = mesh.element_area();
  for (int e = 0; e < mesh.element_count(); ++e)
    for (const int n : mesh.element_nodes(e)) {
      num[n] += area * element_values[e];
      den[n] += area;
    }
  return num.array() / den.array();
}

}  // namespace distopt
