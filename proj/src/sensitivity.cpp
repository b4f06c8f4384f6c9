#include "distopt/sensitivity.hpp"

#include <cmath>

#include "parallel_layers.hpp"

namespace distopt {

double compliance_value(const Eigen::VectorXd& load, const Eigen::VectorXd& displacement) {
  if (load.size() != displacement.size())
    throw std::invalid_argument("compliance: size mismatch");
  return load.dot(displacement);
}

namespace {

Eigen::Vector2d centroid_displacement(const Mesh2D& mesh, const Eigen::VectorXd& u, int e) {
  const auto nodes = mesh.element_nodes(e);
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (int a = 0; a < 4; ++a) {
    c[0] += 0.25 * u[2 * nodes[a]];
    c[1] += 0.25 * u[2 * nodes[a] + 1];
  }
  return c;
}

void check_beta(double beta) {
  if (!(beta >= 2.0)) throw std::invalid_argument("distortion objective: beta must be >= 2");
}

}  // namespace

double distortion_objective(const Mesh2D& mesh, const Eigen::VectorXd& displacement, double beta,
                            const Eigen::VectorXd& element_weight, double length_reg) {
  check_beta(beta);
  if (displacement.size() != mesh.dof_count() || element_weight.size() != mesh.element_count())
    throw std::invalid_argument("distortion objective: field size mismatch");
  const double area = mesh.element_area();
  double sum = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Eigen::Vector2d uc = centroid_displacement(mesh, displacement, e);
    sum += element_weight[e] * area * std::pow(uc.squaredNorm() + length_reg, beta / 2.0);
  }
  return std::pow(sum, 1.0 / beta);
}

Eigen::VectorXd adjoint_load_density(const Eigen::VectorXd& displacement, double beta,
                                     double distortion_value, double length_reg) {
  check_beta(beta);
  Eigen::VectorXd density = Eigen::VectorXd::Zero(displacement.size());
  if (!(distortion_value > 0.0)) return density;
  const double front = -std::pow(distortion_value, 1.0 - beta);
  for (Eigen::Index k = 0; k < displacement.size() / 2; ++k) {
    const double ux = displacement[2 * k], uy = displacement[2 * k + 1];
    const double mag = std::pow(ux * ux + uy * uy + length_reg, (beta - 2.0) / 2.0);
    density[2 * k] = front * mag * ux;
    density[2 * k + 1] = front * mag * uy;
  }
  return density;
}

Eigen::VectorXd distortion_gradient_load(const Mesh2D& mesh, const Eigen::VectorXd& displacement,
                                         double beta, double distortion_value,
                                         const Eigen::VectorXd& element_weight,
                                         double length_reg) {
  check_beta(beta);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mesh.dof_count());
  if (!(distortion_value > 0.0)) return g;
  const double front = std::pow(distortion_value, 1.0 - beta);
  const double area = mesh.element_area();
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Eigen::Vector2d uc = centroid_displacement(mesh, displacement, e);
    const double coeff = front * element_weight[e] * area *
                         std::pow(uc.squaredNorm() + length_reg, (beta - 2.0) / 2.0);
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a) {
      g[2 * nodes[a]] += 0.25 * coeff * uc[0];
      g[2 * nodes[a] + 1] += 0.25 * coeff * uc[1];
    }
  }
  return g;
}

Eigen::VectorXd distortion_adjoint_load(const Mesh2D& mesh, const Eigen::VectorXd& displacement,
                                        double beta, double distortion_value,
                                        const Eigen::VectorXd& element_weight,
                                        double length_reg) {
  return -distortion_gradient_load(mesh, displacement, beta, distortion_value, element_weight,
                                   length_reg);
}

std::vector<Eigen::VectorXd> solve_adjoints(const Mesh2D& mesh, const ElasticityModel& model,
                                            const BuildConfig& config,
                                            const Eigen::VectorXd& material_scale,
                                            const Eigen::VectorXd& adjoint_load,
                                            BuildSystems* forward_systems, int workers) {
  if (adjoint_load.size() != mesh.dof_count())
    throw std::invalid_argument("solve_adjoints: load size mismatch");
  const auto substrate_nodes = select_boundary_nodes(mesh, config.substrate);
  const auto fixed = fixed_dof_mask(mesh, dirichlet_dofs(substrate_nodes));
  const int m = config.layers;
  const bool reuse = forward_systems && forward_systems->cached &&
                     static_cast<int>(forward_systems->per_layer.size()) == m;

  std::vector<Eigen::VectorXd> adjoints(m);
  detail::parallel_layers(m, workers, [&](int step) {
    const int layer = step + 1;
    std::shared_ptr<LinearSystem> system;
    if (reuse && forward_systems->per_layer[step]) {
      system = forward_systems->per_layer[step];
    } else {
      const auto masks = layer_mask(mesh, layer);
      Eigen::VectorXd scale(mesh.element_count());
      for (int e = 0; e < mesh.element_count(); ++e)
        scale[e] = material_scale[e] * (masks.active[e] ? 1.0 : config.inactive_ratio);
      system = std::make_shared<LinearSystem>(
          assemble_constrained_stiffness(mesh, scale, model, fixed), fixed);
    }

    const auto keep = active_node_mask(mesh, layer);
    Eigen::VectorXd load = adjoint_load;
    for (int k = 0; k < mesh.node_count(); ++k)
      if (!keep[k]) load[2 * k] = load[2 * k + 1] = 0.0;

    Eigen::VectorXd u;
    try {
      u = system->solve(load);
    } catch (const SolverError& err) {
      throw SolverError(err.kind, "adjoint step " + std::to_string(layer) + ": " + err.what(),
                        layer);
    }
    for (int k = 0; k < mesh.node_count(); ++k)
      if (!keep[k]) u[2 * k] = u[2 * k + 1] = 0.0;
    adjoints[step] = std::move(u);
  });
  return adjoints;
}

Eigen::Matrix3Xd centroid_strains(const Mesh2D& mesh, const Eigen::VectorXd& displacement) {
  if (displacement.size() != mesh.dof_count())
    throw std::invalid_argument("centroid_strains: displacement size mismatch");
  const auto B0 = strain_displacement(0.0, 0.0, mesh.dx(), mesh.dy());
  Eigen::Matrix3Xd eps(3, mesh.element_count());
  Eigen::Matrix<double, 8, 1> ue;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a) {
      ue[2 * a] = displacement[2 * nodes[a]];
      ue[2 * a + 1] = displacement[2 * nodes[a] + 1];
    }
    eps.col(e) = B0 * ue;
  }
  return eps;
}

double adjoint_strain_scale_derivative(const Mesh2D& mesh, const ElasticityModel& model,
                                       const BuildConfig& config,
                                       const Eigen::VectorXd& material_scale,
                                       const std::vector<Eigen::VectorXd>& adjoints) {
  if (static_cast<int>(adjoints.size()) != config.layers)
    throw std::invalid_argument("adjoint contraction: layer count mismatch");
  const Eigen::Vector3d pre = model.C * config.inherent_strain.voigt();
  const double area = mesh.element_area();
  double contraction = 0.0;
  for (int step = 0; step < config.layers; ++step) {
    const auto eps = centroid_strains(mesh, adjoints[step]);
    const auto masks = layer_mask(mesh, step + 1);
    for (int e = 0; e < mesh.element_count(); ++e)
      if (masks.inherent[e])
        contraction += material_scale[e] * area * pre.dot(eps.col(e));
  }
  // adjoints solve against the negated objective gradient, so the derivative
  // carries the opposite sign of the raw contraction
  return -contraction;
}

Eigen::VectorXd td_compliance(const Mesh2D& mesh, const ElasticityModel& model,
                              const Eigen::VectorXd& equilibrium_displacement) {
  const auto eps = centroid_strains(mesh, equilibrium_displacement);
  Eigen::VectorXd elem(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e)
    elem[e] = -eps.col(e).dot(model.A * eps.col(e));
  return project_elements_to_nodes(mesh, elem);
}

Eigen::VectorXd td_distortion(const Mesh2D& mesh, const ElasticityModel& model,
                              const BuildConfig& config,
                              const std::vector<Eigen::VectorXd>& layer_displacement,
                              const std::vector<Eigen::VectorXd>& adjoints) {
  if (layer_displacement.size() != adjoints.size() ||
      static_cast<int>(adjoints.size()) != config.layers)
    throw std::invalid_argument("td_distortion: layer count mismatch");
  const Eigen::Vector3d inh = config.inherent_strain.voigt();
  Eigen::VectorXd elem = Eigen::VectorXd::Zero(mesh.element_count());
  for (int step = 0; step < config.layers; ++step) {
    const auto eps_u = centroid_strains(mesh, layer_displacement[step]);
    const auto eps_a = centroid_strains(mesh, adjoints[step]);
    const auto masks = layer_mask(mesh, step + 1);
    for (int e = 0; e < mesh.element_count(); ++e) {
      const Eigen::Vector3d Aea = model.A * eps_a.col(e);
      elem[e] -= eps_u.col(e).dot(Aea);
      if (masks.inherent[e]) elem[e] += inh.dot(Aea);
    }
  }
  return project_elements_to_nodes(mesh, elem);
}

Eigen::VectorXd normalize_combine(const Mesh2D& mesh, const Eigen::VectorXd& td_mc,
                                  const Eigen::VectorXd& td_am, double gamma) {
  if (td_mc.size() != mesh.node_count() || td_am.size() != mesh.node_count())
    throw std::invalid_argument("normalize_combine: field size mismatch");
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("normalize_combine: gamma must lie in [0,1]");

  // lumped nodal areas; their sum is |D|
  Eigen::VectorXd lumped = Eigen::VectorXd::Zero(mesh.node_count());
  const double quarter = mesh.element_area() / 4.0;
  for (int e = 0; e < mesh.element_count(); ++e)
    for (const int n : mesh.element_nodes(e)) lumped[n] += quarter;

  const double domain = mesh.domain_area();
  const auto l1 = [&](const Eigen::VectorXd& f) {
    return (lumped.array() * f.array().abs()).sum();
  };

  Eigen::VectorXd combined = Eigen::VectorXd::Zero(mesh.node_count());
  const double n_mc = l1(td_mc);
  if (gamma < 1.0 && n_mc > 1e-300 * domain) combined += (1.0 - gamma) * (domain / n_mc) * td_mc;
  const double n_am = l1(td_am);
  if (gamma > 0.0 && n_am > 1e-300 * domain) combined += gamma * (domain / n_am) * td_am;
  return combined;
}

}  // namespace distopt
