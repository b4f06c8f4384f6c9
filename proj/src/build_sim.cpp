#include "distopt/build_sim.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "parallel_layers.hpp"

namespace distopt {

int default_worker_count(int cap) {
  int n = 0;
  if (const char* env = std::getenv("DISTOPT_THREADS")) {
    n = std::atoi(env);
    if (n < 1) n = 1;
  } else {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
  }
  return std::min(n, std::max(1, cap));
}

namespace {

void check_material_scale(const Mesh2D& mesh, const Eigen::VectorXd& scale) {
  if (scale.size() != mesh.element_count())
    throw std::invalid_argument("simulate_build: material scale size mismatch");
  for (int e = 0; e < scale.size(); ++e)
    if (!(scale[e] > 0.0) || scale[e] > 1.0)
      throw std::invalid_argument("simulate_build: material scale must lie in (0,1]");
}

}  // namespace

std::vector<std::uint8_t> active_node_mask(const Mesh2D& mesh, int layer) {
  // activation is a contiguous bottom-up stack: node rows up to the top of
  // the last active element row are touched by active elements
  const int top_node_row = layer * mesh.rows_per_layer();
  std::vector<std::uint8_t> keep(mesh.node_count(), 0);
  for (int k = 0; k < mesh.node_count(); ++k)
    if (mesh.node_row(k) <= top_node_row) keep[k] = 1;
  return keep;
}

BuildResult simulate_build(const Mesh2D& mesh, const ElasticityModel& model,
                           const BuildConfig& config, const Eigen::VectorXd& material_scale,
                           BuildSystems* keep_systems, int workers) {
  if (config.layers != mesh.layers)
    throw std::invalid_argument("simulate_build: layer count does not match the mesh partition");
  if (!(config.inactive_ratio > 0.0) || config.inactive_ratio >= 1.0)
    throw std::invalid_argument("simulate_build: inactive ratio must lie in (0,1)");
  check_material_scale(mesh, material_scale);

  const auto substrate_nodes = select_boundary_nodes(mesh, config.substrate);
  const auto fixed = fixed_dof_mask(mesh, dirichlet_dofs(substrate_nodes));
  const int m = config.layers;
  const bool cache = keep_systems && mesh.dof_count() <= kFactorCacheDofLimit;

  BuildResult result;
  result.layer_displacement.assign(m, Eigen::VectorXd());
  result.layer_stress.assign(m, Eigen::Matrix3Xd());
  if (keep_systems) {
    keep_systems->per_layer.assign(m, nullptr);
    keep_systems->cached = cache;
  }

  detail::parallel_layers(m, workers, [&](int step) {
    const int layer = step + 1;
    const auto masks = layer_mask(mesh, layer);

    Eigen::VectorXd scale(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
      scale[e] = material_scale[e] * (masks.active[e] ? 1.0 : config.inactive_ratio);

    auto system = std::make_shared<LinearSystem>(
        assemble_constrained_stiffness(mesh, scale, model, fixed), fixed);
    const Eigen::VectorXd load =
        eigenstrain_load(mesh, config.inherent_strain, masks.inherent, scale, model);

    Eigen::VectorXd u;
    try {
      u = system->solve(load);
    } catch (const SolverError& err) {
      throw SolverError(err.kind, "build step " + std::to_string(layer) + ": " + err.what(),
                        layer);
    }

    const auto keep = active_node_mask(mesh, layer);
    for (int k = 0; k < mesh.node_count(); ++k)
      if (!keep[k]) u[2 * k] = u[2 * k + 1] = 0.0;

    auto fields = recover_strain_stress(mesh, u, config.inherent_strain, masks.inherent, model, scale);
    for (int e = 0; e < mesh.element_count(); ++e)
      if (!masks.active[e]) fields.stress.col(e).setZero();

    result.layer_displacement[step] = std::move(u);
    result.layer_stress[step] = std::move(fields.stress);
    if (cache) keep_systems->per_layer[step] = std::move(system);
  });

  result.displacement = Eigen::VectorXd::Zero(mesh.dof_count());
  result.stress = Eigen::Matrix3Xd::Zero(3, mesh.element_count());
  for (int step = 0; step < m; ++step) {
    result.displacement += result.layer_displacement[step];
    result.stress += result.layer_stress[step];
  }
  return result;
}

Eigen::VectorXd springback_cut(const Mesh2D& mesh, const ElasticityModel& model,
                               const BuildResult& build, const BoundarySelector& new_fixture,
                               const std::vector<std::uint8_t>& release_mask,
                               const Eigen::VectorXd* material_scale) {
  if (static_cast<int>(release_mask.size()) != mesh.element_count())
    throw std::invalid_argument("springback_cut: release mask size mismatch");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.element_count());
  const Eigen::VectorXd& scale = material_scale ? *material_scale : ones;

  // stored elastic strain of the accumulated state
  Eigen::Matrix3Xd elastic(3, mesh.element_count());
  const Eigen::Matrix3d Cinv = model.C.inverse();
  for (int e = 0; e < mesh.element_count(); ++e)
    elastic.col(e) = Cinv * (build.stress.col(e) / scale[e]);

  const auto fixture_nodes = select_boundary_nodes(mesh, new_fixture);
  const auto fixed = fixed_dof_mask(mesh, dirichlet_dofs(fixture_nodes));
  LinearSystem system(assemble_constrained_stiffness(mesh, scale, model, fixed), fixed);

  // incremental equilibrium after the cut: σ_new = σ_accum + C ε(u) with
  // div σ_new = 0, so the released strain enters with a negative sign
  const Eigen::VectorXd f = eigenstrain_load_field(mesh, elastic, release_mask, scale, model);
  return system.solve(-f);
}

std::vector<std::pair<double, double>> top_surface_profile(const Mesh2D& mesh,
                                                           const Eigen::VectorXd& displacement) {
  if (displacement.size() != mesh.dof_count())
    throw std::invalid_argument("top_surface_profile: displacement size mismatch");
  std::vector<std::pair<double, double>> profile;
  profile.reserve(mesh.nx + 1);
  for (int i = 0; i <= mesh.nx; ++i) {
    const int node = mesh.node_index(i, mesh.ny);
    profile.emplace_back(i * mesh.dx(), displacement[2 * node + 1]);
  }
  return profile;
}

IdentifyResult identify_inherent_strain(const Mesh2D& mesh, const ElasticityModel& model,
                                        const BuildConfig& config_template,
                                        const std::vector<double>& measured_uy) {
  if (static_cast<int>(measured_uy.size()) != mesh.nx + 1)
    throw std::invalid_argument("identify: measured profile must have one sample per top node");

  BuildConfig unit = config_template;
  unit.inherent_strain = EigenstrainTensor{1.0, 0.0};
  const auto build = simulate_build(mesh, model, unit, Eigen::VectorXd::Ones(mesh.element_count()));
  const auto profile = top_surface_profile(mesh, build.displacement);

  double pp = 0.0, pm = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    pp += profile[k].second * profile[k].second;
    pm += profile[k].second * measured_uy[k];
  }
  if (pp == 0.0)
    throw std::invalid_argument("identify: degenerate geometry, unit-strain profile vanishes");

  IdentifyResult out;
  out.strain_value = pm / pp;
  double rss = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double r = out.strain_value * profile[k].second - measured_uy[k];
    rss += r * r;
  }
  out.residual_norm = std::sqrt(rss);
  return out;
}

}  // namespace distopt
