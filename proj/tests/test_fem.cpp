#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "distopt/fem.hpp"

using namespace distopt;

namespace {

// uniaxial tension patch: unit square, left-edge rollers plus a pinned
// corner, traction t_x on the right edge; exact solution is sigma_xx = t_x
struct UniaxialPatch {
  Mesh2D mesh;
  ElasticityModel model;
  Eigen::VectorXd u;
  double traction;

  UniaxialPatch(int nx, int ny, double E = 75000.0, double nu = 0.34, double t = 10.0)
      : mesh(build_structured_mesh(1, 1, nx, ny, 1)),
        model(plane_stress_model(E, nu)),
        traction(t) {
    std::vector<int> fixed;
    for (const int n : select_boundary_nodes(mesh, BoundarySelector::left_edge()))
      fixed.push_back(2 * n);
    fixed.push_back(2 * mesh.node_index(0, 0) + 1);
    const TractionBC bc{select_boundary_edges(mesh, BoundarySelector::right_edge()),
                        Eigen::Vector2d(t, 0)};
    const auto K =
        assemble_stiffness(mesh, Eigen::VectorXd::Ones(mesh.element_count()), model);
    u = solve(mesh, K, traction_load(mesh, bc), fixed);
  }
};

}  // namespace

TEST_SUITE_BEGIN("fem");

TEST_CASE("plane stress elasticity tensor") {
  SUBCASE("C11 equals E/(1-nu^2)") {
    const auto m = plane_stress_model(75000, 0.34);
    const double expected = 75000.0 / (1.0 - 0.34 * 0.34);
    CHECK(m.C(0, 0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(m.C(0, 1) == doctest::Approx(0.34 * expected).epsilon(1e-14));
  }
  SUBCASE("nu = 0 decouples the axes") {
    const auto m = plane_stress_model(1, 0);
    CHECK(m.C(0, 0) == doctest::Approx(1.0));
    CHECK(m.C(1, 1) == doctest::Approx(1.0));
    CHECK(m.C(0, 1) == doctest::Approx(0.0));
    CHECK(m.C(2, 2) == doctest::Approx(0.5));
  }
  SUBCASE("polarization contraction at nu = 0: uniaxial strain gives 3E") {
    const auto m = plane_stress_model(1, 0);
    const Eigen::Vector3d eps(1, 0, 0);
    CHECK(eps.dot(m.A * eps) == doctest::Approx(3.0).epsilon(1e-14));
  }
  SUBCASE("rejects the incompressible limit") {
    CHECK_THROWS_AS(plane_stress_model(1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(plane_stress_model(1, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(plane_stress_model(0, 0.3), std::invalid_argument);
  }
  SUBCASE("C is symmetric positive definite across the admissible range") {
    for (const double nu : {0.0, 0.1, 0.34, 0.49}) {
      const auto m = plane_stress_model(75000, nu);
      CHECK((m.C - m.C.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m.C);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("stiffness assembly") {
  const auto mesh = build_structured_mesh(4, 2, 4, 2, 1);
  const auto model = plane_stress_model(200, 0.3);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.element_count());

  SUBCASE("uniform scale doubling doubles the matrix") {
    const auto K1 = assemble_stiffness(mesh, ones, model);
    const auto K2 = assemble_stiffness(mesh, 2.0 * ones, model);
    CHECK((Eigen::MatrixXd(K2) - 2.0 * Eigen::MatrixXd(K1)).cwiseAbs().maxCoeff() <
          1e-12 * Eigen::MatrixXd(K1).cwiseAbs().maxCoeff());
  }
  SUBCASE("assembled matrix is symmetric") {
    Eigen::VectorXd scale(mesh.element_count());
    for (int e = 0; e < scale.size(); ++e) scale[e] = 0.1 + 0.9 * ((e * 7919) % 13) / 13.0;
    const auto K = assemble_stiffness(mesh, scale, model);
    const Eigen::MatrixXd D(K);
    CHECK((D - D.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * D.cwiseAbs().maxCoeff());
  }
  SUBCASE("checkerboard assembly equals the sum of two masked assemblies") {
    Eigen::VectorXd a = Eigen::VectorXd::Ones(mesh.element_count());
    Eigen::VectorXd b = Eigen::VectorXd::Ones(mesh.element_count());
    const double d = 1e-3;
    for (int e = 0; e < mesh.element_count(); ++e) {
      const bool odd = (mesh.element_col(e) + mesh.element_row(e)) % 2 == 1;
      // masked assemblies realized with a vanishing scale on the other part
      a[e] = odd ? 1.0 : 1e-300;
      b[e] = odd ? 1e-300 : d;
    }
    Eigen::VectorXd combined(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
      combined[e] = (mesh.element_col(e) + mesh.element_row(e)) % 2 == 1 ? 1.0 : d;
    const Eigen::MatrixXd K(assemble_stiffness(mesh, combined, model));
    const Eigen::MatrixXd Ksum(assemble_stiffness(mesh, a, model));
    const Eigen::MatrixXd Kb(assemble_stiffness(mesh, b, model));
    CHECK((K - (Ksum + Kb)).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
  }
  SUBCASE("single unconstrained element has exactly the three rigid modes") {
    const auto Ke = element_stiffness(model, 0.7, 1.3);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(Ke);
    const auto ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    int zero_modes = 0;
    for (int k = 0; k < 8; ++k)
      if (std::abs(ev[k]) < 1e-12 * scale) ++zero_modes;
    CHECK(zero_modes == 3);
  }
}

TEST_CASE("eigenstrain load") {
  const auto model = plane_stress_model(1, 0);
  const auto mesh = build_structured_mesh(1, 1, 1, 1, 1);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(1);
  const std::vector<std::uint8_t> all(1, 1);

  SUBCASE("zero strain yields a zero vector") {
    const auto f = eigenstrain_load(mesh, EigenstrainTensor{0, 0}, all, ones, model);
    CHECK(f.norm() == 0.0);
  }
  SUBCASE("linearity in the strain") {
    const auto f1 = eigenstrain_load(mesh, EigenstrainTensor{-0.25, -0.25}, all, ones, model);
    const auto f2 = eigenstrain_load(mesh, EigenstrainTensor{-0.5, -0.5}, all, ones, model);
    CHECK((f2 - 2.0 * f1).cwiseAbs().maxCoeff() <= 1e-15 * f1.cwiseAbs().maxCoeff());
  }
  SUBCASE("unit element closed form: contraction pulls every corner inward") {
    // independent oracle: f_a = sigma*_xx * int dN_a/dx, with the integrals
    // of the bilinear shape gradients over the unit square equal to +-1/2
    const auto f = eigenstrain_load(mesh, EigenstrainTensor{-0.25, -0.25}, all, ones, model);
    const Eigen::Vector2d expected[4] = {{0.125, 0.125}, {-0.125, 0.125}, {-0.125, -0.125},
                                         {0.125, -0.125}};
    const auto nodes = mesh.element_nodes(0);
    for (int a = 0; a < 4; ++a) {
      CHECK(f[2 * nodes[a]] == doctest::Approx(expected[a][0]).epsilon(1e-13));
      CHECK(f[2 * nodes[a] + 1] == doctest::Approx(expected[a][1]).epsilon(1e-13));
    }
  }
  SUBCASE("load scales with the element stiffness scale") {
    const Eigen::VectorXd half = 0.5 * ones;
    const auto f1 = eigenstrain_load(mesh, EigenstrainTensor{-0.25, 0}, all, ones, model);
    const auto f2 = eigenstrain_load(mesh, EigenstrainTensor{-0.25, 0}, all, half, model);
    CHECK((f1 - 2.0 * f2).cwiseAbs().maxCoeff() <= 1e-15 * f1.cwiseAbs().maxCoeff());
  }
  SUBCASE("mask restricts the support") {
    const auto mesh2 = build_structured_mesh(2, 1, 2, 1, 1);
    std::vector<std::uint8_t> left_only = {1, 0};
    const auto f = eigenstrain_load(mesh2, EigenstrainTensor{-0.25, 0}, left_only,
                                    Eigen::VectorXd::Ones(2), model);
    for (int k = 0; k < mesh2.node_count(); ++k)
      if (mesh2.node_col(k) == 2) {
        CHECK(f[2 * k] == 0.0);
        CHECK(f[2 * k + 1] == 0.0);
      }
  }
}

TEST_CASE("traction load") {
  const auto mesh = build_structured_mesh(2, 1, 2, 1, 1);

  SUBCASE("total force equals traction times loaded length") {
    // bottom edge spans length 2 with t = (0,-10)
    TractionBC bc{select_boundary_edges(mesh, BoundarySelector::bottom_span(0, 2)),
                  Eigen::Vector2d(0, -10)};
    const auto f = traction_load(mesh, bc);
    double total = 0;
    for (int k = 0; k < mesh.node_count(); ++k) total += f[2 * k + 1];
    CHECK(total == doctest::Approx(-20.0).epsilon(1e-14));
  }
  SUBCASE("zero traction") {
    TractionBC bc{select_boundary_edges(mesh, BoundarySelector::bottom_span(0, 2)),
                  Eigen::Vector2d(0, 0)};
    CHECK(traction_load(mesh, bc).norm() == 0.0);
  }
  SUBCASE("two adjacent unit edges: shared node takes -1, ends -0.5") {
    TractionBC bc{select_boundary_edges(mesh, BoundarySelector::bottom_span(0, 2)),
                  Eigen::Vector2d(0, -1)};
    const auto f = traction_load(mesh, bc);
    CHECK(f[2 * mesh.node_index(0, 0) + 1] == doctest::Approx(-0.5));
    CHECK(f[2 * mesh.node_index(1, 0) + 1] == doctest::Approx(-1.0));
    CHECK(f[2 * mesh.node_index(2, 0) + 1] == doctest::Approx(-0.5));
  }
  SUBCASE("empty edge set is rejected") {
    CHECK_THROWS(traction_load(mesh, TractionBC{{}, Eigen::Vector2d(0, -1)}));
  }
}

TEST_CASE("body force load") {
  const auto mesh = build_structured_mesh(1, 1, 1, 1, 1);
  const std::vector<std::uint8_t> all(1, 1);

  SUBCASE("zero density") {
    const Eigen::VectorXd rho = Eigen::VectorXd::Zero(mesh.dof_count());
    CHECK(body_force_load(mesh, rho, all).norm() == 0.0);
  }
  SUBCASE("constant density integrates to the element area, split equally") {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(mesh.dof_count());
    for (int k = 0; k < mesh.node_count(); ++k) rho[2 * k + 1] = -1.0;
    const auto f = body_force_load(mesh, rho, all);
    double total = 0;
    for (int k = 0; k < mesh.node_count(); ++k) {
      CHECK(f[2 * k + 1] == doctest::Approx(-0.25).epsilon(1e-14));
      total += f[2 * k + 1];
    }
    CHECK(total == doctest::Approx(-1.0).epsilon(1e-14));
  }
  SUBCASE("excluded elements contribute nothing") {
    Eigen::VectorXd rho = Eigen::VectorXd::Constant(mesh.dof_count(), -1.0);
    const std::vector<std::uint8_t> none(1, 0);
    CHECK(body_force_load(mesh, rho, none).norm() == 0.0);
  }
}

TEST_CASE("linear solve") {
  SUBCASE("zero load gives the zero field") {
    UniaxialPatch patch(3, 3);
    const auto K = assemble_stiffness(patch.mesh,
                                      Eigen::VectorXd::Ones(patch.mesh.element_count()),
                                      patch.model);
    std::vector<int> fixed;
    for (const int n : select_boundary_nodes(patch.mesh, BoundarySelector::left_edge())) {
      fixed.push_back(2 * n);
      fixed.push_back(2 * n + 1);
    }
    const auto u = solve(patch.mesh, K, Eigen::VectorXd::Zero(patch.mesh.dof_count()), fixed);
    CHECK(u.norm() == 0.0);
  }
  SUBCASE("uniaxial patch reproduces the closed form") {
    for (const auto [nx, ny] : {std::pair{1, 1}, std::pair{4, 4}, std::pair{17, 9}}) {
      UniaxialPatch patch(nx, ny);
      const double exact = 10.0 / 75000.0;
      for (int k = 0; k < patch.mesh.node_count(); ++k) {
        const double x = patch.mesh.node_x(k), y = patch.mesh.node_y(k);
        CHECK(patch.u[2 * k] == doctest::Approx(exact * x).epsilon(1e-8));
        CHECK(patch.u[2 * k + 1] ==
              doctest::Approx(-0.34 * exact * y).epsilon(1e-8));
      }
    }
  }
  SUBCASE("constant stress state recovered exactly") {
    UniaxialPatch patch(17, 9);
    const auto fields = recover_strain_stress(
        patch.mesh, patch.u, EigenstrainTensor{},
        std::vector<std::uint8_t>(patch.mesh.element_count(), 0), patch.model,
        Eigen::VectorXd::Ones(patch.mesh.element_count()));
    for (int e = 0; e < patch.mesh.element_count(); ++e) {
      CHECK(fields.stress(0, e) == doctest::Approx(10.0).epsilon(1e-8));
      CHECK(std::abs(fields.stress(1, e)) < 1e-7);
      CHECK(std::abs(fields.stress(2, e)) < 1e-7);
    }
  }
  SUBCASE("under-constrained systems are reported as singular") {
    const auto mesh = build_structured_mesh(2, 2, 2, 2, 1);
    const auto model = plane_stress_model(1, 0.3);
    const auto K = assemble_stiffness(mesh, Eigen::VectorXd::Ones(4), model);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
    f[3] = 1.0;
    try {
      solve(mesh, K, f, {});
      FAIL("expected a solver error");
    } catch (const SolverError& err) {
      CHECK(err.kind == SolveFailure::Singular);
    }
  }
}

TEST_CASE("solve linearity property") {
  UniaxialPatch patch(5, 4);
  const auto K = assemble_stiffness(patch.mesh,
                                    Eigen::VectorXd::Ones(patch.mesh.element_count()),
                                    patch.model);
  std::vector<int> fixed;
  for (const int n : select_boundary_nodes(patch.mesh, BoundarySelector::left_edge())) {
    fixed.push_back(2 * n);
    fixed.push_back(2 * n + 1);
  }
  Eigen::VectorXd f1 = Eigen::VectorXd::Zero(patch.mesh.dof_count());
  Eigen::VectorXd f2 = Eigen::VectorXd::Zero(patch.mesh.dof_count());
  f1[2 * patch.mesh.node_index(5, 4) + 1] = -3.0;
  f2[2 * patch.mesh.node_index(5, 0)] = 7.0;
  const auto ua = solve(patch.mesh, K, f1, fixed);
  const auto ub = solve(patch.mesh, K, f2, fixed);
  const auto uc = solve(patch.mesh, K, 2.0 * f1 + 0.5 * f2, fixed);
  CHECK((uc - 2.0 * ua - 0.5 * ub).cwiseAbs().maxCoeff() <=
        1e-10 * uc.cwiseAbs().maxCoeff());
}

TEST_CASE("work identity: external work equals strain energy") {
  UniaxialPatch patch(6, 3);
  const auto K = assemble_stiffness(patch.mesh,
                                    Eigen::VectorXd::Ones(patch.mesh.element_count()),
                                    patch.model);
  const TractionBC bc{select_boundary_edges(patch.mesh, BoundarySelector::right_edge()),
                      Eigen::Vector2d(10, 0)};
  const auto f = traction_load(patch.mesh, bc);
  const double work = f.dot(patch.u);
  const double energy = patch.u.dot(K * patch.u);
  CHECK(work == doctest::Approx(energy).epsilon(1e-10));
}

TEST_CASE("strain/stress recovery") {
  const auto mesh = build_structured_mesh(3, 2, 3, 2, 1);
  const auto model = plane_stress_model(75000, 0.34);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.element_count());
  const std::vector<std::uint8_t> all(mesh.element_count(), 1);

  SUBCASE("rigid translation carries no strain or stress") {
    Eigen::VectorXd u(mesh.dof_count());
    for (int k = 0; k < mesh.node_count(); ++k) {
      u[2 * k] = 0.7;
      u[2 * k + 1] = 0.7;
    }
    const auto fields = recover_strain_stress(mesh, u, EigenstrainTensor{},
                                              std::vector<std::uint8_t>(mesh.element_count(), 0),
                                              model, ones);
    CHECK(fields.strain.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(fields.stress.cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("a free uniform shrink matching the eigenstrain is stress-free") {
    const EigenstrainTensor inh{-0.25, -0.1};
    Eigen::VectorXd u(mesh.dof_count());
    for (int k = 0; k < mesh.node_count(); ++k) {
      u[2 * k] = inh.ex * mesh.node_x(k);
      u[2 * k + 1] = inh.ey * mesh.node_y(k);
    }
    const auto fields = recover_strain_stress(mesh, u, inh, all, model, ones);
    CHECK(fields.stress.cwiseAbs().maxCoeff() < 1e-9 * model.youngs_modulus);
    CHECK(fields.strain(0, 0) == doctest::Approx(-0.25));
    CHECK(fields.strain(1, 0) == doctest::Approx(-0.1));
  }
}

TEST_SUITE_END();
