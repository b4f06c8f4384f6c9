#include <doctest.h>

#include <cmath>
#include <random>

#include "distopt/level_set.hpp"

using namespace distopt;

TEST_SUITE_BEGIN("level_set");

TEST_CASE("smoothed heaviside values") {
  CHECK(heaviside(0.0, 0.5) == 0.5);
  CHECK(heaviside(0.5, 0.5) == 1.0);
  CHECK(heaviside(-0.5, 0.5) == 0.0);
  CHECK(heaviside(0.7, 0.5) == 1.0);
  CHECK(heaviside(-2.0, 0.5) == 0.0);
  // quintic evaluated at phi/w = -1/2
  CHECK(heaviside(-0.25, 0.5) == 0.103515625);
  CHECK(heaviside(0.25, 0.5) == doctest::Approx(1.0 - 0.103515625).epsilon(1e-15));
}

TEST_CASE("heaviside is C1 at the transition ends") {
  const double w = 0.5, eps = 1e-9;
  // value continuity
  CHECK(std::abs(heaviside(w - eps, w) - 1.0) < 1e-12);
  CHECK(std::abs(heaviside(-w + eps, w) - 0.0) < 1e-12);
  // one-sided difference quotients vanish like the outer branches
  const double d_in = (heaviside(w, w) - heaviside(w - eps, w)) / eps;
  const double d_out = (heaviside(w + eps, w) - heaviside(w, w)) / eps;
  CHECK(std::abs(d_in) < 1e-3);
  CHECK(std::abs(d_out) < 1e-15);
}

TEST_CASE("heaviside is monotone non-decreasing") {
  double prev = -1.0;
  for (int k = -200; k <= 200; ++k) {
    const double h = heaviside(k * 0.005, 0.5);
    CHECK(h >= prev);
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
    prev = h;
  }
}

TEST_CASE("ersatz scale") {
  const double d = 1e-3;
  CHECK(ersatz_scale(0.5, 0.5, d) == 1.0);
  CHECK(ersatz_scale(2.0, 0.5, d) == 1.0);
  CHECK(ersatz_scale(-0.5, 0.5, d) == doctest::Approx(d).epsilon(1e-15));
  CHECK(ersatz_scale(0.0, 0.5, d) == doctest::Approx((1.0 - d) / 2.0 + d).epsilon(1e-15));
  CHECK_THROWS_AS(ersatz_scale(0.0, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("characteristic function") {
  CHECK(characteristic(0.3) == 1);
  CHECK(characteristic(0.0) == 1);
  CHECK(characteristic(-0.7) == 0);
}

TEST_CASE("volume fraction of uniform fields") {
  const auto mesh = build_structured_mesh(8, 4, 8, 4, 2);
  CHECK(volume_fraction(mesh, Eigen::VectorXd::Ones(mesh.node_count()), 0.5) == 1.0);
  CHECK(volume_fraction(mesh, -Eigen::VectorXd::Ones(mesh.node_count()), 0.5) == 0.0);
  CHECK(volume_fraction(mesh, Eigen::VectorXd::Zero(mesh.node_count()), 0.5) ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("reaction-diffusion step") {
  const auto mesh = build_structured_mesh(6, 4, 6, 4, 2);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd random_phi(mesh.node_count());
  for (int k = 0; k < mesh.node_count(); ++k) random_phi[k] = dist(rng);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(mesh.node_count());

  SUBCASE("zero sensitivity and zero tau leave the field untouched") {
    RdeSolver rde(mesh, RdeParams{0.0, 0.8, 0.1}, 0.5);
    const auto next = rde.step(random_phi, zero, 0.0);
    CHECK((next - random_phi).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("uniform fields are fixed points of pure diffusion") {
    RdeSolver rde(mesh, RdeParams{1e-2, 0.8, 0.1}, 0.5);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(mesh.node_count(), 0.37);
    const auto next = rde.step(uniform, zero, 0.0);
    CHECK((next - uniform).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("uniform negative sensitivity raises the field by K dt c, clamped") {
    RdeSolver rde(mesh, RdeParams{0.0, 0.8, 0.1}, 0.5);
    for (const double c : {1.0, 30.0}) {
      const Eigen::VectorXd sens = Eigen::VectorXd::Constant(mesh.node_count(), -c);
      const auto next = rde.step(zero, sens, 0.0);
      const double expected = std::min(1.0, 0.8 * 0.1 * c);
      for (int k = 0; k < next.size(); ++k)
        CHECK(next[k] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("diffusion does not increase the Dirichlet energy") {
    RdeSolver rde(mesh, RdeParams{1e-3, 0.8, 0.1}, 0.5);
    const auto next = rde.step_unclamped(random_phi, zero, 0.0);
    const double before = random_phi.dot(rde.laplacian() * random_phi);
    const double after = next.dot(rde.laplacian() * next);
    CHECK(after <= before * (1.0 + 1e-12));
  }
  SUBCASE("repeated zero-sensitivity steps with zero tau are idempotent") {
    RdeSolver rde(mesh, RdeParams{0.0, 0.8, 0.1}, 0.5);
    const auto once = rde.step(random_phi, zero, 0.0);
    const auto twice = rde.step(once, zero, 0.0);
    CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("volume response is non-increasing in the shift") {
    RdeSolver rde(mesh, RdeParams{1e-4, 0.8, 0.1}, 0.5);
    Eigen::VectorXd sens(mesh.node_count());
    for (int k = 0; k < mesh.node_count(); ++k) sens[k] = dist(rng);
    double prev = 2.0;
    for (const double shift : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0}) {
      const double vol = volume_fraction(mesh, rde.step(random_phi, sens, shift), 0.5);
      CHECK(vol <= prev + 1e-12);
      prev = vol;
    }
  }
}

TEST_CASE("volume controlled step") {
  const auto mesh = build_structured_mesh(6, 4, 6, 4, 2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(mesh.node_count());
  RdeSolver rde(mesh, RdeParams{1e-4, 0.8, 0.1}, 0.5);

  SUBCASE("already feasible full-material field stays put with zero shift") {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.node_count());
    const auto [next, lambda] = rde.volume_controlled_step(ones, zero, 1.0);
    CHECK(lambda == 0.0);
    CHECK((next - ones).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("uniform field reaches a reduced target, shift matches the scalar oracle") {
    const auto [next, lambda] = rde.volume_controlled_step(zero, zero, 0.25);
    CHECK(lambda > 0.0);
    const double vol = volume_fraction(mesh, next, 0.5);
    CHECK(std::abs(vol - 0.25) <= 0.005);
    // closed form: the stepped field is uniform, clamp inactive, so
    // volume = H(-dt K lambda; w); bisect that scalar relation directly
    double lo = 0.0, hi = 0.5 / (0.1 * 0.8);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (heaviside(-0.1 * 0.8 * mid, 0.5) > 0.25)
        lo = mid;
      else
        hi = mid;
    }
    CHECK(lambda == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-3));
  }
  SUBCASE("postcondition holds for a rough sensitivity field") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Eigen::VectorXd phi(mesh.node_count()), sens(mesh.node_count());
    for (int k = 0; k < mesh.node_count(); ++k) {
      phi[k] = dist(rng) / 2.0;
      sens[k] = dist(rng);
    }
    for (const double target : {0.3, 0.5, 0.8}) {
      const auto [next, lambda] = rde.volume_controlled_step(phi, sens, target);
      (void)lambda;
      CHECK(std::abs(volume_fraction(mesh, next, 0.5) - target) <= 0.005);
    }
  }
  SUBCASE("rejects nonsensical targets") {
    CHECK_THROWS(rde.volume_controlled_step(zero, zero, 0.0));
    CHECK_THROWS(rde.volume_controlled_step(zero, zero, 1.5));
  }
}

TEST_CASE("void component counting") {
  const auto mesh = build_structured_mesh(6, 4, 6, 4, 2);
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(mesh.node_count());
  CHECK(count_void_components(mesh, phi, 0.5) == 0);
  // carve two separated void pockets
  auto sink = [&](int i, int j) {
    for (int dj = 0; dj <= 1; ++dj)
      for (int di = 0; di <= 1; ++di) phi[mesh.node_index(i + di, j + dj)] = -1.0;
  };
  sink(1, 1);
  sink(4, 2);
  CHECK(count_void_components(mesh, phi, 0.5) == 2);
  CHECK(count_void_components(mesh, -Eigen::VectorXd::Ones(mesh.node_count()), 0.5) == 1);
}

TEST_SUITE_END();
