#include "distopt/level_set.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace distopt {

double heaviside(double phi, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("heaviside: width must be positive");
  if (phi > w) return 1.0;
  if (phi < -w) return 0.0;
  const double s = phi / w;
  const double s2 = s * s;
  return 0.5 + s * (15.0 / 16.0 - s2 * (5.0 / 8.0 - 3.0 / 16.0 * s2));
}

double ersatz_scale(double phi_element_mean, double w, double d) {
  if (!(d > 0.0) || !(d < 1.0))
    throw std::invalid_argument("ersatz_scale: void ratio must lie in (0,1)");
  return (1.0 - d) * heaviside(phi_element_mean, w) + d;
}

int characteristic(double phi) { return phi >= 0.0 ? 1 : 0; }

Eigen::VectorXd element_mean_phi(const Mesh2D& mesh, const Eigen::VectorXd& phi) {
  if (phi.size() != mesh.node_count())
    throw std::invalid_argument("element_mean_phi: field size mismatch");
  Eigen::VectorXd mean(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    mean[e] = 0.25 * (phi[nodes[0]] + phi[nodes[1]] + phi[nodes[2]] + phi[nodes[3]]);
  }
  return mean;
}

Eigen::VectorXd element_heaviside(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w) {
  Eigen::VectorXd h = element_mean_phi(mesh, phi);
  for (int e = 0; e < h.size(); ++e) h[e] = heaviside(h[e], w);
  return h;
}

Eigen::VectorXd element_ersatz(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w, double d) {
  Eigen::VectorXd s = element_mean_phi(mesh, phi);
  for (int e = 0; e < s.size(); ++e) s[e] = ersatz_scale(s[e], w, d);
  return s;
}

double volume_fraction(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w) {
  return element_heaviside(mesh, phi, w).sum() * mesh.element_area() / mesh.domain_area();
}

int count_void_components(const Mesh2D& mesh, const Eigen::VectorXd& phi, double w) {
  const Eigen::VectorXd h = element_heaviside(mesh, phi, w);
  std::vector<std::uint8_t> is_void(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) is_void[e] = h[e] < 0.5 ? 1 : 0;
  std::vector<std::uint8_t> seen(mesh.element_count(), 0);
  std::vector<int> stack;
  int components = 0;
  for (int start = 0; start < mesh.element_count(); ++start) {
    if (!is_void[start] || seen[start]) continue;
    ++components;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int e = stack.back();
      stack.pop_back();
      const int i = mesh.element_col(e), j = mesh.element_row(e);
      const int neighbors[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& nb : neighbors) {
        if (nb[0] < 0 || nb[0] >= mesh.nx || nb[1] < 0 || nb[1] >= mesh.ny) continue;
        const int n = mesh.element_index(nb[0], nb[1]);
        if (is_void[n] && !seen[n]) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
    }
  }
  return components;
}

RdeSolver::RdeSolver(const Mesh2D& mesh, const RdeParams& params, double transition_width)
    : mesh_(&mesh), params_(params), width_(transition_width) {
  if (!(params.gain > 0.0) || !(params.dt > 0.0) || params.tau < 0.0)
    throw std::invalid_argument("rde: requires K > 0, dt > 0, tau >= 0");
  const auto Me = element_mass(mesh.dx(), mesh.dy());
  const auto Le = element_laplacian(mesh.dx(), mesh.dy());
  std::vector<Eigen::Triplet<double>> mt, lt;
  mt.reserve(static_cast<std::size_t>(mesh.element_count()) * 16);
  lt.reserve(static_cast<std::size_t>(mesh.element_count()) * 16);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        mt.emplace_back(nodes[a], nodes[b], Me(a, b));
        lt.emplace_back(nodes[a], nodes[b], Le(a, b));
      }
  }
  mass_.resize(mesh.node_count(), mesh.node_count());
  laplacian_.resize(mesh.node_count(), mesh.node_count());
  mass_.setFromTriplets(mt.begin(), mt.end());
  laplacian_.setFromTriplets(lt.begin(), lt.end());
  // tau is quoted for a domain-normalized coordinate system; the |D| factor
  // is the Jacobian of that normalization, keeping the regularization scale
  // proportional to the design domain
  const SparseMat op =
      mass_ + params_.dt * params_.gain * params_.tau * mesh.domain_area() * laplacian_;
  op_.compute(op);
  if (op_.info() != Eigen::Success)
    throw SolverError(SolveFailure::Breakdown, "rde: operator factorization failed");
}

Eigen::VectorXd RdeSolver::step_unclamped(const Eigen::VectorXd& phi,
                                          const Eigen::VectorXd& sensitivity,
                                          double shift) const {
  if (phi.size() != mesh_->node_count() || sensitivity.size() != mesh_->node_count())
    throw std::invalid_argument("rde: field size mismatch");
  const Eigen::VectorXd reacted =
      phi - params_.dt * params_.gain * (sensitivity.array() + shift).matrix();
  Eigen::VectorXd next = op_.solve(mass_ * reacted);
  if (op_.info() != Eigen::Success)
    throw SolverError(SolveFailure::Breakdown, "rde: step solve failed");
  return next;
}

Eigen::VectorXd RdeSolver::step(const Eigen::VectorXd& phi, const Eigen::VectorXd& sensitivity,
                                double shift) const {
  Eigen::VectorXd next = step_unclamped(phi, sensitivity, shift);
  for (Eigen::Index k = 0; k < next.size(); ++k)
    next[k] = std::clamp(next[k], -1.0, 1.0);
  return next;
}

std::pair<Eigen::VectorXd, double> RdeSolver::volume_controlled_step(
    const Eigen::VectorXd& phi, const Eigen::VectorXd& sensitivity, double v_target,
    long* evaluations) const {
  if (!(v_target > 0.0) || v_target > 1.0)
    throw std::invalid_argument("volume_controlled_step: target must lie in (0,1]");
  // landing much tighter than the 0.005 contract band keeps the shift smooth
  // across iterations (a coarse landing quantizes lambda and the volume
  // chatter stalls the objective's convergence window)
  const double tight = 1e-5;
  const double band = std::min(0.005, 0.004 * std::max(v_target, 0.05));
  const auto volume_at = [&](double shift, Eigen::VectorXd& out) {
    out = step(phi, sensitivity, shift);
    if (evaluations) ++*evaluations;
    return volume_fraction(*mesh_, out, width_);
  };

  Eigen::VectorXd candidate;
  const double v0 = volume_at(0.0, candidate);
  if (v0 <= v_target && v0 >= v_target - tight) return {candidate, 0.0};

  // volume is non-increasing in the shift; expand the bracket geometrically
  // until it straddles the target, then bisect
  double lo = 0.0, hi = 0.0;
  if (v0 > v_target) {
    hi = 1.0;
    int expansions = 0;
    while (volume_at(hi, candidate) > v_target) {
      if (++expansions > 60)
        throw std::runtime_error("volume control: bracket expansion failed (upper)");
      hi *= 2.0;
    }
  } else {
    lo = -1.0;
    int expansions = 0;
    while (volume_at(lo, candidate) < v_target) {
      if (++expansions > 60)
        throw std::runtime_error("volume control: bracket expansion failed (lower)");
      lo *= 2.0;
    }
  }

  double best_shift = 0.0, best_err = std::abs(v0 - v_target);
  Eigen::VectorXd best = std::move(candidate);
  for (int iter = 0; iter < 60; ++iter) {
    const double shift = 0.5 * (lo + hi);
    Eigen::VectorXd stepped;
    const double volume = volume_at(shift, stepped);
    if (std::abs(volume - v_target) < best_err) {
      best_err = std::abs(volume - v_target);
      best_shift = shift;
      best = std::move(stepped);
    }
    if (best_err <= tight) break;
    if (volume > v_target)
      lo = shift;
    else
      hi = shift;
  }
  if (best_err <= band) return {best, best_shift};
  throw std::runtime_error("volume control: bisection failed to reach the target band");
}

}  // namespace distopt
