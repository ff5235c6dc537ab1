#pragma once

// First-quantized 1-D lattice surrogate of the full-blown model: smeared
// mass-density collapse operators A(x_k) (diagonal in the position basis),
// a free-particle Hamiltonian from the open-boundary lattice Laplacian, and
// Strang-split evolution under a lattice noise field w(x_k, t_j).

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "cqc/common.hpp"
#include "cqc/dynamics.hpp"
#include "cqc/linalg.hpp"
#include "cqc/noise.hpp"

namespace cqc {

// Family of diagonal collapse operators, one per lattice site:
// A(x_k)|z> = mass_ratio (pi a^2)^{-1/4} exp(-(x_k - z)^2 / 2 a^2) |z>.
struct SmearedDensityOperator {
  RealVector sites;     // positions x_k; also the particle basis
  double dx = 1.0;
  double smear_len = 1.0;   // a
  double mass_ratio = 1.0;  // m / m0
  RealMatrix profile;       // profile(k, z): eigenvalue of A(x_k) on |z>
  bool coarse_lattice = false;  // dx >= smear_len: smearing unresolved

  int n_sites() const { return static_cast<int>(sites.size()); }

  // max over interior z of | sum_k profile(k,z)^2 dx - mass_ratio^2 |, the
  // Gaussian-overlap normalization residual. Sites closer than edge_margin
  // smearing lengths to a boundary lose Gaussian mass and are excluded.
  double normalization_residual(double edge_margin = 8.0) const {
    double worst = 0.0;
    const double lo = sites[0] + edge_margin * smear_len;
    const double hi = sites[n_sites() - 1] - edge_margin * smear_len;
    for (int z = 0; z < n_sites(); ++z) {
      if (sites[z] < lo || sites[z] > hi) continue;
      double s = profile.col(z).squaredNorm() * dx;
      worst = std::max(worst, std::abs(s - mass_ratio * mass_ratio));
    }
    return worst;
  }
};

inline SmearedDensityOperator build_smeared_A(const RealVector& sites, double dx,
                                              double smear_len, double mass_ratio) {
  require(smear_len > 0.0, "build_smeared_A: smearing length must be positive");
  require(dx > 0.0, "build_smeared_A: dx must be positive");
  require(sites.size() >= 1, "build_smeared_A: empty lattice");

  SmearedDensityOperator op;
  op.sites = sites;
  op.dx = dx;
  op.smear_len = smear_len;
  op.mass_ratio = mass_ratio;
  op.coarse_lattice = dx >= smear_len;

  const int n = op.n_sites();
  const double prefactor = mass_ratio * std::pow(kPi * smear_len * smear_len, -0.25);
  op.profile.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int z = 0; z < n; ++z) {
      double d = sites[k] - sites[z];
      op.profile(k, z) = prefactor * std::exp(-d * d / (2.0 * smear_len * smear_len));
    }
  return op;
}

// H = p^2 / 2m with open (Dirichlet) boundaries.
inline Matrix lattice_free_hamiltonian(int n_sites, double dx, double mass) {
  require(n_sites >= 2, "lattice_free_hamiltonian: need at least two sites");
  require(dx > 0.0 && mass > 0.0, "lattice_free_hamiltonian: need dx, mass > 0");
  Matrix h = Matrix::Zero(n_sites, n_sites);
  const double k0 = 1.0 / (2.0 * mass * dx * dx);
  for (int i = 0; i < n_sites; ++i) {
    h(i, i) = 2.0 * k0;
    if (i + 1 < n_sites) {
      h(i, i + 1) = -k0;
      h(i + 1, i) = -k0;
    }
  }
  return h;
}

namespace detail {

// mean and sd of the position density |psi|^2
inline std::pair<double, double> packet_moments(const RealVector& sites, const Vector& psi) {
  double mean = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) mean += sites[i] * std::norm(psi[i]);
  double var = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    double d = sites[i] - mean;
    var += d * d * std::norm(psi[i]);
  }
  return {mean, std::sqrt(std::max(var, 0.0))};
}

}  // namespace detail

// Evolve under the space-time noise field: per step a diagonal kernel
// exp(-(dt dx / 4 lambda) sum_k (w(x_k) - 2 lambda A(x_k))^2) between
// half-step kinetic unitaries. Runs whose packet comes within 5 sigma of a
// lattice edge are flagged.
inline CslRun evolve_lattice_csl(const StateVector& phi,
                                 const SmearedDensityOperator& a_ops,
                                 const Matrix& h_op, const NoiseTrajectory& traj,
                                 double lambda, const EvolutionOptions& opts = {}) {
  require(lambda > 0.0, "evolve_lattice_csl: lambda must be positive");
  const int n = a_ops.n_sites();
  require(phi.dim() == n, "evolve_lattice_csl: state/lattice dim mismatch");
  require(traj.sites == n, "evolve_lattice_csl: trajectory/lattice site mismatch");
  require(h_op.rows() == 0 || h_op.rows() == n, "evolve_lattice_csl: bad Hamiltonian dim");

  const double dt = traj.grid.dt;
  const double dx = traj.dx;

  const bool free_of_h = h_op.rows() == 0 || h_op.cwiseAbs().maxCoeff() == 0.0;
  Matrix u_half;
  if (!free_of_h) u_half = expm_hermitian(h_op, -kImag * dt / 2.0);

  // sum_k A_k(z)^2, fixed over the run
  RealVector a2(n);
  for (int z = 0; z < n; ++z) a2[z] = a_ops.profile.col(z).squaredNorm();

  CslRun run;
  run.measure_tag = traj.measure_tag;
  run.seed = traj.seed;
  run.stream = traj.stream;

  Vector psi = phi.amps;
  double log_norm2 = std::log(psi.squaredNorm());
  psi /= std::sqrt(psi.squaredNorm());

  const double edge_lo = a_ops.sites[0];
  const double edge_hi = a_ops.sites[n - 1];

  for (int j = 0; j < traj.grid.steps; ++j) {
    if (!free_of_h) psi = u_half * psi;

    // exponent(z) = -(dt dx / 4 lambda) [ sum w^2 - 4 lambda (P^T w)(z) + 4 lambda^2 a2(z) ]
    RealVector cross = a_ops.profile.transpose() * traj.values.col(j);
    const double w2 = traj.values.col(j).squaredNorm();
    const double scale = dt * dx / (4.0 * lambda);
    double max_exp = -std::numeric_limits<double>::infinity();
    RealVector ex(n);
    for (int z = 0; z < n; ++z) {
      ex[z] = -scale * (w2 - 4.0 * lambda * cross[z] + 4.0 * lambda * lambda * a2[z]);
      max_exp = std::max(max_exp, ex[z]);
    }
    for (int z = 0; z < n; ++z) psi[z] *= std::exp(ex[z] - max_exp);
    log_norm2 += 2.0 * max_exp;  // amplitude factor exp(max_exp) twice in norm^2

    if (!free_of_h) psi = u_half * psi;

    double step_norm2 = psi.squaredNorm();
    log_norm2 += std::log(step_norm2);
    psi /= std::sqrt(step_norm2);

    auto [center, sd] = detail::packet_moments(a_ops.sites, psi);
    if (center - 5.0 * sd < edge_lo || center + 5.0 * sd > edge_hi)
      run.boundary_flagged = true;

    if (opts.checkpoint_every > 0 && (j + 1) % opts.checkpoint_every == 0) {
      Checkpoint cp;
      cp.time = (j + 1) * dt;
      cp.state = psi;
      cp.log_norm2 = log_norm2;
      run.checkpoints.push_back(std::move(cp));
    }
  }

  run.direction = psi;
  run.log_norm2 = log_norm2;
  run.log_weight = log_norm2 + traj.sum_sq() / (2.0 * lambda);
  run.deweighted = log_norm2 < opts.deweight_log_floor;
  return run;
}

// Physical-measure sampling on the lattice. Per step: pick a position branch
// z with probability |psi_z|^2 at the kernel point, then draw each cell
// w(x_k) ~ Normal(2 lambda A_k(z), lambda/(dt dx)).
inline PhysicalSample sample_physical_lattice(const StateVector& phi,
                                              const SmearedDensityOperator& a_ops,
                                              const Matrix& h_op,
                                              const TimeGrid& grid, double lambda,
                                              std::uint64_t seed,
                                              std::uint64_t stream = 0) {
  require(lambda > 0.0, "sample_physical_lattice: lambda must be positive");
  require(phi.is_normalized(), "sample_physical_lattice: initial state must be normalized");
  const int n = a_ops.n_sites();
  require(phi.dim() == n, "sample_physical_lattice: dim mismatch");

  const double dt = grid.dt;
  const double dx = a_ops.dx;
  const double sigma = std::sqrt(lambda / (dt * dx));

  const bool free_of_h = h_op.rows() == 0 || h_op.cwiseAbs().maxCoeff() == 0.0;
  Matrix u_half;
  if (!free_of_h) u_half = expm_hermitian(h_op, -kImag * dt / 2.0);

  RealVector a2(n);
  for (int z = 0; z < n; ++z) a2[z] = a_ops.profile.col(z).squaredNorm();

  NoiseTrajectory traj;
  traj.grid = grid;
  traj.sites = n;
  traj.dx = dx;
  traj.measure_tag = MeasureTag::physical;
  traj.seed = seed;
  traj.stream = stream;
  traj.values.resize(n, grid.steps);

  CounterRng rng(seed, stream);
  Vector psi = phi.amps;

  for (int j = 0; j < grid.steps; ++j) {
    if (!free_of_h) psi = u_half * psi;

    double u = rng.uniform() * psi.squaredNorm();
    int branch = n - 1;
    double acc = 0.0;
    for (int z = 0; z < n; ++z) {
      acc += std::norm(psi[z]);
      if (u <= acc) {
        branch = z;
        break;
      }
    }

    for (int k = 0; k < n; ++k)
      traj.values(k, j) = 2.0 * lambda * a_ops.profile(k, branch) + sigma * rng.normal();

    RealVector cross = a_ops.profile.transpose() * traj.values.col(j);
    const double scale = dt * dx / (4.0 * lambda);
    double max_exp = -std::numeric_limits<double>::infinity();
    RealVector ex(n);
    for (int z = 0; z < n; ++z) {
      ex[z] = -scale * (-4.0 * lambda * cross[z] + 4.0 * lambda * lambda * a2[z]);
      max_exp = std::max(max_exp, ex[z]);
    }
    for (int z = 0; z < n; ++z) psi[z] *= std::exp(ex[z] - max_exp);

    if (!free_of_h) psi = u_half * psi;
    psi /= std::sqrt(psi.squaredNorm());
  }

  return {std::move(traj), StateVector(std::move(psi))};
}

// Gaussian wave packet, normalized on the lattice.
inline StateVector gaussian_packet(const RealVector& sites, double center,
                                   double width, double momentum = 0.0) {
  Vector amps(sites.size());
  for (Eigen::Index i = 0; i < sites.size(); ++i) {
    double d = sites[i] - center;
    amps[i] = std::exp(Complex(-d * d / (4.0 * width * width), momentum * sites[i]));
  }
  amps /= std::sqrt(amps.squaredNorm());
  return StateVector(std::move(amps));
}

}  // namespace cqc
