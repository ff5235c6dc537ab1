#pragma once

// White-noise trajectories under the raw Gaussian (vacuum) measure and under
// the exact CSL physical measure, plus trajectory statistics.
//
// Conventions: per time step the raw measure is i.i.d. Normal(0, lambda/dt);
// per lattice cell it is Normal(0, lambda/(dt*dx)). The physical sampler
// draws each step from the exact finite-dt Gaussian mixture implied by the
// one-step squared norm, so for H_A = 0 its output follows the CSL measure
// exactly at any dt.

#include <cstdint>
#include <utility>

#include "cqc/common.hpp"
#include "cqc/linalg.hpp"
#include "cqc/rng.hpp"

namespace cqc {

struct TimeGrid {
  double dt = 0.0;
  int steps = 0;

  TimeGrid() = default;
  TimeGrid(double dt_, int steps_) : dt(dt_), steps(steps_) {
    require(dt > 0.0, "TimeGrid: dt must be positive");
    require(steps >= 1, "TimeGrid: need at least one step");
  }

  double t_final() const { return dt * steps; }
};

enum class MeasureTag { raw, physical };

inline const char* to_string(MeasureTag tag) {
  return tag == MeasureTag::raw ? "raw" : "physical";
}

struct NoiseTrajectory {
  TimeGrid grid;
  int sites = 1;
  double dx = 1.0;             // lattice cell volume; 1 for the single-operator model
  RealMatrix values;           // sites x steps, w(x_k, t_j)
  MeasureTag measure_tag = MeasureTag::raw;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  bool is_lattice() const { return sites > 1; }

  // integral dt dx w^2 over the trajectory
  double sum_sq() const { return values.squaredNorm() * grid.dt * dx; }
};

// Importance weight of a trajectory relative to raw-measure sampling.
// Under raw sampling, exp(log_weight) averages to 1 (martingale).
struct MeasureWeight {
  double log_weight = 0.0;
};

inline NoiseTrajectory sample_lattice_raw(const TimeGrid& grid, int sites,
                                          double dx, double lambda,
                                          std::uint64_t seed,
                                          std::uint64_t stream = 0) {
  require(lambda > 0.0, "sample_lattice_raw: lambda must be positive");
  require(sites >= 1, "sample_lattice_raw: need at least one site");
  require(dx > 0.0, "sample_lattice_raw: dx must be positive");

  NoiseTrajectory traj;
  traj.grid = grid;
  traj.sites = sites;
  traj.dx = dx;
  traj.measure_tag = MeasureTag::raw;
  traj.seed = seed;
  traj.stream = stream;
  traj.values.resize(sites, grid.steps);

  const double sigma = std::sqrt(lambda / (grid.dt * dx));
  CounterRng rng(seed, stream);
  for (int j = 0; j < grid.steps; ++j)
    for (int k = 0; k < sites; ++k) traj.values(k, j) = sigma * rng.normal();
  return traj;
}

inline NoiseTrajectory sample_raw_white(const TimeGrid& grid, double lambda,
                                        std::uint64_t seed,
                                        std::uint64_t stream = 0) {
  return sample_lattice_raw(grid, 1, 1.0, lambda, seed, stream);
}

// a = (2 lambda t)^-1 integral_0^t w, the collapse-outcome statistic.
inline double time_average(const NoiseTrajectory& traj, double lambda) {
  require(lambda > 0.0, "time_average: lambda must be positive");
  require(!traj.is_lattice(), "time_average: defined for single-operator trajectories");
  double sum = traj.values.row(0).sum() * traj.grid.dt;
  return sum / (2.0 * lambda * traj.grid.t_final());
}

struct PhysicalSample {
  NoiseTrajectory trajectory;
  StateVector state;  // normalized CSL state for that trajectory
};

// Sequential sampling of the exact physical measure P_t(w)Dw for the
// single-operator model. Each step draws w from the Gaussian mixture
// sum_n p_n Normal(2 lambda a_n, lambda/dt), with p_n the squared amplitudes
// in the A-eigenbasis at the kernel application point of the Strang split.
inline PhysicalSample sample_physical_sequential(
    const StateVector& phi, const Matrix& a_op, const Matrix& h_op,
    const TimeGrid& grid, double lambda, std::uint64_t seed,
    std::uint64_t stream = 0) {
  require(lambda > 0.0, "sample_physical_sequential: lambda must be positive");
  require(phi.is_normalized(),
          "sample_physical_sequential: initial state must be normalized");
  require(a_op.rows() == phi.dim(), "sample_physical_sequential: dim mismatch");
  require_same_dim(a_op, h_op, "sample_physical_sequential");

  const EigenSystem a_eig = eig_hermitian(a_op);
  const int n = phi.dim();
  const double dt = grid.dt;
  const double sigma = std::sqrt(lambda / dt);

  const bool free_of_h = h_op.cwiseAbs().maxCoeff() == 0.0;
  Matrix u_half;
  if (!free_of_h) {
    // half-step unitary expressed in the A-eigenbasis
    Matrix h_in_a = a_eig.vectors.adjoint() * h_op * a_eig.vectors;
    u_half = expm_hermitian(h_in_a, -kImag * dt / 2.0);
  }

  NoiseTrajectory traj;
  traj.grid = grid;
  traj.measure_tag = MeasureTag::physical;
  traj.seed = seed;
  traj.stream = stream;
  traj.values.resize(1, grid.steps);

  CounterRng rng(seed, stream);
  Vector psi = a_eig.vectors.adjoint() * phi.amps;

  for (int j = 0; j < grid.steps; ++j) {
    if (!free_of_h) psi = u_half * psi;

    // branch probabilities at the kernel point
    double norm2 = psi.squaredNorm();
    double u = rng.uniform() * norm2;
    int branch = n - 1;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += std::norm(psi[k]);
      if (u <= acc) {
        branch = k;
        break;
      }
    }

    double w = 2.0 * lambda * a_eig.values[branch] + sigma * rng.normal();
    traj.values(0, j) = w;

    for (int k = 0; k < n; ++k) {
      double d = w - 2.0 * lambda * a_eig.values[k];
      psi[k] *= std::exp(-(dt / (4.0 * lambda)) * d * d);
    }
    if (!free_of_h) psi = u_half * psi;
    psi /= std::sqrt(psi.squaredNorm());
  }

  StateVector out(a_eig.vectors * psi);
  return {std::move(traj), std::move(out)};
}

}  // namespace cqc
