#pragma once

// CSL trajectory evolution for the single-operator model: the per-step
// pointer kernel exp(-(dt/4 lambda)(w - 2 lambda A)^2), Strang-split
// evolution under a given noise trajectory, and collapse-statistics
// ensembles with their analytic reference mixture.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cqc/common.hpp"
#include "cqc/linalg.hpp"
#include "cqc/noise.hpp"
#include "cqc/parallel.hpp"
#include "cqc/rng.hpp"
#include "cqc/stats.hpp"

namespace cqc {

struct Checkpoint {
  double time = 0.0;
  Vector state;           // normalized
  double log_norm2 = 0.0; // log squared norm accumulated to this time
  double norm2() const { return std::exp(log_norm2); }
};

struct CslRun {
  Vector direction;        // normalized final state
  double log_norm2 = 0.0;  // log <psi|psi> in the Eq-style convention (vacuum factor included)
  double log_weight = 0.0; // raw-measure importance weight: log_norm2 + (2 lambda)^-1 int w^2
  bool deweighted = false; // squared norm fell below exp(deweight floor)
  bool boundary_flagged = false;  // lattice runs: packet came within 5 sigma of an edge
  MeasureTag measure_tag = MeasureTag::raw;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<Checkpoint> checkpoints;

  StateVector final_state_unnormalized() const {
    return StateVector(std::exp(0.5 * log_norm2) * direction);
  }
};

struct EvolutionOptions {
  int checkpoint_every = 0;        // steps between checkpoints; 0 disables
  double deweight_log_floor = -700.0;
};

// One step of the CQC continuous-measurement sequence: the von Neumann
// pointer kernel exp(-(dt/4 lambda)(w - 2 lambda A)^2). Positive, Hermitian,
// contractive; leaves |a_n> untouched when w = 2 lambda a_n.
inline Matrix pointer_step_kernel(const Matrix& a_op, double w, double dt,
                                  double lambda) {
  require(lambda > 0.0 && dt > 0.0, "pointer_step_kernel: need lambda, dt > 0");
  EigenSystem es = eig_hermitian(a_op);
  Vector diag(es.values.size());
  for (Eigen::Index k = 0; k < es.values.size(); ++k) {
    double d = w - 2.0 * lambda * es.values[k];
    diag[k] = std::exp(-(dt / (4.0 * lambda)) * d * d);
  }
  return es.vectors * diag.asDiagonal() * es.vectors.adjoint();
}

// Evolve phi under Eq-style CSL dynamics for the given noise trajectory.
// Strang splitting: half-step unitary, pointer kernel, half-step unitary.
// Exact at any dt when H = 0. The squared norm is accumulated in log space;
// a run whose norm falls below the deweight floor is flagged, not rejected.
inline CslRun evolve_csl(const StateVector& phi, const Matrix& a_op,
                         const Matrix& h_op, const NoiseTrajectory& traj,
                         double lambda, const EvolutionOptions& opts = {}) {
  require(lambda > 0.0, "evolve_csl: lambda must be positive");
  require(!traj.is_lattice(), "evolve_csl: expected a single-operator trajectory");
  require(a_op.rows() == phi.dim(), "evolve_csl: dim mismatch");
  require_same_dim(a_op, h_op, "evolve_csl");

  const EigenSystem a_eig = eig_hermitian(a_op);
  const int n = phi.dim();
  const double dt = traj.grid.dt;

  const bool free_of_h = h_op.cwiseAbs().maxCoeff() == 0.0;
  Matrix u_half;
  if (!free_of_h) {
    Matrix h_in_a = a_eig.vectors.adjoint() * h_op * a_eig.vectors;
    u_half = expm_hermitian(h_in_a, -kImag * dt / 2.0);
  }

  CslRun run;
  run.measure_tag = traj.measure_tag;
  run.seed = traj.seed;
  run.stream = traj.stream;

  Vector psi = a_eig.vectors.adjoint() * phi.amps;
  double log_norm2 = std::log(psi.squaredNorm());
  psi /= std::sqrt(psi.squaredNorm());

  for (int j = 0; j < traj.grid.steps; ++j) {
    if (!free_of_h) psi = u_half * psi;
    const double w = traj.values(0, j);
    for (int k = 0; k < n; ++k) {
      double d = w - 2.0 * lambda * a_eig.values[k];
      psi[k] *= std::exp(-(dt / (4.0 * lambda)) * d * d);
    }
    if (!free_of_h) psi = u_half * psi;

    double step_norm2 = psi.squaredNorm();
    log_norm2 += std::log(step_norm2);
    psi /= std::sqrt(step_norm2);

    if (opts.checkpoint_every > 0 && (j + 1) % opts.checkpoint_every == 0) {
      Checkpoint cp;
      cp.time = (j + 1) * dt;
      cp.state = a_eig.vectors * psi;
      cp.log_norm2 = log_norm2;
      run.checkpoints.push_back(std::move(cp));
    }
  }

  run.direction = a_eig.vectors * psi;
  run.log_norm2 = log_norm2;
  run.log_weight = log_norm2 + traj.sum_sq() / (2.0 * lambda);
  run.deweighted = log_norm2 < opts.deweight_log_floor;
  return run;
}

// ---------------------------------------------------------------------------
// Collapse-statistics ensembles (diagonal model, H_A = 0)

struct EnsembleConfig {
  Vector alpha;      // initial amplitudes in the A-eigenbasis, sum |alpha|^2 = 1
  RealVector a;      // eigenvalues of A
  double lambda = 1.0;
  TimeGrid grid;
  int n_trajectories = 0;
  MeasureTag sampler = MeasureTag::physical;
  std::uint64_t master_seed = 0;
  int histogram_bins = 60;
  unsigned threads = 1;
};

struct TrajectorySummary {
  std::uint64_t stream = 0;
  int outcome = -1;       // index into a
  bool tie_flagged = false;
  double a_statistic = 0.0;
  double log_norm2 = 0.0;
  double log_weight = 0.0;  // 0 for physical sampling
};

struct CollapseStatistics {
  Histogram histogram;               // weighted histogram of the a-statistic
  RealVector a;                      // outcome eigenvalues
  std::vector<double> outcome_frequency;  // weighted, sums to 1
  std::vector<double> mixture_weight;     // |alpha_n|^2
  double lambda = 0.0;
  double t = 0.0;
  double mixture_sigma = 0.0;        // (4 lambda t)^{-1/2}
  double ks_statistic = -1.0;        // vs finite-t mixture (physical sampler only)
  double ks_critical_1pct = 0.0;
  int n_ties = 0;
  std::uint64_t master_seed = 0;
  std::vector<TrajectorySummary> trajectories;

  double mixture_cdf(double x) const {
    double f = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k)
      f += mixture_weight[static_cast<size_t>(k)] *
           normal_cdf((x - a[k]) / mixture_sigma);
    return f;
  }

  double mixture_density(double x) const {
    double f = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k)
      f += mixture_weight[static_cast<size_t>(k)] *
           normal_pdf(x, a[k], mixture_sigma);
    return f;
  }
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Nearest eigenvalue; ties go to the smaller |a_n| and are flagged.
inline int assign_outcome(const RealVector& a, double stat, bool* tie) {
  int best = 0;
  double best_d = std::abs(stat - a[0]);
  *tie = false;
  for (Eigen::Index k = 1; k < a.size(); ++k) {
    double d = std::abs(stat - a[k]);
    if (d < best_d) {
      best = static_cast<int>(k);
      best_d = d;
      *tie = false;
    } else if (d == best_d) {
      *tie = true;
      if (std::abs(a[k]) < std::abs(a[best])) best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace detail

// Monte Carlo ensemble of the Eq-6 statistic a = (2 lambda t)^{-1} int w for
// the diagonal model, with the analytic finite-t reference mixture
// sum_n |alpha_n|^2 Normal(a_n, (4 lambda t)^{-1}) attached.
inline CollapseStatistics run_collapse_ensemble(const EnsembleConfig& cfg) {
  require(cfg.n_trajectories >= 100,
          "run_collapse_ensemble: need at least 100 trajectories for meaningful statistics");
  require(cfg.alpha.size() == cfg.a.size(), "run_collapse_ensemble: alpha/a size mismatch");
  require(cfg.lambda > 0.0, "run_collapse_ensemble: lambda must be positive");
  require(std::abs(cfg.alpha.squaredNorm() - 1.0) < 1e-10,
          "run_collapse_ensemble: amplitudes must be normalized");

  const int n = static_cast<int>(cfg.a.size());
  const int steps = cfg.grid.steps;
  const double dt = cfg.grid.dt;
  const double t = cfg.grid.t_final();
  const double lambda = cfg.lambda;
  const double sigma_w = std::sqrt(lambda / dt);

  std::vector<double> log_p0(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) log_p0[static_cast<size_t>(k)] = std::log(std::norm(cfg.alpha[k]));

  std::vector<TrajectorySummary> out(static_cast<size_t>(cfg.n_trajectories));

  parallel_for_indexed(cfg.n_trajectories, cfg.threads, [&](int idx) {
    CounterRng rng(cfg.master_seed, static_cast<std::uint64_t>(idx));
    // log branch exponents e_k = -(2 lambda)^-1 sum_j dt (w_j - 2 lambda a_k)^2
    std::vector<double> e(static_cast<size_t>(n), 0.0);
    std::vector<double> p(static_cast<size_t>(n), 0.0);
    double w_sum = 0.0;
    double w2_sum = 0.0;

    for (int j = 0; j < steps; ++j) {
      double w;
      if (cfg.sampler == MeasureTag::physical) {
        double m = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
          p[static_cast<size_t>(k)] = log_p0[static_cast<size_t>(k)] + e[static_cast<size_t>(k)];
          m = std::max(m, p[static_cast<size_t>(k)]);
        }
        double total = 0.0;
        for (int k = 0; k < n; ++k) {
          p[static_cast<size_t>(k)] = std::exp(p[static_cast<size_t>(k)] - m);
          total += p[static_cast<size_t>(k)];
        }
        double u = rng.uniform() * total;
        int branch = n - 1;
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
          acc += p[static_cast<size_t>(k)];
          if (u <= acc) {
            branch = k;
            break;
          }
        }
        w = 2.0 * lambda * cfg.a[branch] + sigma_w * rng.normal();
      } else {
        w = sigma_w * rng.normal();
      }
      w_sum += w;
      w2_sum += w * w;
      for (int k = 0; k < n; ++k) {
        double d = w - 2.0 * lambda * cfg.a[k];
        e[static_cast<size_t>(k)] -= dt * d * d / (2.0 * lambda);
      }
    }

    TrajectorySummary& s = out[static_cast<size_t>(idx)];
    s.stream = static_cast<std::uint64_t>(idx);
    s.a_statistic = w_sum * dt / (2.0 * lambda * t);
    std::vector<double> terms(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
      terms[static_cast<size_t>(k)] = log_p0[static_cast<size_t>(k)] + e[static_cast<size_t>(k)];
    s.log_norm2 = detail::log_sum_exp(terms);
    s.log_weight = cfg.sampler == MeasureTag::raw
                       ? s.log_norm2 + dt * w2_sum / (2.0 * lambda)
                       : 0.0;
    s.outcome = detail::assign_outcome(cfg.a, s.a_statistic, &s.tie_flagged);
  });

  CollapseStatistics stats;
  stats.a = cfg.a;
  stats.lambda = lambda;
  stats.t = t;
  stats.master_seed = cfg.master_seed;
  stats.mixture_sigma = 1.0 / std::sqrt(4.0 * lambda * t);
  stats.mixture_weight.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) stats.mixture_weight[static_cast<size_t>(k)] = std::norm(cfg.alpha[k]);

  double a_lo = cfg.a.minCoeff() - 6.0 * stats.mixture_sigma;
  double a_hi = cfg.a.maxCoeff() + 6.0 * stats.mixture_sigma;
  stats.histogram = Histogram(a_lo, a_hi, cfg.histogram_bins);

  stats.outcome_frequency.assign(static_cast<size_t>(n), 0.0);
  double total_weight = 0.0;
  for (const auto& s : out) {
    double w = cfg.sampler == MeasureTag::raw ? std::exp(s.log_weight) : 1.0;
    stats.histogram.add(s.a_statistic, w);
    stats.outcome_frequency[static_cast<size_t>(s.outcome)] += w;
    total_weight += w;
    if (s.tie_flagged) ++stats.n_ties;
  }
  for (double& f : stats.outcome_frequency) f /= total_weight;

  if (cfg.sampler == MeasureTag::physical) {
    std::vector<double> samples;
    samples.reserve(out.size());
    for (const auto& s : out) samples.push_back(s.a_statistic);
    stats.ks_statistic =
        ks_statistic(std::move(samples), [&](double x) { return stats.mixture_cdf(x); });
    stats.ks_critical_1pct = ks_critical_value(0.01, cfg.n_trajectories);
  }

  stats.trajectories = std::move(out);
  return stats;
}

}  // namespace cqc
