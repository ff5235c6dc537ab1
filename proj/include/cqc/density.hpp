#pragma once

// Ensemble density matrix by three routes: the closed form for H_A = 0,
// fixed-step RK4 integration of the master equation
//   d rho / dt = -i [H, rho] - (lambda/2) sum_k dx [A_k, [A_k, rho]],
// and Monte Carlo averages over trajectory runs with batch-means errors.

#include <cmath>
#include <utility>
#include <vector>

#include "cqc/common.hpp"
#include "cqc/dynamics.hpp"
#include "cqc/lattice.hpp"
#include "cqc/linalg.hpp"

namespace cqc {

// rho_nm(t) = alpha_n alpha_m^* exp(-(lambda t / 2)(a_n - a_m)^2)
inline Matrix density_closed_form(const Vector& alpha, const RealVector& a,
                                  double lambda, double t) {
  require(alpha.size() == a.size(), "density_closed_form: alpha/a size mismatch");
  require(std::abs(alpha.squaredNorm() - 1.0) < 1e-10,
          "density_closed_form: amplitudes must be normalized");
  const Eigen::Index n = a.size();
  Matrix rho(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double d = a[i] - a[j];
      rho(i, j) = alpha[i] * std::conj(alpha[j]) * std::exp(-0.5 * lambda * t * d * d);
    }
  return rho;
}

// Generator of the ensemble evolution. Either a single dense collapse
// operator or a family of diagonal operators (lattice smeared densities),
// where the double commutator reduces to an elementwise damping matrix
// Gamma_ij = sum_k dx (A_k,i - A_k,j)^2.
struct Liouvillian {
  Matrix h;        // may be 0x0 for H = 0
  double lambda = 0.0;
  Matrix a_op;     // dense route (empty when diagonal family is used)
  RealMatrix damping;  // diagonal-family route (empty when dense is used)

  static Liouvillian single(Matrix h_op, Matrix a, double lambda) {
    require(lambda >= 0.0, "Liouvillian: lambda must be nonnegative");
    if (h_op.rows() > 0) require_hermitian(h_op, "Liouvillian(H)");
    require_hermitian(a, "Liouvillian(A)");
    Liouvillian gen;
    gen.h = std::move(h_op);
    gen.a_op = std::move(a);
    gen.lambda = lambda;
    return gen;
  }

  static Liouvillian diagonal_family(Matrix h_op, const SmearedDensityOperator& ops,
                                     double lambda) {
    require(lambda >= 0.0, "Liouvillian: lambda must be nonnegative");
    Liouvillian gen;
    gen.h = std::move(h_op);
    gen.lambda = lambda;
    const int n = ops.n_sites();
    gen.damping.setZero(n, n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double d = ops.profile(k, i) - ops.profile(k, j);
          gen.damping(i, j) += ops.dx * d * d;
        }
    return gen;
  }

  int dim() const {
    if (a_op.rows() > 0) return static_cast<int>(a_op.rows());
    if (damping.rows() > 0) return static_cast<int>(damping.rows());
    return static_cast<int>(h.rows());
  }

  Matrix apply(const Matrix& rho) const {
    Matrix drho = Matrix::Zero(rho.rows(), rho.cols());
    if (h.rows() > 0) drho -= kImag * (h * rho - rho * h);
    if (lambda > 0.0) {
      if (a_op.rows() > 0) {
        // [A,[A,rho]] = A^2 rho - 2 A rho A + rho A^2
        drho -= 0.5 * lambda * (a_op * (a_op * rho) - 2.0 * a_op * rho * a_op +
                                (rho * a_op) * a_op);
      } else {
        drho -= (0.5 * lambda) * damping.cast<Complex>().cwiseProduct(rho);
      }
    }
    return drho;
  }

  // sum_k dx [A_k, [A_k, op]] for an arbitrary operator (used for <H_w>)
  Matrix double_comm_with(const Matrix& op) const {
    if (a_op.rows() > 0)
      return a_op * (a_op * op) - 2.0 * a_op * op * a_op + (op * a_op) * a_op;
    require(damping.rows() == op.rows(), "double_comm_with: dim mismatch");
    // For diagonal families, [A,[A,op]]_ij = (A_i - A_j)^2 op_ij summed over k.
    return damping.cast<Complex>().cwiseProduct(op);
  }
};

struct MasterEvolutionSpec {
  Liouvillian gen;
  double horizon = 0.0;
  double dt_ode = 1e-3;
  bool verify_step = true;  // integrate at dt and dt/2, require < 1e-8 agreement
};

namespace detail {

inline Matrix rk4_step(const Liouvillian& gen, const Matrix& rho, double dt) {
  Matrix k1 = gen.apply(rho);
  Matrix k2 = gen.apply(rho + 0.5 * dt * k1);
  Matrix k3 = gen.apply(rho + 0.5 * dt * k2);
  Matrix k4 = gen.apply(rho + dt * k3);
  return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

// Integrate the master equation, invoking obs(step, time, rho) after every
// step (and once at t = 0). Fixed step keeps runs bit-reproducible.
template <typename Obs>
Matrix density_master_observe(const Matrix& rho0, const MasterEvolutionSpec& spec,
                              Obs&& obs) {
  require(spec.horizon > 0.0, "density_master: horizon must be positive");
  require(spec.dt_ode > 0.0, "density_master: dt_ode must be positive");
  require(rho0.rows() == rho0.cols(), "density_master: rho0 not square");
  require_hermitian(rho0, "density_master(rho0)", 1e-10);

  int steps = static_cast<int>(std::llround(spec.horizon / spec.dt_ode));
  require(std::abs(steps * spec.dt_ode - spec.horizon) < 1e-9 * spec.horizon,
          "density_master: horizon must be an integer number of dt_ode steps");

  Matrix rho = rho0;
  obs(0, 0.0, rho);
  for (int j = 0; j < steps; ++j) {
    rho = detail::rk4_step(spec.gen, rho, spec.dt_ode);
    obs(j + 1, (j + 1) * spec.dt_ode, rho);
  }
  return rho;
}

inline Matrix density_master(const Matrix& rho0, const MasterEvolutionSpec& spec) {
  Matrix rho = density_master_observe(rho0, spec, [](int, double, const Matrix&) {});
  if (spec.verify_step) {
    MasterEvolutionSpec half = spec;
    half.dt_ode = spec.dt_ode / 2.0;
    half.verify_step = false;
    Matrix rho_half = density_master(rho0, half);
    double diff = (rho - rho_half).norm();
    require_numeric(diff < 1e-8,
                    "density_master: step size too large, halving changes the result by " +
                        std::to_string(diff) + " (> 1e-8); reduce dt_ode");
  }
  return rho;
}

struct DensityMc {
  Matrix rho;
  RealMatrix se_re, se_im;  // per-entry batch-means standard errors
  int n_runs = 0;

  // aggregate error for Frobenius-norm comparisons
  double combined_se() const {
    return std::sqrt(se_re.squaredNorm() + se_im.squaredNorm());
  }
};

// Weighted average of outer products over an ensemble of runs. Raw-measure
// runs enter with weight exp(log_weight); physical runs with weight 1 on
// normalized states. Standard errors from 20 batch means.
inline DensityMc density_monte_carlo(const std::vector<CslRun>& runs,
                                     MeasureTag expected_tag, int n_batches = 20) {
  require(runs.size() >= 100, "density_monte_carlo: need at least 100 runs");
  const Eigen::Index dim = runs.front().direction.size();
  for (const auto& r : runs) {
    require(r.measure_tag == expected_tag, "density_monte_carlo: mixed measure tags");
    require(r.direction.size() == dim, "density_monte_carlo: inconsistent dimensions");
  }

  const int m = static_cast<int>(runs.size());
  const int per = m / n_batches;
  require(per >= 1, "density_monte_carlo: too few runs per batch");

  std::vector<Matrix> batch(static_cast<size_t>(n_batches), Matrix::Zero(dim, dim));
  std::vector<double> batch_weight(static_cast<size_t>(n_batches), 0.0);
  for (int b = 0; b < n_batches; ++b) {
    int lo = b * per;
    int hi = (b == n_batches - 1) ? m : lo + per;
    for (int i = lo; i < hi; ++i) {
      const CslRun& r = runs[static_cast<size_t>(i)];
      double w = expected_tag == MeasureTag::raw ? std::exp(r.log_weight) : 1.0;
      batch[static_cast<size_t>(b)] += w * (r.direction * r.direction.adjoint());
      batch_weight[static_cast<size_t>(b)] += 1.0;
    }
    batch[static_cast<size_t>(b)] /= batch_weight[static_cast<size_t>(b)];
  }

  Matrix mean = Matrix::Zero(dim, dim);
  double total = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    mean += batch_weight[static_cast<size_t>(b)] * batch[static_cast<size_t>(b)];
    total += batch_weight[static_cast<size_t>(b)];
  }
  mean /= total;

  DensityMc out;
  out.rho = mean;
  out.n_runs = m;
  out.se_re.setZero(dim, dim);
  out.se_im.setZero(dim, dim);
  for (int b = 0; b < n_batches; ++b) {
    Matrix d = batch[static_cast<size_t>(b)] - mean;
    out.se_re += d.real().cwiseAbs2();
    out.se_im += d.imag().cwiseAbs2();
  }
  out.se_re = (out.se_re / (n_batches - 1) / n_batches).cwiseSqrt();
  out.se_im = (out.se_im / (n_batches - 1) / n_batches).cwiseSqrt();
  return out;
}

}  // namespace cqc
