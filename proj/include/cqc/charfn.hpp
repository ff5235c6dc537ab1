#pragma once

// Characteristic functions on beta grids, probability densities on energy
// grids with symbolic point masses, numerical Fourier inversion, and
// derivative-at-zero utilities with Richardson extrapolation. Point masses
// (delta terms) are carried beside the continuous grid, never rasterized,
// which keeps normalization bookkeeping exact.

#include <cmath>
#include <functional>
#include <vector>

#include "cqc/common.hpp"

namespace cqc {

struct CharacteristicFunction {
  RealVector beta;
  Vector values;

  // |f(0) - 1| when the grid contains beta = 0
  double normalization_defect() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < beta.size(); ++i)
      if (beta[i] == 0.0) worst = std::max(worst, std::abs(values[i] - 1.0));
    return worst;
  }

  // max |f(-b) - conj(f(b))| over mirrored grid pairs
  double hermitian_defect() const {
    double worst = 0.0;
    const Eigen::Index n = beta.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index j = n - 1 - i;
      if (std::abs(beta[i] + beta[j]) < 1e-15)
        worst = std::max(worst, std::abs(values[i] - std::conj(values[j])));
    }
    return worst;
  }
};

struct PointMass {
  double location = 0.0;
  double weight = 0.0;
};

struct EnergyDistribution {
  RealVector e_grid;
  RealVector density;                  // continuous part, >= 0 up to inversion ripple
  std::vector<PointMass> point_masses; // delta terms, kept symbolic
  double tail_mass = 0.0;              // estimated mass beyond the grid

  double grid_mass() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < e_grid.size(); ++i)
      s += 0.5 * (density[i] + density[i + 1]) * (e_grid[i + 1] - e_grid[i]);
    return s;
  }

  double point_mass_total() const {
    double s = 0.0;
    for (const auto& p : point_masses) s += p.weight;
    return s;
  }

  double total_mass() const { return grid_mass() + point_mass_total() + tail_mass; }
};

inline RealVector uniform_grid(double lo, double hi, int n) {
  require(n >= 2 && hi > lo, "uniform_grid: bad parameters");
  RealVector g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

// symmetric grid -max..max including 0
inline RealVector symmetric_grid(double max, int n_half) {
  require(max > 0.0 && n_half >= 1, "symmetric_grid: bad parameters");
  RealVector g(2 * n_half + 1);
  for (int i = -n_half; i <= n_half; ++i) g[i + n_half] = max * i / n_half;
  return g;
}

namespace detail {

// Composite Simpson over [a, b] with 2*panels intervals.
template <typename Fn>
auto simpson(Fn&& f, double a, double b, int panels) -> decltype(f(0.0)) {
  const int n = 2 * panels;
  const double h = (b - a) / n;
  auto acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

}  // namespace detail

// Invert a characteristic function to a density on e_grid:
//   p(E) = (1/pi) int_0^beta_max Re[e^{i E beta} (f(beta) - const_part)] dbeta.
// Uses the Hermitian symmetry f(-b) = conj(f(b)). Any non-decaying constant
// component of f (an E = 0 point mass) must be passed as const_part and
// handled by the caller.
inline RealVector invert_charfn(const std::function<Complex(double)>& f,
                                double beta_max, int panels,
                                const RealVector& e_grid,
                                double const_part = 0.0) {
  require(beta_max > 0.0 && panels >= 8, "invert_charfn: bad quadrature parameters");
  const int nodes = 2 * panels + 1;
  const double h = beta_max / (nodes - 1);
  // cache f and the Simpson weights over the beta nodes
  std::vector<Complex> fv(static_cast<size_t>(nodes));
  std::vector<double> wgt(static_cast<size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    fv[static_cast<size_t>(i)] = f(i * h) - const_part;
    wgt[static_cast<size_t>(i)] =
        (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
  }
  RealVector out(e_grid.size());
  for (Eigen::Index k = 0; k < e_grid.size(); ++k) {
    const double e = e_grid[k];
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const Complex& v = fv[static_cast<size_t>(i)];
      acc += wgt[static_cast<size_t>(i)] *
             (std::cos(e * i * h) * v.real() - std::sin(e * i * h) * v.imag());
    }
    out[k] = acc * h / (3.0 * kPi);
  }
  return out;
}

// Forward transform of a sampled distribution (trapezoid on the grid plus
// exact point-mass phases); used by round-trip oracles.
inline Complex charfn_from_distribution(const EnergyDistribution& dist, double beta) {
  Complex acc(0.0, 0.0);
  for (Eigen::Index i = 0; i + 1 < dist.e_grid.size(); ++i) {
    double e0 = dist.e_grid[i], e1 = dist.e_grid[i + 1];
    Complex f0 = std::exp(Complex(0.0, -e0 * beta)) * dist.density[i];
    Complex f1 = std::exp(Complex(0.0, -e1 * beta)) * dist.density[i + 1];
    acc += 0.5 * (f0 + f1) * (e1 - e0);
  }
  for (const auto& p : dist.point_masses)
    acc += p.weight * std::exp(Complex(0.0, -p.location * beta));
  return acc;
}

// Neville/Richardson ladder over halved step sizes. The estimates d_i are
// taken at h0 / 2^i and the error powers h^{p0}, h^{p0+dp}, ... are
// eliminated in turn.
inline Complex richardson_ladder(const std::function<Complex(double)>& estimate,
                                 double h0, int levels, int first_power,
                                 int power_step) {
  std::vector<Complex> d(static_cast<size_t>(levels));
  double h = h0;
  for (int i = 0; i < levels; ++i) {
    d[static_cast<size_t>(i)] = estimate(h);
    h /= 2.0;
  }
  for (int j = 1; j < levels; ++j) {
    double w = std::pow(2.0, first_power + (j - 1) * power_step);
    for (int i = levels - 1; i >= j; --i)
      d[static_cast<size_t>(i)] =
          (w * d[static_cast<size_t>(i)] - d[static_cast<size_t>(i - 1)]) / (w - 1.0);
  }
  return d[static_cast<size_t>(levels - 1)];
}

// Richardson-extrapolated central derivative of a complex function at 0.
// For smooth functions the error series is even in h; charfns with an |beta|
// kink contribute every power through their imaginary part, so the ladder
// eliminates h^1, h^2, ... rather than h^2, h^4, ...
inline Complex central_derivative_at_zero(const std::function<Complex(double)>& f,
                                          double h0 = 1e-2, int levels = 5) {
  return richardson_ladder(
      [&](double h) { return (f(h) - f(-h)) / (2.0 * h); }, h0, levels, 1, 1);
}

inline Complex second_derivative_at_zero(const std::function<Complex(double)>& f,
                                         double h0 = 1e-2, int levels = 4) {
  const Complex f0 = f(0.0);
  return richardson_ladder(
      [&](double h) { return (f(h) - 2.0 * f0 + f(-h)) / (h * h); }, h0, levels, 1, 1);
}

// One-sided derivative from the right; for charfns with an |beta| kink the
// odd moments use this stencil (paper convention: epsilon(0) = 0).
inline Complex right_derivative_at_zero(const std::function<Complex(double)>& f,
                                        double h0 = 1e-3, int levels = 4) {
  const Complex f0 = f(0.0);
  return richardson_ladder(
      [&](double h) { return (-3.0 * f0 + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h); }, h0,
      levels, 2, 1);
}

// E[X] = i f'(0); real for a real-valued random variable.
inline double mean_from_charfn(const std::function<Complex(double)>& f,
                               double h0 = 1e-3) {
  return (kImag * central_derivative_at_zero(f, h0)).real();
}

}  // namespace cqc
