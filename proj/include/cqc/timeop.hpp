#pragma once

// The field time operator T (conjugate to the unbounded field Hamiltonian):
// generating function, first and second moments, and the large-t
// distribution, in the diagonal (H_A = 0) case and for the power-law drive
// A(t') = A t'^s. The vacuum sector (zero field quanta) uses the T|0> = 0
// convention and contributes a point mass at tau = 0.

#include <cmath>
#include <functional>
#include <vector>

#include "cqc/charfn.hpp"
#include "cqc/common.hpp"

namespace cqc {

struct TimeOpSpec {
  Vector alpha;
  RealVector a;
  double lambda = 1.0;
  double t = 1.0;

  void validate() const {
    require(alpha.size() == a.size(), "TimeOpSpec: alpha/a size mismatch");
    require(std::abs(alpha.squaredNorm() - 1.0) < 1e-10,
            "TimeOpSpec: amplitudes must be normalized");
    require(lambda > 0.0 && t > 0.0, "TimeOpSpec: need lambda, t > 0");
  }
};

// f(z) = int_0^z (e^u - 1)/u du = Ei(z) - gamma - ln z.
// Regimes: power series below z = 1, Simpson quadrature up to z = 30,
// asymptotic series beyond. Values above z ~ 700 overflow a double; use
// log_f_exp_integral or the scaled form there.

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286;

inline double f_series(double z) {
  double term = z, sum = z;  // m = 1
  for (int m = 2; m < 60; ++m) {
    term *= z / m;
    double add = term / m;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

inline double f_quadrature(double z) {
  auto integrand = [](double u) {
    if (std::abs(u) < 1e-6) return 1.0 + 0.5 * u + u * u / 6.0;
    return std::expm1(u) / u;
  };
  int panels = 200;
  double prev = simpson(integrand, 0.0, z, panels);
  for (int iter = 0; iter < 12; ++iter) {
    panels *= 2;
    double next = simpson(integrand, 0.0, z, panels);
    if (std::abs(next - prev) < 1e-13 * std::abs(next)) return next;
    prev = next;
  }
  return prev;
}

// e^{-z} f(z) by the asymptotic series of Ei, truncated near its optimal term.
inline double f_scaled_asymptotic(double z) {
  double sum = 0.0, term = 1.0 / z;
  int kmax = static_cast<int>(std::min(40.0, z - 5.0));
  for (int k = 0; k <= kmax; ++k) {
    sum += term;
    term *= (k + 1) / z;
  }
  return sum - std::exp(-z) * (kEulerGamma + std::log(z));
}

}  // namespace detail

// e^{-z} f(z), stable for all z >= 0.
inline double f_exp_integral_scaled(double z) {
  require(z >= 0.0, "f_exp_integral_scaled: z must be nonnegative");
  if (z == 0.0) return 0.0;
  if (z < 1.0) return std::exp(-z) * detail::f_series(z);
  if (z < 30.0) return std::exp(-z) * detail::f_quadrature(z);
  return detail::f_scaled_asymptotic(z);
}

inline double f_exp_integral(double z) {
  require(z >= 0.0, "f_exp_integral: z must be nonnegative");
  require_numeric(z <= 700.0,
                  "f_exp_integral: overflow for z > 700, use log_f_exp_integral");
  if (z < 1.0) return detail::f_series(z);
  if (z < 30.0) return detail::f_quadrature(z);
  return std::exp(z) * detail::f_scaled_asymptotic(z);
}

inline double log_f_exp_integral(double z) {
  require(z > 0.0, "log_f_exp_integral: z must be positive");
  if (z < 30.0) return std::log(f_exp_integral(z));
  return z + std::log(detail::f_scaled_asymptotic(z));
}

// Generating function <exp(-i beta T)>, diagonal model. Per component n with
// Z_n = lambda t a_n^2 the bracket is a Poisson-weighted series over the
// field-quantum number m, each quantum contributing the window average
// g_m(beta) = (1/t) int_0^t exp(-i beta t'/m) dt'. Truncation follows the
// bound (Z^M / M!) e^Z < series_tol; components refusing to converge within
// 500 terms are a hard error.
inline Complex charfn_T_diag_at(const TimeOpSpec& spec, double beta,
                                double series_tol = 1e-10) {
  spec.validate();
  require(series_tol > 0.0, "charfn_T_diag_at: series_tol must be positive");
  Complex total(0.0, 0.0);
  for (Eigen::Index n = 0; n < spec.a.size(); ++n) {
    const double p = std::norm(spec.alpha[n]);
    const double z = spec.lambda * spec.t * spec.a[n] * spec.a[n];
    if (z == 0.0) {
      total += p;  // vacuum sector, T -> 0
      continue;
    }
    // scaled Poisson terms e^{-z} z^m / m!
    double term = std::exp(-z);
    Complex acc(term, 0.0);
    bool converged = false;
    for (int m = 1; m <= 500; ++m) {
      term *= z / m;
      Complex g;
      if (beta == 0.0) {
        g = 1.0;
      } else {
        Complex i_bt(0.0, beta * spec.t / m);
        g = (1.0 - std::exp(-i_bt)) / i_bt;
      }
      acc += term * std::pow(g, m);
      // spec'd remainder bound: (z^m / m!) e^z = term e^{2z}
      double log_bound = std::log(term) + 2.0 * z;
      if (log_bound < std::log(series_tol)) {
        converged = true;
        break;
      }
    }
    require_numeric(converged,
                    "charfn_T_diag_at: series truncation bound not reached within 500 terms");
    total += p * acc;
  }
  return total;
}

inline CharacteristicFunction charfn_T_diag(const TimeOpSpec& spec,
                                            const RealVector& beta_grid,
                                            double series_tol = 1e-10) {
  CharacteristicFunction out;
  out.beta = beta_grid;
  out.values.resize(beta_grid.size());
  for (Eigen::Index i = 0; i < beta_grid.size(); ++i)
    out.values[i] = charfn_T_diag_at(spec, beta_grid[i], series_tol);
  return out;
}

// <T> = (t/2)[1 - sum_k |alpha_k|^2 exp(-lambda t a_k^2)]
inline double mean_T(const TimeOpSpec& spec) {
  spec.validate();
  double decayed = 0.0;
  for (Eigen::Index k = 0; k < spec.a.size(); ++k)
    decayed += std::norm(spec.alpha[k]) *
               std::exp(-spec.lambda * spec.t * spec.a[k] * spec.a[k]);
  return 0.5 * spec.t * (1.0 - decayed);
}

// <T^2> = sum_k p_k [ (t^2/4)(1 - e^{-Z}) + (t^2/12) e^{-Z} f(Z) ],
// the diagonal reduction of the second-moment formula.
inline double second_moment_T(const TimeOpSpec& spec) {
  spec.validate();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < spec.a.size(); ++k) {
    const double p = std::norm(spec.alpha[k]);
    const double z = spec.lambda * spec.t * spec.a[k] * spec.a[k];
    double fs = f_exp_integral_scaled(z);
    acc += p * (0.25 * spec.t * spec.t * (1.0 - std::exp(-z)) +
                spec.t * spec.t / 12.0 * fs);
  }
  return acc;
}

// Power-law drive A(t') = A t'^s. The time-weighted ratios and the exponent
// are evaluated by quadrature of the defining integrals; the asymptote
// t (2s+1)/(2s+2) is returned alongside.
struct PowerLawMeanT {
  double exact = 0.0;
  double asymptote = 0.0;
  double rel_gap = 0.0;
};

namespace detail {

struct PowerLawIntegrals {
  double r1 = 0.0;  // int t' A^2 t'^{2s} / int A^2 t'^{2s}
  double r2 = 0.0;  // int t'^2 A^2 t'^{2s} / int A^2 t'^{2s}
  double z = 0.0;   // lambda int A^2 t'^{2s}
};

inline PowerLawIntegrals power_law_integrals(double s, double lambda, double a_scale,
                                             double t, int panels) {
  auto w = [&](double u) { return a_scale * a_scale * std::pow(u, 2.0 * s); };
  double denom = simpson(w, 0.0, t, panels);
  double num1 = simpson([&](double u) { return u * w(u); }, 0.0, t, panels);
  double num2 = simpson([&](double u) { return u * u * w(u); }, 0.0, t, panels);
  require_numeric(denom > 0.0, "power_law_integrals: degenerate weight");
  return {num1 / denom, num2 / denom, lambda * denom};
}

}  // namespace detail

inline PowerLawMeanT mean_T_power_law(double s, double lambda, double a_scale,
                                      double t, int panels = 4000) {
  require(s >= 0.0 && lambda > 0.0 && a_scale > 0.0 && t > 0.0,
          "mean_T_power_law: bad parameters");
  auto ints = detail::power_law_integrals(s, lambda, a_scale, t, panels);
  PowerLawMeanT out;
  out.exact = ints.r1 * (1.0 - std::exp(-ints.z));
  out.asymptote = t * (2.0 * s + 1.0) / (2.0 * s + 2.0);
  out.rel_gap = std::abs(out.exact - out.asymptote) / out.asymptote;
  return out;
}

inline double second_moment_T_power_law(double s, double lambda, double a_scale,
                                        double t, int panels = 4000) {
  require(s >= 0.0 && lambda > 0.0 && a_scale > 0.0 && t > 0.0,
          "second_moment_T_power_law: bad parameters");
  auto ints = detail::power_law_integrals(s, lambda, a_scale, t, panels);
  double fs = f_exp_integral_scaled(ints.z);
  return ints.r1 * ints.r1 * (1.0 - std::exp(-ints.z) - fs) + ints.r2 * fs;
}

// The large-Z asymptote as stated for the power-law example.
inline double second_moment_T_power_law_asymptote(double s, double lambda,
                                                  double a_scale, double t) {
  double r1 = t * (2.0 * s + 1.0) / (2.0 * s + 2.0);
  double corr = 1.0 / (lambda * std::pow(t, 2.0 * s + 1.0)) *
                std::pow(2.0 * s + 2.0, 2) / (2.0 * s + 3.0) / (a_scale * a_scale);
  return r1 * r1 * (1.0 + corr);
}

// Large-t distribution over tau: collapsed components concentrate at the
// center of time t/2, vacuum components at 0. Point masses kept symbolic.
struct TimeDistribution {
  std::vector<PointMass> point_masses;

  double mean() const {
    double m = 0.0;
    for (const auto& p : point_masses) m += p.location * p.weight;
    return m;
  }

  double total_weight() const {
    double w = 0.0;
    for (const auto& p : point_masses) w += p.weight;
    return w;
  }
};

inline TimeDistribution dist_T_large_t_diag(const TimeOpSpec& spec) {
  spec.validate();
  double collapsed = 0.0, vacuum = 0.0;
  for (Eigen::Index k = 0; k < spec.a.size(); ++k) {
    if (spec.a[k] == 0.0)
      vacuum += std::norm(spec.alpha[k]);
    else
      collapsed += std::norm(spec.alpha[k]);
  }
  TimeDistribution out;
  if (vacuum > 0.0) out.point_masses.push_back({0.0, vacuum});
  if (collapsed > 0.0) out.point_masses.push_back({0.5 * spec.t, collapsed});
  return out;
}

}  // namespace cqc
