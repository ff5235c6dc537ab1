#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cqc/energy.hpp"
#include "cqc/lattice.hpp"
#include "cqc/stats.hpp"

using namespace cqc;

namespace {

Matrix diag_op(std::initializer_list<double> values) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(values.size()),
                          static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) m(i, i) = v, ++i;
  return m;
}

Matrix random_hermitian(int n, std::mt19937& gen) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(dist(gen), dist(gen));
  Matrix h = 0.5 * (m + Matrix(m.adjoint()));
  return h / h.cwiseAbs().maxCoeff();  // unit scale
}

Vector two_level_alpha(double p0) {
  Vector alpha(2);
  alpha << std::sqrt(p0), std::sqrt(1.0 - p0);
  return alpha;
}

}  // namespace

TEST_CASE("total-energy charfn: pinned values") {
  Vector alpha(1);
  alpha << 1.0;
  RealVector a(1);
  a << 1.0;
  auto grid = symmetric_grid(4.0, 8);
  auto f = charfn_total_diag(alpha, a, 1.0, grid);
  CHECK(f.normalization_defect() < 1e-14);
  CHECK(f.hermitian_defect() < 1e-14);
  // beta = 2 -> exp(-1)
  CHECK(std::abs(f.values[12] - std::exp(-1.0)) < 1e-14);
}

TEST_CASE("total-energy charfn: a = 0 component contributes a constant") {
  Vector alpha = two_level_alpha(0.5);
  RealVector a(2);
  a << 0.0, 2.0;
  auto f = charfn_total_diag_at(alpha, a, 1.0, 50.0);
  CHECK(f.real() == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("total-energy density: pinned values and symmetry") {
  Vector alpha(1);
  alpha << 1.0;
  RealVector a(1);
  a << 1.0;
  auto e_grid = symmetric_grid(10.0, 500);
  auto dist = dist_total_diag(alpha, a, 1.0, e_grid);
  // E = 0 -> 2/pi
  CHECK(dist.density[500] == Catch::Approx(2.0 / kPi).epsilon(1e-12));
  // symmetric in E: mean vanishes
  for (int i = 0; i < 500; ++i)
    CHECK(dist.density[static_cast<size_t>(i)] ==
          Catch::Approx(dist.density[static_cast<size_t>(1000 - i)]).epsilon(1e-12));
  CHECK(dist.total_mass() == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("Fourier inversion of the total-energy charfn matches the Cauchy mixture") {
  Vector alpha = two_level_alpha(0.4);
  RealVector a(2);
  a << 0.7, 1.3;
  const double lambda = 1.0;
  double a2max = 1.3 * 1.3;
  auto e_grid = symmetric_grid(10.0 * lambda * a2max, 400);
  auto expected = dist_total_diag(alpha, a, lambda, e_grid);
  auto inverted = invert_charfn(
      [&](double b) { return charfn_total_diag_at(alpha, a, lambda, b); },
      120.0, 6000, e_grid);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < e_grid.size(); ++i)
    worst = std::max(worst, std::abs(inverted[i] - expected.density[i]));
  CHECK(worst < 1e-3);
}

TEST_CASE("inversion with an a = 0 point mass: constant part subtracted") {
  Vector alpha = two_level_alpha(0.3);
  RealVector a(2);
  a << 0.0, 1.0;
  const double lambda = 1.0;
  auto e_grid = symmetric_grid(8.0, 200);
  auto expected = dist_total_diag(alpha, a, lambda, e_grid);
  REQUIRE(expected.point_masses.size() == 1);
  CHECK(expected.point_masses[0].weight == Catch::Approx(0.3));
  auto inverted = invert_charfn(
      [&](double b) { return charfn_total_diag_at(alpha, a, lambda, b); },
      120.0, 6000, e_grid, /*const_part=*/0.3);
  for (Eigen::Index i = 0; i < e_grid.size(); ++i)
    REQUIRE(std::abs(inverted[i] - expected.density[i]) < 1e-3);
}

TEST_CASE("field-energy charfn: vacuum at t = 0 and branch structure") {
  Vector alpha = two_level_alpha(0.5);
  RealVector a(2);
  a << 0.5, 1.5;
  const double lambda = 0.8, t = 2.0;

  auto grid = symmetric_grid(5.0, 50);
  auto f0 = charfn_w_diag(alpha, a, lambda, 0.0, grid);
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    CHECK(std::abs(f0.values[i] - 1.0) < 1e-14);

  // outside |beta| >= t the value freezes at sum |alpha|^2 exp(-lambda a^2 t)
  double frozen = 0.5 * std::exp(-lambda * 0.25 * t) + 0.5 * std::exp(-lambda * 2.25 * t);
  CHECK(std::abs(charfn_w_diag_at(alpha, a, lambda, t, 3.9) - frozen) < 1e-14);
  CHECK(std::abs(charfn_w_diag_at(alpha, a, lambda, t, -4.7) - frozen) < 1e-14);

  // branch continuity at |beta| = t
  double inside = charfn_w_diag_at(alpha, a, lambda, t, t - 1e-13).real();
  double outside = charfn_w_diag_at(alpha, a, lambda, t, t + 1e-13).real();
  CHECK(std::abs(inside - outside) < 1e-12);
}

TEST_CASE("field-energy density: t = 0 is a pure point mass") {
  Vector alpha = two_level_alpha(0.5);
  RealVector a(2);
  a << 0.5, 1.5;
  auto e_grid = symmetric_grid(5.0, 100);
  auto dist = dist_w_diag(alpha, a, 1.0, 0.0, e_grid);
  REQUIRE(dist.point_masses.size() == 1);
  CHECK(dist.point_masses[0].weight == Catch::Approx(1.0));
  CHECK(dist.density.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("field-energy density: inversion oracle at finite t") {
  Vector alpha = two_level_alpha(0.6);
  RealVector a(2);
  a << 0.8, 1.2;
  const double lambda = 1.0, t = 3.0;
  auto e_grid = symmetric_grid(10.0, 400);
  auto expected = dist_w_diag(alpha, a, lambda, t, e_grid);

  const double frozen = charfn_w_diag_at(alpha, a, lambda, t, t + 1.0).real();
  // f - frozen is supported on |beta| < t: the delta is subtracted exactly
  auto inverted = invert_charfn(
      [&](double b) { return charfn_w_diag_at(alpha, a, lambda, t, b); }, t, 4000,
      e_grid, frozen);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < e_grid.size(); ++i)
    worst = std::max(worst, std::abs(inverted[i] - expected.density[i]));
  CHECK(worst < 1e-3);
  CHECK(expected.point_masses[0].weight == Catch::Approx(frozen).margin(1e-14));
}

TEST_CASE("field-energy density: integrates to one") {
  Vector alpha = two_level_alpha(0.5);
  RealVector a(2);
  a << 1.0, 1.4;
  const double lambda = 1.0, t = 16.0;  // transients ~ exp(-16): quadrature regime
  auto e_grid = symmetric_grid(2000.0, 200000);
  auto dist = dist_w_diag(alpha, a, lambda, t, e_grid);
  CHECK(std::abs(dist.total_mass() - 1.0) < 1e-6);

  // moderate t: looser envelope with the stationary-tail estimate
  auto e_grid2 = symmetric_grid(150.0, 30000);
  auto dist2 = dist_w_diag(alpha, a, lambda, 3.0, e_grid2);
  CHECK(dist2.total_mass() > 0.99);
  CHECK(dist2.total_mass() < 1.01);
}

TEST_CASE("interaction-energy density: width scaling in the regulator") {
  Vector alpha(1);
  alpha << 1.0;
  RealVector a(1);
  a << 1.3;
  const double lambda = 0.7, dt = 0.01;
  auto e_grid = symmetric_grid(40.0, 100);
  auto coarse = dist_interaction_diag(alpha, a, lambda, dt, e_grid);

  // halving dt multiplies sigma by sqrt(2): p_{dt/2}(E sqrt 2) sqrt 2 = p_dt(E)
  RealVector scaled = std::sqrt(2.0) * e_grid;
  auto fine = dist_interaction_diag(alpha, a, lambda, dt / 2.0, scaled);
  for (Eigen::Index i = 0; i < e_grid.size(); ++i)
    REQUIRE(std::abs(std::sqrt(2.0) * fine.density[i] - coarse.density[i]) < 1e-12);

  // symmetric: mean zero
  for (int i = 0; i < 100; ++i)
    CHECK(coarse.density[static_cast<size_t>(i)] ==
          Catch::Approx(coarse.density[static_cast<size_t>(200 - i)]).epsilon(1e-12));
}

TEST_CASE("interaction-energy density: a = 0 is a point mass") {
  Vector alpha(1);
  alpha << 1.0;
  RealVector a(1);
  a << 0.0;
  auto e_grid = symmetric_grid(5.0, 50);
  auto dist = dist_interaction_diag(alpha, a, 1.0, 0.1, e_grid);
  REQUIRE(dist.point_masses.size() == 1);
  CHECK(dist.point_masses[0].weight == Catch::Approx(1.0));
  CHECK(dist.density.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("round trip: density -> charfn -> density (Gaussian mixture)") {
  Vector alpha = two_level_alpha(0.45);
  RealVector a(2);
  a << 0.6, 1.1;
  const double lambda = 1.0, dt = 0.1;
  auto e_grid = symmetric_grid(40.0, 4000);
  auto dist = dist_interaction_diag(alpha, a, lambda, dt, e_grid);

  auto f = [&](double beta) { return charfn_from_distribution(dist, beta); };
  auto back = invert_charfn(f, 3.0, 1500, symmetric_grid(10.0, 100));
  auto expected = dist_interaction_diag(alpha, a, lambda, dt, symmetric_grid(10.0, 100));
  for (int i = 0; i <= 200; ++i)
    REQUIRE(std::abs(back[i] - expected.density[i]) < 1e-3);
}

TEST_CASE("general total-energy charfn reduces to the diagonal form when H = 0") {
  Vector alpha = two_level_alpha(0.3);
  RealVector a(2);
  a << 0.2, 1.4;
  const double lambda = 0.9;
  auto grid = symmetric_grid(6.0, 30);
  auto diag = charfn_total_diag(alpha, a, lambda, grid);
  auto general = charfn_total_general(StateVector(alpha), diag_op({0.2, 1.4}),
                                      Matrix::Zero(2, 2), lambda, grid);
  CHECK((diag.values - general.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("general total-energy charfn: unitary case has unit modulus on eigenstates") {
  Vector phi(2);
  phi << 1.0, 0.0;
  Matrix h = diag_op({0.7, -0.4});
  auto grid = symmetric_grid(5.0, 20);
  auto f = charfn_total_general(StateVector(phi), diag_op({1.0, 2.0}), h, 0.0, grid);
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    CHECK(std::abs(std::abs(f.values[i]) - 1.0) < 1e-12);
  CHECK(f.normalization_defect() < 1e-12);
}

TEST_CASE("general total-energy charfn: central-derivative mean is <phi|H|phi>") {
  std::mt19937 gen(31);
  Matrix h = random_hermitian(3, gen);
  Matrix a_op = random_hermitian(3, gen);
  Vector phi(3);
  phi << 0.5, Complex(0.3, 0.4), std::sqrt(1.0 - 0.25 - 0.25);
  phi /= std::sqrt(phi.squaredNorm());
  const double lambda = 0.6;

  double mean = mean_from_charfn([&](double b) {
    return charfn_total_general_at(StateVector(phi), a_op, h, lambda, b);
  });
  double expected = phi.dot(h * phi).real();
  CHECK(std::abs(mean - expected) < 1e-6);
}

TEST_CASE("particle-energy charfn: t = 0, unitary invariance, moment consistency") {
  std::mt19937 gen(17);
  Matrix h = random_hermitian(3, gen);
  Matrix a_op = random_hermitian(3, gen);
  Vector phi(3);
  phi << 0.6, Complex(0.0, 0.64), 0.48;
  StateVector sv(phi);
  auto grid = symmetric_grid(4.0, 16);

  auto f0 = charfn_HA_general(sv, a_op, h, 0.8, 0.0, grid);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    Complex direct = phi.dot(expm_hermitian(h, -kImag * grid[i]) * phi);
    CHECK(std::abs(f0.values[i] - direct) < 1e-10);
  }

  // lambda = 0: H_A statistics are time-independent
  auto fa = charfn_HA_general(sv, a_op, h, 0.0, 0.0, grid);
  auto fb = charfn_HA_general(sv, a_op, h, 0.0, 2.0, grid);
  CHECK((fa.values - fb.values).cwiseAbs().maxCoeff() < 1e-9);

  // numerical derivative at beta = 0 equals Tr[rho(t) H]
  const double lambda = 0.8, t = 1.5;
  double mean = mean_from_charfn(
      [&](double b) {
        Vector bg(1);
        bg << b;
        return charfn_HA_general(sv, a_op, h, lambda, t, bg.real()).values[0];
      },
      1e-2);
  CHECK(std::abs(mean - mean_HA(sv, a_op, h, lambda, t)) < 1e-6);
}

TEST_CASE("mean energies: lambda = 0 conserves <H_A>; H = 0 gives <H_w> = 0") {
  std::mt19937 gen(23);
  Matrix h = random_hermitian(3, gen);
  Matrix a_op = random_hermitian(3, gen);
  Vector phi(3);
  phi << 0.6, Complex(0.0, 0.64), 0.48;
  StateVector sv(phi);

  double e0 = mean_HA(sv, a_op, h, 0.0, 0.0);
  double e1 = mean_HA(sv, a_op, h, 0.0, 3.0);
  CHECK(std::abs(e1 - e0) < 1e-10);

  CHECK(mean_Hw(sv, a_op, Matrix::Zero(3, 3), 0.7, 2.0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("ensemble energy conservation on random three-level systems") {
  std::mt19937 gen(57);
  for (int trial = 0; trial < 2; ++trial) {
    Matrix h = random_hermitian(3, gen);
    Matrix a_op = random_hermitian(3, gen);
    Vector phi(3);
    phi << 0.5, Complex(0.5, 0.5), 0.5;
    StateVector sv(phi);
    const double lambda = 0.5;

    double e0 = mean_HA(sv, a_op, h, lambda, 0.0);
    for (double t : {1.0, 2.5, 5.0}) {
      double ea = mean_HA(sv, a_op, h, lambda, t);
      double ew = mean_Hw(sv, a_op, h, lambda, t);
      INFO("t = " << t);
      CHECK(std::abs(ea + ew - e0) < 1e-6);
    }
  }
}

TEST_CASE("free-particle heating on the lattice") {
  const int n = 48;
  const double dx = 1.0, mass = 1.0, lambda = 0.1, sigma0 = 4.5;
  RealVector sites(n);
  for (int i = 0; i < n; ++i) sites[i] = (i - (n - 1) / 2.0) * dx;
  Matrix h = lattice_free_hamiltonian(n, dx, mass);
  Matrix a_op = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) a_op(i, i) = sites[i];  // A = x
  auto phi = gaussian_packet(sites, 0.0, sigma0);
  Matrix rho0 = phi.amps * phi.amps.adjoint();

  Liouvillian gen = Liouvillian::single(h, a_op, lambda);
  const double t = 1.5, dt_ode = 0.005;

  std::vector<double> times, energies;
  MasterEvolutionSpec spec;
  spec.gen = gen;
  spec.horizon = t;
  spec.dt_ode = dt_ode;
  spec.verify_step = false;
  density_master_observe(rho0, spec, [&](int step, double tt, const Matrix& rho) {
    if (step % 30 == 0) {
      times.push_back(tt);
      energies.push_back((rho * h).trace().real());
    }
  });
  double slope = fit_line(times, energies).slope;
  double expected = free_particle_heating_slope(lambda, mass);
  CHECK(std::abs(slope - expected) / expected < 0.1);

  // <H_w> compensates the gain exactly (Eq-level identity), and sits at
  // -lambda t / 2m up to lattice-dispersion corrections
  double ew = mean_Hw_master(rho0, gen, h, t, dt_ode);
  double gain = mean_obs_master(rho0, gen, h, t, dt_ode) - energies.front();
  CHECK(std::abs(ew + gain) < 1e-6);
  CHECK(std::abs(ew - free_particle_w_energy_shift(lambda, mass, t)) <
        0.05 * std::abs(free_particle_w_energy_shift(lambda, mass, t)));
}

TEST_CASE("large-t field-energy distribution") {
  Vector alpha = two_level_alpha(0.5);
  RealVector a(2);
  a << 1.0, 1.3;
  const double lambda = 1.0, t = 10.0;  // lambda t a^2 >= 10
  auto e_grid = symmetric_grid(12.0, 600);

  auto asym = dist_w_large_t_diag(alpha, a, lambda, t, e_grid);
  auto exact = dist_w_diag(alpha, a, lambda, t, e_grid);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < e_grid.size(); ++i)
    worst = std::max(worst, std::abs(asym.density[i] - exact.density[i]));
  CHECK(worst < 1e-3);

  // a = 0 keeps a point mass
  RealVector a0(1);
  a0 << 0.0;
  Vector alpha0(1);
  alpha0 << 1.0;
  auto vac = dist_w_large_t_diag(alpha0, a0, lambda, t, e_grid);
  REQUIRE(vac.point_masses.size() == 1);
  CHECK(vac.point_masses[0].weight == Catch::Approx(1.0));

  // free-particle parameters: the Lorentzian is centered on the shift
  double shift = free_particle_w_energy_shift(0.4, 1.0, 20.0);
  auto shifted = dist_w_large_t_diag(alpha, a, 0.4, 20.0,
                                     symmetric_grid(30.0, 3000), shift);
  Eigen::Index peak = 0;
  shifted.density.maxCoeff(&peak);
  CHECK(std::abs(shifted.e_grid[peak] - shift) < 0.05);
  // symmetry about the shift
  double left = shifted.density[peak - 100];
  double right = shifted.density[peak + 100];
  CHECK(left == Catch::Approx(right).epsilon(1e-6));
}

TEST_CASE("heavy tails: truncated second moment grows linearly") {
  Vector alpha = two_level_alpha(0.5);
  RealVector a(2);
  a << 0.8, 1.2;
  const double lambda = 1.0;
  // T(L) = int_{|E|<L} E^2 p(E) dE for a Cauchy mixture grows ~ (2/pi) sum p gamma L
  auto truncated_second_moment = [&](double limit) {
    auto grid = symmetric_grid(limit, 40000);
    auto dist = dist_total_diag(alpha, a, lambda, grid);
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
      double e0 = grid[i], e1 = grid[i + 1];
      s += 0.5 * (e0 * e0 * dist.density[i] + e1 * e1 * dist.density[i + 1]) * (e1 - e0);
    }
    return s;
  };
  double gamma_bar = 0.5 * (0.5 * lambda * 0.64 + 0.5 * lambda * 1.44);
  std::vector<double> limits = {50.0, 100.0, 200.0, 400.0};
  std::vector<double> values;
  for (double l : limits) values.push_back(truncated_second_moment(l));
  double slope = fit_line(limits, values).slope;
  CHECK(std::abs(slope - 2.0 * gamma_bar / kPi) / (2.0 * gamma_bar / kPi) < 0.02);
}

TEST_CASE("odd moments of kinked charfns use the paper's symmetric convention") {
  Vector alpha = two_level_alpha(0.5);
  RealVector a(2);
  a << 0.5, 1.5;
  // central difference of the even |beta| profile vanishes: mean energy 0
  double mean_total = mean_from_charfn(
      [&](double b) { return charfn_total_diag_at(alpha, a, 1.0, b); });
  CHECK(std::abs(mean_total) < 1e-12);
  double mean_w = mean_from_charfn(
      [&](double b) { return charfn_w_diag_at(alpha, a, 1.0, 2.0, b); });
  CHECK(std::abs(mean_w) < 1e-12);
  // the one-sided stencil reports the kink slope -(lambda/2) sum p a^2
  Complex right = right_derivative_at_zero(
      [&](double b) { return charfn_total_diag_at(alpha, a, 1.0, b); });
  double kink = -0.5 * (0.5 * 0.25 + 0.5 * 2.25);
  CHECK(std::abs(right.real() - kink) < 1e-6);
}
