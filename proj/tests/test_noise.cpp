#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cqc/dynamics.hpp"
#include "cqc/noise.hpp"
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

}  // namespace

TEST_CASE("raw white noise: variance matches lambda/dt") {
  TimeGrid grid(0.01, 100000);
  auto traj = sample_raw_white(grid, 1.0, 12345);
  double s = 0, s2 = 0;
  for (int j = 0; j < grid.steps; ++j) {
    double w = traj.values(0, j);
    s += w;
    s2 += w * w;
  }
  double mean = s / grid.steps;
  double var = s2 / grid.steps - mean * mean;
  // lambda/dt = 100; chi-square band on the variance estimator
  CHECK(var > 97.0);
  CHECK(var < 103.0);
}

TEST_CASE("raw white noise: deterministic given the seed") {
  TimeGrid grid(0.1, 500);
  auto a = sample_raw_white(grid, 2.0, 777, 3);
  auto b = sample_raw_white(grid, 2.0, 777, 3);
  CHECK(a.values == b.values);
}

TEST_CASE("raw white noise: values scale like sqrt(lambda)") {
  TimeGrid grid(0.1, 200);
  auto a = sample_raw_white(grid, 1.0, 42);
  auto b = sample_raw_white(grid, 4.0, 42);
  CHECK((b.values - 2.0 * a.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lattice noise: one site with dx = 1 reduces to the white sampler") {
  TimeGrid grid(0.05, 300);
  auto white = sample_raw_white(grid, 1.5, 9);
  auto lattice = sample_lattice_raw(grid, 1, 1.0, 1.5, 9);
  CHECK(white.values == lattice.values);
}

TEST_CASE("lattice noise: variance scales with 1/(dt dx)") {
  TimeGrid grid(0.02, 2000);
  const double dx = 0.25, lambda = 1.0;
  auto traj = sample_lattice_raw(grid, 16, dx, lambda, 31);
  double expect = lambda / (grid.dt * dx);
  double s2 = traj.values.squaredNorm() / (16.0 * grid.steps);
  double n = 16.0 * grid.steps;
  CHECK(std::abs(s2 - expect) < 4.0 * expect * std::sqrt(2.0 / n));
}

TEST_CASE("time_average: constant trajectory recovers a0") {
  TimeGrid grid(0.1, 50);
  NoiseTrajectory traj;
  traj.grid = grid;
  traj.values.setConstant(1, grid.steps, 2.0 * 1.7 * 0.6);  // 2 lambda a0
  CHECK(time_average(traj, 1.7) == Catch::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("time_average: raw-measure mean is zero at CLT scale") {
  TimeGrid grid(0.1, 1000);  // t = 100
  const int n_traj = 1000;
  double sum = 0.0;
  for (int i = 0; i < n_traj; ++i)
    sum += time_average(sample_raw_white(grid, 1.0, 2718, static_cast<std::uint64_t>(i)), 1.0);
  double mean = sum / n_traj;
  double sigma_a = std::sqrt(1.0 / (4.0 * 1.0 * grid.t_final()));
  CHECK(std::abs(mean) < 3.0 * sigma_a / std::sqrt(static_cast<double>(n_traj)));
}

TEST_CASE("physical sampler: single eigenstate gives Normal(2 lambda a, lambda/dt) steps") {
  const double lambda = 1.0, a1 = 0.8;
  TimeGrid grid(0.01, 20000);
  Vector phi(2);
  phi << 0.0, 1.0;
  Matrix a_op = diag_op({-0.3, a1});
  Matrix h = Matrix::Zero(2, 2);
  auto sample = sample_physical_sequential(StateVector(phi), a_op, h, grid, lambda, 5);

  double s = 0, s2 = 0;
  for (int j = 0; j < grid.steps; ++j) {
    double w = sample.trajectory.values(0, j);
    s += w;
    s2 += w * w;
  }
  double mean = s / grid.steps;
  double var = s2 / grid.steps - mean * mean;
  double sigma2 = lambda / grid.dt;
  CHECK(std::abs(mean - 2.0 * lambda * a1) <
        4.0 * std::sqrt(sigma2 / grid.steps));
  CHECK(std::abs(var - sigma2) < 4.0 * sigma2 * std::sqrt(2.0 / grid.steps));

  // time-average converges to a1
  double avg = time_average(sample.trajectory, lambda);
  CHECK(std::abs(avg - a1) < 4.0 * std::sqrt(1.0 / (2.0 * lambda * grid.t_final())));
}

TEST_CASE("physical sampler: Born fractions for an equal superposition") {
  const double lambda = 1.0;
  TimeGrid grid(0.01, 1000);  // t = 10
  Vector phi(2);
  phi << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  Matrix a_op = diag_op({0.0, 1.0});
  Matrix h = Matrix::Zero(2, 2);

  const int n_traj = 10000;
  int near_one = 0;
  for (int i = 0; i < n_traj; ++i) {
    auto s = sample_physical_sequential(StateVector(phi), a_op, h, grid, lambda, 6060,
                                        static_cast<std::uint64_t>(i));
    if (time_average(s.trajectory, lambda) > 0.5) ++near_one;
  }
  double frac = static_cast<double>(near_one) / n_traj;
  double sigma = std::sqrt(0.25 / n_traj);
  CHECK(std::abs(frac - 0.5) < 3.0 * sigma);
}

TEST_CASE("physical sampler agrees with evolve_csl on its own trajectory") {
  const double lambda = 0.7;
  TimeGrid grid(0.02, 400);
  Vector phi(3);
  phi << 0.6, Complex(0.0, 0.64), 0.48;
  Matrix a_op = diag_op({-1.0, 0.2, 1.3});
  Matrix h(3, 3);
  h << 0.3, Complex(0, 0.2), 0.0, Complex(0, -0.2), -0.1, 0.5, 0.0, 0.5, 0.4;

  auto s = sample_physical_sequential(StateVector(phi), a_op, h, grid, lambda, 99);
  auto run = evolve_csl(StateVector(phi), a_op, h, s.trajectory, lambda);
  CHECK((run.direction - s.state.amps).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("martingale: raw-measure weights average to one at every checkpoint") {
  const double lambda = 0.2;
  TimeGrid grid(0.02, 500);  // t = 10, lambda t a^2 = 2
  Vector phi(2);
  phi << std::sqrt(0.4), std::sqrt(0.6);
  Matrix a_op = diag_op({0.0, 1.0});
  Matrix h = Matrix::Zero(2, 2);

  const int n_traj = 4000;
  const int every = 100;
  std::vector<std::vector<double>> weights(5);
  for (int i = 0; i < n_traj; ++i) {
    auto traj = sample_raw_white(grid, lambda, 1414, static_cast<std::uint64_t>(i));
    EvolutionOptions opts;
    opts.checkpoint_every = every;
    auto run = evolve_csl(StateVector(phi), a_op, h, traj, lambda, opts);
    REQUIRE(run.checkpoints.size() == 5);
    for (size_t c = 0; c < 5; ++c) {
      double part_w2 = 0.0;
      for (int j = 0; j < every * static_cast<int>(c + 1); ++j)
        part_w2 += traj.values(0, j) * traj.values(0, j) * grid.dt;
      double log_weight = run.checkpoints[c].log_norm2 + part_w2 / (2.0 * lambda);
      weights[c].push_back(std::exp(log_weight));
    }
  }
  for (size_t c = 0; c < 5; ++c) {
    auto [mean, se] = batch_means(weights[c]);
    INFO("checkpoint " << c);
    CHECK(std::abs(mean - 1.0) < 4.0 * se);
  }
}

TEST_CASE("sampler equivalence: weighted raw statistics match physical sampling") {
  const double lambda = 0.5;
  TimeGrid grid(0.05, 100);  // t = 5
  Vector phi(2);
  phi << std::sqrt(0.3), std::sqrt(0.7);
  Matrix a_op = diag_op({0.0, 1.0});
  Matrix h = Matrix::Zero(2, 2);

  const int n_traj = 6000;
  // E[w(t_1)] and E[<A>_t] under both samplers
  std::vector<double> raw_w1, raw_afinal, phys_w1, phys_afinal;
  std::vector<double> raw_weight;
  for (int i = 0; i < n_traj; ++i) {
    auto traj = sample_raw_white(grid, lambda, 21, static_cast<std::uint64_t>(i));
    auto run = evolve_csl(StateVector(phi), a_op, h, traj, lambda);
    double wgt = std::exp(run.log_weight);
    raw_weight.push_back(wgt);
    raw_w1.push_back(wgt * traj.values(0, 0));
    double a_mean = run.direction.dot(a_op * run.direction).real();
    raw_afinal.push_back(wgt * a_mean);

    auto s = sample_physical_sequential(StateVector(phi), a_op, h, grid, lambda, 22,
                                        static_cast<std::uint64_t>(i));
    phys_w1.push_back(s.trajectory.values(0, 0));
    phys_afinal.push_back(s.state.amps.dot(a_op * s.state.amps).real());
  }

  auto [rw_mean, rw_se] = batch_means(raw_w1);
  auto [pw_mean, pw_se] = batch_means(phys_w1);
  CHECK(std::abs(rw_mean - pw_mean) < 5.0 * std::sqrt(rw_se * rw_se + pw_se * pw_se));

  auto [ra_mean, ra_se] = batch_means(raw_afinal);
  auto [pa_mean, pa_se] = batch_means(phys_afinal);
  CHECK(std::abs(ra_mean - pa_mean) < 5.0 * std::sqrt(ra_se * ra_se + pa_se * pa_se));
}

TEST_CASE("parameter validation") {
  TimeGrid grid(0.1, 10);
  CHECK_THROWS_AS(sample_raw_white(grid, -1.0, 0), ValidationError);
  CHECK_THROWS_AS(TimeGrid(0.0, 10), ValidationError);
  CHECK_THROWS_AS(TimeGrid(0.1, 0), ValidationError);
  CHECK_THROWS_AS(sample_lattice_raw(grid, 0, 1.0, 1.0, 0), ValidationError);

  Vector phi(2);
  phi << 1.0, 1.0;  // unnormalized
  Matrix a_op = diag_op({0.0, 1.0});
  CHECK_THROWS_AS(sample_physical_sequential(StateVector(phi), a_op,
                                             Matrix::Zero(2, 2), grid, 1.0, 0),
                  ValidationError);
}
