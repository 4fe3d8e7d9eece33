#include "doctest.h"
#include "mqed/electrostatics.hpp"
#include "test_util.hpp"

using namespace mqed;

TEST_CASE("zero source gives zero potential") {
  const Grid g(6, 6, 6);
  const MediumProfile m(g, {Homogeneous{1.0}});
  const auto sol = solve_poisson(ScalarField(g), m);
  CHECK(max_abs(sol.chi.values) == 0.0);
  CHECK(sol.iterations == 0);
}

TEST_CASE("dipole pair matches a dense direct solve") {
  const Grid g(8, 8, 8);
  const MediumProfile m(g, {Homogeneous{1.0}});
  ScalarField sigma(g);
  sigma[g.index(3, 4, 4)] = 1.0;
  sigma[g.index(4, 4, 4)] = -1.0;
  const auto sol = solve_poisson(sigma, m, {1e-13});
  const Eigen::VectorXd ref = testutil::dense_poisson_solve(
      testutil::dense_poisson(m), Eigen::Map<const Eigen::VectorXd>(sigma.values.data(), 512));
  CHECK(testutil::rel_max_diff(sol.chi.values, std::span<const double>(ref.data(), 512)) <= 1e-10);
  double mean = 0.0;
  for (double v : sol.chi.values) mean += v;
  CHECK(std::abs(mean) < 1e-12);
}

TEST_CASE("inhomogeneous medium matches a dense direct solve") {
  std::mt19937_64 rng(8);
  const Grid g(6, 5, 4, 0.5);
  const MediumProfile m(g, {RandomSmooth{1.0, 6.0, 3, 3}});
  ScalarField sigma = testutil::random_scalar(g, rng);
  double mean = 0.0;
  for (double v : sigma.values) mean += v / sigma.size();
  for (double& v : sigma.values) v -= mean;
  const auto sol = solve_poisson(sigma, m, {1e-13});
  CHECK(sol.residual_norm <= 1e-13);
  const auto n = static_cast<Eigen::Index>(g.cells());
  const Eigen::VectorXd ref = testutil::dense_poisson_solve(
      testutil::dense_poisson(m), Eigen::Map<const Eigen::VectorXd>(sigma.values.data(), n));
  CHECK(testutil::rel_max_diff(sol.chi.values, std::span<const double>(ref.data(), n)) <= 1e-10);
}

TEST_CASE("net charge is rejected unless neutralized") {
  const Grid g(4, 4, 4);
  const MediumProfile m(g, {Homogeneous{2.0}});
  ScalarField sigma(g);
  sigma[0] = 1.0;
  CHECK_THROWS_AS((void)solve_poisson(sigma, m), IncompatibleSource);
  PoissonOptions opts;
  opts.auto_neutralize = true;
  const auto sol = solve_poisson(sigma, m, opts);
  CHECK(sol.residual_norm <= opts.tol);
}

TEST_CASE("iteration cap raises a solver error with the best residual") {
  std::mt19937_64 rng(1);
  const Grid g(8, 8, 8);
  const MediumProfile m(g, {RandomSmooth{1.0, 9.0, 4, 3}});
  ScalarField sigma(g);
  sigma[0] = 1.0;
  sigma[100] = -1.0;
  PoissonOptions opts;
  opts.max_iterations = 3;
  try {
    (void)solve_poisson(sigma, m, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.best_residual() > opts.tol);
    CHECK(e.best_residual() < 1.0 + 1e-12);
  }
}

TEST_CASE("decomposition of transverse and weighted-longitudinal inputs") {
  std::mt19937_64 rng(21);
  const Grid g(6, 6, 6);
  const MediumProfile m(g, {RandomSmooth{1.0, 4.0, 5, 3}});

  const VectorField transverse = curl_t(testutil::random_vector(g, Placement::face, rng));
  const auto d1 = helmholtz_decompose(transverse, m);
  CHECK(max_abs((d1.x1 - transverse).values) <= 1e-10 * max_abs(transverse.values));
  CHECK(max_abs(d1.x2.values) <= 1e-10 * max_abs(transverse.values));
  CHECK(max_abs((constrained_derivative_linear(transverse, m) - transverse).values) <=
        1e-10 * max_abs(transverse.values));

  const VectorField longitudinal = eps_times(m, grad(testutil::random_scalar(g, rng)));
  const auto d2 = helmholtz_decompose(longitudinal, m);
  CHECK(max_abs(d2.x1.values) <= 1e-9 * max_abs(longitudinal.values));
  CHECK(max_abs(constrained_derivative_linear(longitudinal, m).values) <=
        1e-9 * max_abs(longitudinal.values));
}

TEST_CASE("random decomposition: reconstruction, transversality, probe orthogonality") {
  std::mt19937_64 rng(4);
  const Grid g(6, 6, 6, 0.8);
  const MediumProfile m(g, {Sphere{{2.4, 2.4, 2.4}, 1.6, 1.0, 5.0}});
  const VectorField x = testutil::random_vector(g, Placement::edge, rng);
  const auto d = helmholtz_decompose(x, m, 1e-11);
  CHECK(max_abs((d.x1 + d.x2 - x).values) <= 1e-12 * max_abs(x.values));
  CHECK(norm(div(d.x1)) * g.spacing <= 1e-10 * norm(x));
  const VectorField x2 = eps_times(m, grad(d.chi));
  CHECK(x2.values == d.x2.values);
  for (int probe = 0; probe < 10; ++probe) {
    const VectorField gp = grad(testutil::random_scalar(g, rng));
    CHECK(std::abs(inner(d.x1, gp)) <= 1e-10 * norm(d.x1) * norm(gp));
  }
  // Re-decomposing the transverse part leaves it unchanged.
  const auto again = helmholtz_decompose(d.x1, m, 1e-11);
  CHECK(max_abs((again.x1 - d.x1).values) <= 2e-10 * max_abs(x.values));
}

TEST_CASE("harmonic fields are curl free and generalized transverse") {
  const Grid g(5, 6, 4);
  const MediumProfile m(g, {RandomSmooth{1.0, 3.0, 9, 3}});
  const auto h = harmonic_fields(m);
  REQUIRE(h.size() == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(max_abs(curl(h[c]).values) <= 1e-12);
    CHECK(norm(div(eps_times(m, h[c]))) <= 1e-10 * norm(h[c]));
    // The mean of component c stays 1: the gradient correction has zero mean.
    double mean = 0.0;
    for (double v : h[c].component(c)) mean += v / g.cells();
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("spherical cavity field factor") {
  const Grid g(64, 64, 64);
  const auto rep = cavity_field_report(4.0, g, 8.0);
  CHECK(std::abs(rep.factor - 4.0 / 3.0) <= 0.03 * 4.0 / 3.0);
  // Away from the staircase boundary the interior field is uniform.
  CHECK(rep.core_spread <= 0.03);
  CHECK(rep.residual_norm <= 1e-10);
  CHECK(cavity_field_factor(1.0, Grid(16, 16, 16), 4.0) == 1.0);
  CHECK_THROWS_AS((void)cavity_field_factor(4.0, Grid(16, 16, 16), 1.0), ContractError);
  CHECK_THROWS_AS((void)cavity_field_factor(4.0, Grid(16, 16, 16), 5.0), ContractError);
}
