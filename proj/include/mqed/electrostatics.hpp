#pragma once

// Generalized Poisson solver div(eps grad chi) = -sigma on the periodic
// lattice, and the eps-weighted Helmholtz split built on it:
//
//   x = x1 + x2,   div x1 = 0,   x2 = eps ⊙ grad chi.
//
// The periodic null space (constants) is fixed by requiring zero-mean chi.

#include <stdexcept>
#include <string>
#include <vector>

#include "mqed/lattice.hpp"
#include "mqed/medium.hpp"

namespace mqed {

/// Iterative solver failed; carries the best relative residual reached.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  [[nodiscard]] double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

/// Source with a nonzero net charge on a torus has no solution.
class IncompatibleSource : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PoissonOptions {
  double tol = 1e-10;          ///< relative residual ||div(eps grad chi) + sigma|| / ||sigma||
  int max_iterations = 20000;
  bool auto_neutralize = false;  ///< subtract any mean charge instead of rejecting it
};

struct PoissonSolution {
  ScalarField chi;
  double residual_norm = 0.0;  ///< relative, recomputed from scratch
  int iterations = 0;
};

/// Jacobi-preconditioned CG for A chi = sigma with A = -div eps grad.
/// Holds its own workspace: one instance per thread.
class PoissonSolver {
 public:
  PoissonSolver(const Grid& g, const VectorField& edge_coefficient, PoissonOptions opts = {});
  explicit PoissonSolver(const MediumProfile& m, PoissonOptions opts = {})
      : PoissonSolver(m.grid(), m.eps(), opts) {}

  /// Solves in place: `sigma` is the source on entry, chi on exit.
  /// Returns {relative residual, iterations}.
  std::pair<double, int> solve(std::vector<double>& sigma_to_chi);

  [[nodiscard]] PoissonSolution solve(const ScalarField& sigma);

  /// y = -div(coef ⊙ grad x)
  void apply(std::span<const double> x, std::span<double> y);

  [[nodiscard]] const PoissonOptions& options() const { return opts_; }

 private:
  Grid grid_;
  std::vector<double> coef_;
  std::vector<double> inv_diag_;
  PoissonOptions opts_;
  std::vector<double> r_, z_, p_, q_, rhs_;
};

[[nodiscard]] PoissonSolution solve_poisson(const ScalarField& sigma, const MediumProfile& m,
                                            const PoissonOptions& opts = {});

struct DecompositionResult {
  VectorField x1;  ///< divergence-free part
  VectorField x2;  ///< eps ⊙ grad chi
  ScalarField chi;
  double residual_norm = 0.0;
};

[[nodiscard]] DecompositionResult helmholtz_decompose(const VectorField& x, const MediumProfile& m,
                                                      double tol = 1e-10);

/// Constrained functional derivative of the linear functional ∫ x·Y with
/// respect to generalized-transverse Y: the transverse part x1 of x.
[[nodiscard]] VectorField constrained_derivative_linear(const VectorField& x,
                                                        const MediumProfile& m,
                                                        double tol = 1e-10);

/// Curl-free, generalized-transverse fields h_c = e_c + grad psi_c with
/// div(eps h_c) = 0, one per axis.  These span the static part of the
/// generalized-transverse subspace on a torus.
[[nodiscard]] std::vector<VectorField> harmonic_fields(const MediumProfile& m, double tol = 1e-12);

struct CavityFieldReport {
  double factor = 1.0;            ///< mean interior field / applied field
  double interior_spread = 0.0;   ///< (max - min) / mean of E_z inside the cavity
  double core_spread = 0.0;       ///< same, over samples within half the radius
  std::size_t interior_samples = 0;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Spherical eps = 1 cavity of `radius` at the box center in a host of
/// permittivity eps_out; a unit mean field along z is imposed through the
/// periodic cell.  radius is a physical length.
[[nodiscard]] CavityFieldReport cavity_field_report(double eps_out, const Grid& g, double radius,
                                                    double tol = 1e-10);
[[nodiscard]] double cavity_field_factor(double eps_out, const Grid& g, double radius,
                                         double tol = 1e-10);

}  // namespace mqed
