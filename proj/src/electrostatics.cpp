#include "mqed/electrostatics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace mqed {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void remove_mean(std::span<double> v) {
  if (v.empty()) return;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

}  // namespace

PoissonSolver::PoissonSolver(const Grid& g, const VectorField& edge_coefficient,
                             PoissonOptions opts)
    : grid_(g), coef_(edge_coefficient.values), opts_(opts) {
  require_same(g, edge_coefficient.grid, "PoissonSolver");
  require_placement(edge_coefficient, Placement::edge, "PoissonSolver");
  if (!(opts_.tol > 0.0)) throw ContractError("Poisson tolerance must be positive");
  const std::size_t n = g.cells();
  const double inv_h2 = 1.0 / (g.spacing * g.spacing);
  inv_diag_.assign(n, 0.0);
  std::vector<double> diag(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const auto ijk = g.coords(c);
    for (int a = 0; a < 3; ++a) {
      if (g.dims[a] < 2) continue;
      auto prev = ijk;
      prev[a] = (ijk[a] + g.dims[a] - 1) % g.dims[a];
      diag[c] += (coef_[a * n + c] + coef_[a * n + g.index(prev[0], prev[1], prev[2])]) * inv_h2;
    }
  }
  for (std::size_t c = 0; c < n; ++c) inv_diag_[c] = diag[c] > 0.0 ? 1.0 / diag[c] : 1.0;
  r_.resize(n);
  z_.resize(n);
  p_.resize(n);
  q_.resize(n);
  rhs_.resize(n);
}

void PoissonSolver::apply(std::span<const double> x, std::span<double> y) {
  const std::size_t n = grid_.cells();
  const double inv_h2 = 1.0 / (grid_.spacing * grid_.spacing);
  const auto& d = grid_.dims;
  const std::array<std::ptrdiff_t, 3> stride{1, d[0], static_cast<std::ptrdiff_t>(d[0]) * d[1]};
  const double* cx = coef_.data();
  const double* cy = coef_.data() + n;
  const double* cz = coef_.data() + 2 * n;
  std::size_t c = 0;
  for (int k = 0; k < d[2]; ++k) {
    const std::ptrdiff_t kp = (k + 1 == d[2] ? -(d[2] - 1) : 1) * stride[2];
    const std::ptrdiff_t km = (k == 0 ? (d[2] - 1) : -1) * stride[2];
    for (int j = 0; j < d[1]; ++j) {
      const std::ptrdiff_t jp = (j + 1 == d[1] ? -(d[1] - 1) : 1) * stride[1];
      const std::ptrdiff_t jm = (j == 0 ? (d[1] - 1) : -1) * stride[1];
      for (int i = 0; i < d[0]; ++i, ++c) {
        const std::ptrdiff_t ip = (i + 1 == d[0] ? -(d[0] - 1) : 1);
        const std::ptrdiff_t im = (i == 0 ? (d[0] - 1) : -1);
        const double xc = x[c];
        const double s = cx[c] * (x[c + ip] - xc) - cx[c + im] * (xc - x[c + im]) +
                         cy[c] * (x[c + jp] - xc) - cy[c + jm] * (xc - x[c + jm]) +
                         cz[c] * (x[c + kp] - xc) - cz[c + km] * (xc - x[c + km]);
        y[c] = -s * inv_h2;
      }
    }
  }
}

std::pair<double, int> PoissonSolver::solve(std::vector<double>& b) {
  const std::size_t n = grid_.cells();
  if (b.size() != n) throw ContractError("Poisson source size does not match grid");

  const double total = std::accumulate(b.begin(), b.end(), 0.0);
  double magnitude = 0.0;
  for (double v : b) magnitude += std::abs(v);
  // Summation roundoff of a neutral source stays far below this.
  if (std::abs(total) > 1e-10 * magnitude && !opts_.auto_neutralize) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.3g", total / static_cast<double>(n));
    throw IncompatibleSource(std::string("source has nonzero net charge (mean ") + buf +
                             "); periodic problems need a neutral source");
  }
  remove_mean(b);

  const double bnorm = std::sqrt(dot(b, b));
  rhs_ = b;
  std::fill(b.begin(), b.end(), 0.0);
  if (bnorm == 0.0) return {0.0, 0};

  std::vector<double>& x = b;
  int iterations = 0;
  double best = 1.0;
  // Outer loop restarts from the true residual if the recursive one drifted.
  for (int restart = 0; restart < 4; ++restart) {
    apply(x, q_);
    for (std::size_t i = 0; i < n; ++i) r_[i] = rhs_[i] - q_[i];
    remove_mean(r_);
    double rel = std::sqrt(dot(r_, r_)) / bnorm;
    best = std::min(best, rel);
    if (rel <= opts_.tol) {
      remove_mean(x);
      return {rel, iterations};
    }
    for (std::size_t i = 0; i < n; ++i) z_[i] = inv_diag_[i] * r_[i];
    remove_mean(z_);
    p_ = z_;
    double rz = dot(r_, z_);
    while (iterations < opts_.max_iterations) {
      ++iterations;
      apply(p_, q_);
      const double pq = dot(p_, q_);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p_[i];
        r_[i] -= alpha * q_[i];
      }
      rel = std::sqrt(dot(r_, r_)) / bnorm;
      best = std::min(best, rel);
      if (rel <= 0.5 * opts_.tol) break;
      for (std::size_t i = 0; i < n; ++i) z_[i] = inv_diag_[i] * r_[i];
      remove_mean(z_);
      const double rz_new = dot(r_, z_);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p_[i] = z_[i] + beta * p_[i];
    }
    if (iterations >= opts_.max_iterations) break;
  }
  // Final check against the true residual.
  apply(x, q_);
  for (std::size_t i = 0; i < n; ++i) r_[i] = rhs_[i] - q_[i];
  remove_mean(r_);
  const double rel = std::sqrt(dot(r_, r_)) / bnorm;
  best = std::min(best, rel);
  if (rel > opts_.tol)
    throw SolverError("Poisson CG did not converge in " + std::to_string(iterations) +
                          " iterations",
                      best);
  remove_mean(x);
  return {rel, iterations};
}

PoissonSolution PoissonSolver::solve(const ScalarField& sigma) {
  require_same(sigma.grid, grid_, "solve_poisson");
  PoissonSolution out;
  std::vector<double> work = sigma.values;
  const auto [res, it] = solve(work);
  out.chi = ScalarField(grid_, std::move(work));
  out.residual_norm = res;
  out.iterations = it;
  return out;
}

PoissonSolution solve_poisson(const ScalarField& sigma, const MediumProfile& m,
                              const PoissonOptions& opts) {
  PoissonSolver solver(m, opts);
  return solver.solve(sigma);
}

DecompositionResult helmholtz_decompose(const VectorField& x, const MediumProfile& m, double tol) {
  require_placement(x, Placement::edge, "helmholtz_decompose");
  require_same(x.grid, m.grid(), "helmholtz_decompose");
  ScalarField sigma = div(x);
  for (double& v : sigma.values) v = -v;
  PoissonOptions opts;
  opts.tol = tol;
  opts.auto_neutralize = true;  // a discrete divergence sums to zero
  auto sol = solve_poisson(sigma, m, opts);
  DecompositionResult out;
  out.x2 = eps_times(m, grad(sol.chi));
  out.x1 = x - out.x2;
  out.chi = std::move(sol.chi);
  out.residual_norm = sol.residual_norm;
  return out;
}

VectorField constrained_derivative_linear(const VectorField& x, const MediumProfile& m,
                                          double tol) {
  return helmholtz_decompose(x, m, tol).x1;
}

std::vector<VectorField> harmonic_fields(const MediumProfile& m, double tol) {
  const Grid& g = m.grid();
  const std::size_t n = g.cells();
  PoissonOptions opts;
  opts.tol = tol;
  opts.auto_neutralize = true;
  PoissonSolver solver(m, opts);
  std::vector<VectorField> out;
  for (int c = 0; c < 3; ++c) {
    VectorField unit(g, Placement::edge);
    std::fill_n(unit.values.begin() + c * n, n, 1.0);
    std::vector<double> rhs = div(eps_times(m, unit)).values;
    solver.solve(rhs);
    VectorField h = grad(ScalarField(g, std::move(rhs)));
    axpy(1.0, unit, h);
    out.push_back(std::move(h));
  }
  return out;
}

CavityFieldReport cavity_field_report(double eps_out, const Grid& g, double radius, double tol) {
  if (!(eps_out > 0.0)) throw ContractError("eps_out must be positive");
  const double min_len = std::min({g.length(0), g.length(1), g.length(2)});
  if (radius < 2.0 * g.spacing - 1e-12) throw ContractError("cavity radius must be >= 2 cells");
  if (radius > 0.25 * min_len + 1e-12) throw ContractError("cavity radius must be <= L/4");

  const std::array<double, 3> center{0.5 * g.length(0), 0.5 * g.length(1), 0.5 * g.length(2)};
  MediumDescriptor desc{Sphere{center, radius, 1.0, eps_out}};
  const MediumProfile m(g, desc);
  const std::size_t n = g.cells();

  // Applied field E0 = z-hat; the periodic correction chi solves
  // div(eps grad chi) = div(eps z-hat), and E = z-hat - grad chi.
  VectorField dfield(g, Placement::edge);
  std::copy_n(m.eps().values.begin() + 2 * n, n, dfield.values.begin() + 2 * n);
  std::vector<double> rhs = div(dfield).values;
  for (double& v : rhs) v = -v;
  PoissonOptions opts;
  opts.tol = tol;
  opts.auto_neutralize = true;
  PoissonSolver solver(m, opts);
  const auto [res, it] = solver.solve(rhs);
  const VectorField gchi = grad(ScalarField(g, std::move(rhs)));

  CavityFieldReport rep;
  rep.residual_norm = res;
  rep.iterations = it;
  double sum = 0.0, lo = INFINITY, hi = -INFINITY, core_lo = INFINITY, core_hi = -INFINITY;
  for (std::size_t c = 0; c < n; ++c) {
    const auto r = sample_position(g, Placement::edge, 2, c);
    const double dist = periodic_distance(g, r, center);
    if (dist >= radius) continue;
    const double ez = 1.0 - gchi[2 * n + c];
    sum += ez;
    lo = std::min(lo, ez);
    hi = std::max(hi, ez);
    if (dist < 0.5 * radius) {
      core_lo = std::min(core_lo, ez);
      core_hi = std::max(core_hi, ez);
    }
    ++rep.interior_samples;
  }
  if (rep.interior_samples == 0) throw ContractError("cavity contains no field samples");
  rep.factor = sum / static_cast<double>(rep.interior_samples);
  rep.interior_spread = (hi - lo) / rep.factor;
  rep.core_spread = core_hi >= core_lo ? (core_hi - core_lo) / rep.factor : 0.0;
  return rep;
}

double cavity_field_factor(double eps_out, const Grid& g, double radius, double tol) {
  return cavity_field_report(eps_out, g, radius, tol).factor;
}

}  // namespace mqed
