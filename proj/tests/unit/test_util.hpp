#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>

#include "mqed/lattice.hpp"
#include "mqed/medium.hpp"
#include "mqed/modes.hpp"

namespace testutil {

using namespace mqed;

inline double uniform(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

inline VectorField random_vector(const Grid& g, Placement p, std::mt19937_64& rng) {
  VectorField v(g, p);
  for (double& x : v.values) x = uniform(rng);
  return v;
}

inline ScalarField random_scalar(const Grid& g, std::mt19937_64& rng) {
  ScalarField s(g);
  for (double& x : s.values) x = uniform(rng);
  return s;
}

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

// Flat index of component c at cell (i, j, k) with periodic wrap.
inline std::size_t at(const Grid& g, int c, int i, int j, int k) {
  return c * g.cells() +
         g.index(wrap(i, g.dims[0]), wrap(j, g.dims[1]), wrap(k, g.dims[2]));
}

// Dense matrix of the forward-difference gradient, written out cell by cell.
inline Eigen::MatrixXd dense_grad(const Grid& g) {
  const auto n = static_cast<Eigen::Index>(g.cells());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * n, n);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const auto c = static_cast<Eigen::Index>(g.index(i, j, k));
        const std::array<std::array<int, 3>, 3> nb{{{i + 1, j, k}, {i, j + 1, k}, {i, j, k + 1}}};
        for (int a = 0; a < 3; ++a) {
          const auto row = a * n + c;
          const auto col = static_cast<Eigen::Index>(g.index(
              wrap(nb[a][0], g.dims[0]), wrap(nb[a][1], g.dims[1]), wrap(nb[a][2], g.dims[2])));
          m(row, col) += 1.0 / g.spacing;
          m(row, c) -= 1.0 / g.spacing;
        }
      }
  return m;
}

// Dense Poisson matrix -div(eps grad) = G^T diag(eps) G, assembled from the
// dense gradient (independent of the solver's stencil code).
inline Eigen::MatrixXd dense_poisson(const MediumProfile& m) {
  const Eigen::MatrixXd gm = dense_grad(m.grid());
  const Eigen::Map<const Eigen::VectorXd> eps(m.eps().values.data(),
                                              static_cast<Eigen::Index>(m.eps().size()));
  return gm.transpose() * eps.asDiagonal() * gm;
}

// Zero-mean solution of A x = b for the singular periodic Poisson matrix.
inline Eigen::VectorXd dense_poisson_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const auto n = a.rows();
  const Eigen::MatrixXd reg = a + Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::VectorXd x = reg.fullPivLu().solve(b);
  x.array() -= x.mean();
  return x;
}

inline std::shared_ptr<const MediumProfile> profile(const Grid& g, MediumDescriptor d) {
  return std::make_shared<const MediumProfile>(g, std::move(d));
}

inline double rel_max_diff(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0.0 ? num / den : num;
}

}  // namespace testutil
