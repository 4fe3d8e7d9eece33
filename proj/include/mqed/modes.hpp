#pragma once

// The Hermitian operator Q = eps^-1/2 curl_t (1/mu) curl eps^-1/2 on edge
// fields and its generalized-transverse eigenmodes.
//
// Modes are computed in the g-representation, where Q is symmetric under
// the plain grid inner product, and converted afterwards to
// h = eps^-1/2 g.  With that convention h satisfies
//   curl_t (1/mu) curl h = eps w^2 h,   div(eps h) = 0,
//   sum eps h_a h_b dV = delta_ab.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mqed/electrostatics.hpp"
#include "mqed/lattice.hpp"
#include "mqed/medium.hpp"

namespace mqed {

enum class OperatorVariant : std::uint8_t { nonmagnetic = 0, magnetic = 1 };

class QOperator {
 public:
  explicit QOperator(std::shared_ptr<const MediumProfile> medium,
                     OperatorVariant variant = OperatorVariant::nonmagnetic);

  [[nodiscard]] const MediumProfile& medium() const { return *medium_; }
  [[nodiscard]] std::shared_ptr<const MediumProfile> medium_ptr() const { return medium_; }
  [[nodiscard]] OperatorVariant variant() const { return variant_; }
  [[nodiscard]] const Grid& grid() const { return medium_->grid(); }
  [[nodiscard]] std::size_t dimension() const { return 3 * grid().cells(); }
  [[nodiscard]] const std::vector<double>& inv_sqrt_eps() const { return inv_sqrt_eps_; }
  [[nodiscard]] const std::vector<double>& sqrt_eps() const { return sqrt_eps_; }

  /// out = Q in.  `scratch` must hold 2 * dimension() doubles.
  void apply(std::span<const double> in, std::span<double> out, std::span<double> scratch) const;

  /// Rigorous lower bound on the smallest nonzero eigenvalue.
  [[nodiscard]] double nonzero_eigenvalue_floor() const;

 private:
  std::shared_ptr<const MediumProfile> medium_;
  OperatorVariant variant_;
  std::vector<double> inv_sqrt_eps_, sqrt_eps_, inv_mu_;
};

[[nodiscard]] VectorField apply_q(const QOperator& op, const VectorField& g);

/// Removes the sqrt(eps) ⊙ grad psi (null-space) component of g.  The result
/// satisfies div(sqrt(eps) ⊙ out) = 0 to the Poisson tolerance.
[[nodiscard]] VectorField project_transverse_g(const VectorField& g, const MediumProfile& m,
                                               double tol = 1e-10);

/// Reusable form of project_transverse_g for many vectors on one medium.
class TransverseGProjector {
 public:
  TransverseGProjector(const MediumProfile& m, double tol);
  void project(std::span<double> g);

 private:
  Grid grid_;
  std::vector<double> sqrt_eps_;
  PoissonSolver solver_;
  std::vector<double> rhs_, tmp_;
};

struct ModeSolverOptions {
  double tol = 1e-10;           ///< ||Q g - lambda g|| <= tol * lambda
  double poisson_tol = 1e-11;
  int max_iterations = 400;
  int guard = -1;               ///< extra block vectors; < 0 picks a default
  std::uint64_t seed = 1;
  double cluster_tol = 1e-8;    ///< relative frequency gap that merges degenerate modes
  bool verbose = false;
};

struct ModeBank {
  std::shared_ptr<const MediumProfile> medium;
  OperatorVariant variant = OperatorVariant::nonmagnetic;
  std::vector<double> frequencies;   ///< ascending, >= 0
  std::vector<VectorField> modes_g;  ///< unit grid norm
  std::vector<VectorField> modes_h;  ///< g / sqrt(eps)
  double gram_defect = 0.0;
  std::vector<double> residuals;     ///< ||Q g - w^2 g|| / ||g||
  bool complete = false;             ///< spans the whole generalized-transverse subspace
  double tolerance = 0.0;
  int iterations = 0;

  [[nodiscard]] std::size_t size() const { return frequencies.size(); }
  [[nodiscard]] const Grid& grid() const { return medium->grid(); }
};

/// Fills modes_h from modes_g and recomputes gram_defect / residuals.
void finalize_bank(ModeBank& bank);

/// Number of nonzero eigenvalues of Q on the grid (rank of curl).
[[nodiscard]] std::size_t max_nonzero_modes(const Grid& g);

/// Lowest n_modes nonzero eigenpairs by preconditioned block iteration
/// (LOBPCG) restricted to the generalized-transverse subspace.
[[nodiscard]] ModeBank solve_modes(const QOperator& op, int n_modes,
                                   const ModeSolverOptions& opts = {});

/// Dense matrix of Q, built column by column (small grids only).
[[nodiscard]] Eigen::MatrixXd dense_q(const QOperator& op);

/// Dense full spectrum: every nonzero eigenpair plus the three static
/// (harmonic) generalized-transverse fields at frequency zero.
[[nodiscard]] ModeBank dense_complete_bank(const QOperator& op);

struct ModeResidualReport {
  std::vector<double> residuals;        ///< ||Q g - w^2 g|| / ||g||
  std::vector<double> wave_residuals;   ///< ||curl_t curl h - eps w^2 h|| / ||h||
  std::vector<double> divergence;       ///< ||div(eps h)|| * h / ||eps h||
  double max_residual = 0.0;
  double max_wave_residual = 0.0;
  double max_divergence = 0.0;
  double gram_defect = 0.0;             ///< max |<h_a, h_b>_eps - delta_ab|
  double min_eigenvalue = 0.0;
};

[[nodiscard]] ModeResidualReport mode_residual_report(const ModeBank& bank);

/// Groups of indices whose frequencies agree within cluster_tol * w_max.
[[nodiscard]] std::vector<std::vector<std::size_t>> degenerate_clusters(
    const std::vector<double>& frequencies, double cluster_tol = 1e-8);

/// Rotates each degenerate cluster of an orthonormal column block to a
/// basis that depends only on the spanned subspace (pivoted on the
/// projector diagonal, lowest component index on ties).
void canonicalize_clusters(Eigen::MatrixXd& vectors, const std::vector<double>& frequencies,
                           double cluster_tol);

}  // namespace mqed
