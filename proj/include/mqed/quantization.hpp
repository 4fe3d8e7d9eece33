#pragma once

// Normal-mode expansion of the field in a dielectric: vector potential and
// canonical momentum from mode coordinates, the generalized-transverse
// projector built from a mode bank, and the two forms of the field energy.
//
//   A  = sum_l q_l h_l
//   Pi = sum_l p_l eps h_l
//   H  = 1/2 sum (Pi^2 / eps + (curl A)^2 / mu) dV = 1/2 sum_l (p_l^2 + w_l^2 q_l^2)

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <vector>

#include "mqed/modes.hpp"

namespace mqed {

/// Which side of the kernel sum_l h_l(r) h_l(r') eps(r') acts on the input.
enum class ProjectorAction {
  /// x -> sum_l h_l <eps h_l, x>: identity on generalized-transverse fields
  /// (div(eps x) = 0), annihilates gradients.
  generalized,
  /// x -> eps sum_l h_l <h_l, x>: identity on transverse fields (div x = 0),
  /// annihilates eps times a gradient.
  transverse,
};

class TransverseProjector {
 public:
  explicit TransverseProjector(std::shared_ptr<const ModeBank> bank);

  [[nodiscard]] const ModeBank& bank() const { return *bank_; }
  [[nodiscard]] VectorField apply(const VectorField& x,
                                  ProjectorAction action = ProjectorAction::generalized) const;
  /// Dense matrix of the generalized action (3N x 3N; small grids only).
  [[nodiscard]] Eigen::MatrixXd matrix() const;

 private:
  std::shared_ptr<const ModeBank> bank_;
  Eigen::MatrixXd h_;    // modes_h as columns
  Eigen::MatrixXd eh_;   // eps * modes_h as columns
};

[[nodiscard]] VectorField apply_projector(const TransverseProjector& p, const VectorField& x,
                                          ProjectorAction action = ProjectorAction::transverse);

/// sum_l h_l[a](r) h_l[b](r') eps[b](r') for edge samples at cells r and
/// r'.  Requires a complete bank.  Equals the generalized projector matrix
/// entries divided by the cell volume.
[[nodiscard]] Eigen::Matrix3d commutator_dyadic(const ModeBank& bank, std::size_t r,
                                                std::size_t r_prime);

struct ModeCoefficients {
  std::vector<double> q;
  std::vector<double> p;
};

/// a_l = sqrt(w/2) q + i p / sqrt(2 w).  Throws for w = 0.
[[nodiscard]] std::vector<std::complex<double>> annihilation_amplitudes(
    const ModeCoefficients& c, const std::vector<double>& frequencies);
[[nodiscard]] ModeCoefficients coefficients_from_amplitudes(
    const std::vector<std::complex<double>>& a, const std::vector<double>& frequencies);

struct FieldSnapshot {
  VectorField A;
  VectorField Pi;
  bool free_field = true;  ///< no atoms: E = -dA/dt = -Pi / eps
};

[[nodiscard]] FieldSnapshot synthesize_fields(const ModeBank& bank, const ModeCoefficients& c);

/// Mode coordinates of a snapshot: q_l = <A, h_l>_eps, p_l = <Pi, h_l>.
[[nodiscard]] ModeCoefficients analyze_fields(const ModeBank& bank, const FieldSnapshot& f);

[[nodiscard]] VectorField electric_field(const FieldSnapshot& f, const MediumProfile& m);
[[nodiscard]] VectorField magnetic_field(const FieldSnapshot& f);

struct EnergyForms {
  double integral_form = 0.0;
  double spectral_form = 0.0;
};

[[nodiscard]] EnergyForms hamiltonian_energy(const ModeBank& bank, const ModeCoefficients& c,
                                             const MediumProfile& m);

/// Free evolution q(t) = q cos wt + (p/w) sin wt, p(t) = p cos wt - w q sin wt.
[[nodiscard]] ModeCoefficients evolve(const ModeCoefficients& c,
                                      const std::vector<double>& frequencies, double t);

}  // namespace mqed
