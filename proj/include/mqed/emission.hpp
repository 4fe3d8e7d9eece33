#pragma once

// Dipole coupling of a point atom to the modes of a bank, golden-rule
// emission rates with Lorentzian broadening, the projected local density of
// states, and the empty-cavity local-field correction.
//
// The dipole couples to D / eps, which in the mode basis is the sum over
// modes of h_l; the coupling element is g = -i sqrt(w/2) mu . h_l(R).

#include <array>
#include <complex>
#include <vector>

#include "mqed/modes.hpp"

namespace mqed {

struct AtomSpec {
  std::array<double, 3> position{};  ///< grid coordinates (cell units); physical = position * spacing
  std::vector<double> levels;        ///< energies E_k
  /// dipoles[k][k'] = mu_kk', symmetric in (k, k')
  std::vector<std::vector<std::array<double, 3>>> dipoles;
  double cavity_radius = 0.0;        ///< physical radius of the empty cavity

  /// Ground state 0 and excited state 1 separated by omega0.
  static AtomSpec two_level(const std::array<double, 3>& position, double omega0,
                            const std::array<double, 3>& dipole, double cavity_radius = 0.0);

  /// Throws ContractError on shape, symmetry or position problems.
  void validate(const Grid& g) const;
  [[nodiscard]] const std::array<double, 3>& dipole(std::size_t k, std::size_t k_prime) const;
};

struct CouplingElement {
  std::size_t mode = 0;
  std::size_t k = 0, k_prime = 0;
  std::complex<double> value;
};

struct LdosSample {
  double omega = 0.0;
  double value = 0.0;
};

struct EmissionReport {
  double omega0 = 0.0;
  double rate = 0.0;                ///< Gamma
  double reference = 0.0;           ///< analytic vacuum rate Gamma_0
  double ratio = 0.0;               ///< Gamma / Gamma_0
  double eta = 0.0;                 ///< Lorentzian half width used
  double local_field_factor = 1.0;  ///< cavity field factor (1 when not applied)
  double bulk_ratio = 0.0;          ///< bulk Gamma / Gamma_0 before the local-field factor
  std::vector<LdosSample> ldos_samples;
};

/// Trilinear interpolation of each staggered component of an edge field at
/// a point given in grid coordinates (periodic).
[[nodiscard]] std::array<double, 3> interpolate_edge_field(const VectorField& f,
                                                           const std::array<double, 3>& position);

[[nodiscard]] std::vector<CouplingElement> dipole_coupling(const ModeBank& bank,
                                                           const AtomSpec& atom, std::size_t k,
                                                           std::size_t k_prime);

/// Normalized Lorentzian (eta / pi) / (x^2 + eta^2).
[[nodiscard]] double lorentzian(double x, double eta);

/// Analytic free-space rate w^3 |mu|^2 / (3 pi).
[[nodiscard]] double vacuum_rate(double omega0, double dipole_norm);

/// Twice the mean spacing between distinct frequency levels of the bank
/// within omega0 (1 +- 1/4).  Throws if fewer than two levels fall there.
[[nodiscard]] double default_broadening(const ModeBank& bank, double omega0);

/// Golden-rule rate for the transition k -> k' (E_k > E_k').  eta <= 0
/// selects default_broadening.  Throws ContractError when omega0 lies
/// outside the band the bank resolves.
[[nodiscard]] EmissionReport emission_rate(const ModeBank& bank, const AtomSpec& atom,
                                           std::size_t k, std::size_t k_prime, double eta = 0.0);

struct CavityModelOptions {
  int grid_cells = 64;        ///< cubic grid for the electrostatic problem
  double radius_cells = 8.0;  ///< cavity radius in cells of that grid
  double tol = 1e-10;
};

/// Bulk rate on a homogeneous bank times the squared electrostatic field
/// factor of an empty spherical cavity of the atom's radius.
[[nodiscard]] EmissionReport local_field_corrected_rate(const ModeBank& bulk_bank,
                                                        const AtomSpec& atom, std::size_t k,
                                                        std::size_t k_prime, double eta = 0.0,
                                                        const CavityModelOptions& cavity = {});

/// sum_l |u . h_l(r)|^2 eps(r) L_eta(w - w_l) for unit u along `orientation`.
[[nodiscard]] std::vector<LdosSample> ldos_spectrum(const ModeBank& bank,
                                                    const std::array<double, 3>& position,
                                                    const std::array<double, 3>& orientation,
                                                    const std::vector<double>& omega_grid,
                                                    double eta);

}  // namespace mqed
