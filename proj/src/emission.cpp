#include "mqed/emission.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mqed/electrostatics.hpp"

namespace mqed {

namespace {

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace

AtomSpec AtomSpec::two_level(const std::array<double, 3>& position, double omega0,
                             const std::array<double, 3>& dipole, double cavity_radius) {
  AtomSpec a;
  a.position = position;
  a.levels = {0.0, omega0};
  a.dipoles = {{std::array<double, 3>{}, dipole}, {dipole, std::array<double, 3>{}}};
  a.cavity_radius = cavity_radius;
  return a;
}

void AtomSpec::validate(const Grid& g) const {
  for (int a = 0; a < 3; ++a)
    if (!(position[a] >= 0.0 && position[a] < g.dims[a]))
      throw ContractError("atom position outside the grid along axis " + std::to_string(a));
  const std::size_t n = levels.size();
  if (dipoles.size() != n) throw ContractError("dipole matrix must be levels x levels");
  for (std::size_t k = 0; k < n; ++k) {
    if (dipoles[k].size() != n) throw ContractError("dipole matrix must be levels x levels");
    for (std::size_t j = 0; j < k; ++j)
      if (dipoles[k][j] != dipoles[j][k])
        throw ContractError("dipole matrix must be symmetric (mu_kk' = mu_k'k)");
  }
  if (cavity_radius < 0.0) throw ContractError("cavity radius must be nonnegative");
}

const std::array<double, 3>& AtomSpec::dipole(std::size_t k, std::size_t k_prime) const {
  if (k >= levels.size() || k_prime >= levels.size())
    throw ContractError("level index out of range");
  return dipoles.at(k).at(k_prime);
}

std::array<double, 3> interpolate_edge_field(const VectorField& f,
                                             const std::array<double, 3>& position) {
  require_placement(f, Placement::edge, "interpolate_edge_field");
  const Grid& g = f.grid;
  const std::size_t n = g.cells();
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    // Component c is sampled at integer coordinates shifted by 1/2 along c.
    std::array<int, 3> base{};
    std::array<double, 3> frac{};
    for (int a = 0; a < 3; ++a) {
      const double u = position[a] - (a == c ? 0.5 : 0.0);
      const double fl = std::floor(u);
      frac[a] = u - fl;
      base[a] = static_cast<int>(fl);
    }
    double v = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
      double w = 1.0;
      std::array<int, 3> idx{};
      for (int a = 0; a < 3; ++a) {
        const int bit = (corner >> a) & 1;
        w *= bit ? frac[a] : 1.0 - frac[a];
        idx[a] = ((base[a] + bit) % g.dims[a] + g.dims[a]) % g.dims[a];
      }
      if (w == 0.0) continue;
      v += w * f.values[c * n + g.index(idx[0], idx[1], idx[2])];
    }
    out[c] = v;
  }
  return out;
}

std::vector<CouplingElement> dipole_coupling(const ModeBank& bank, const AtomSpec& atom,
                                             std::size_t k, std::size_t k_prime) {
  atom.validate(bank.grid());
  const auto& mu = atom.dipole(k, k_prime);
  std::vector<CouplingElement> out;
  out.reserve(bank.size());
  for (std::size_t l = 0; l < bank.size(); ++l) {
    const auto h = interpolate_edge_field(bank.modes_h[l], atom.position);
    const double amp = -std::sqrt(0.5 * bank.frequencies[l]) * dot3(mu, h);
    out.push_back({l, k, k_prime, {0.0, amp}});
  }
  return out;
}

double lorentzian(double x, double eta) {
  return eta / std::numbers::pi / (x * x + eta * eta);
}

double vacuum_rate(double omega0, double dipole_norm) {
  return omega0 * omega0 * omega0 * dipole_norm * dipole_norm / (3.0 * std::numbers::pi);
}

double default_broadening(const ModeBank& bank, double omega0) {
  std::vector<double> levels;
  const double lo = 0.75 * omega0, hi = 1.25 * omega0;
  for (const auto& cl : degenerate_clusters(bank.frequencies, 1e-8)) {
    const double w = bank.frequencies[cl.front()];
    if (w >= lo && w <= hi) levels.push_back(w);
  }
  if (levels.size() < 2)
    throw ContractError("bank resolves fewer than two frequency levels near omega0 = " +
                        std::to_string(omega0) + "; cannot pick a broadening");
  return 2.0 * (levels.back() - levels.front()) / static_cast<double>(levels.size() - 1);
}

EmissionReport emission_rate(const ModeBank& bank, const AtomSpec& atom, std::size_t k,
                             std::size_t k_prime, double eta) {
  atom.validate(bank.grid());
  const double omega0 = atom.levels.at(k) - atom.levels.at(k_prime);
  if (!(omega0 > 0.0)) throw ContractError("transition frequency must be positive");
  if (bank.size() == 0) throw ContractError("emission_rate: empty bank");
  if (!(eta > 0.0)) eta = default_broadening(bank, omega0);

  double lowest = INFINITY;
  for (double w : bank.frequencies)
    if (w > 0.0) lowest = std::min(lowest, w);
  const double top = bank.frequencies.back();
  if (omega0 < lowest)
    throw ContractError("omega0 = " + std::to_string(omega0) +
                        " lies below the lowest resolved mode frequency " + std::to_string(lowest));
  if (!bank.complete && omega0 > top - 2.0 * eta)
    throw ContractError("omega0 = " + std::to_string(omega0) +
                        " is too close to the top of the truncated bank (" + std::to_string(top) +
                        ", eta " + std::to_string(eta) + ")");

  const auto& mu = atom.dipole(k, k_prime);
  double sum = 0.0;
  for (std::size_t l = 0; l < bank.size(); ++l) {
    const double w = bank.frequencies[l];
    const auto h = interpolate_edge_field(bank.modes_h[l], atom.position);
    const double proj = dot3(mu, h);
    sum += 0.5 * w * proj * proj * lorentzian(omega0 - w, eta);
  }
  EmissionReport rep;
  rep.omega0 = omega0;
  rep.eta = eta;
  rep.rate = 2.0 * std::numbers::pi * sum;
  rep.reference = vacuum_rate(omega0, std::sqrt(dot3(mu, mu)));
  rep.ratio = rep.reference > 0.0 ? rep.rate / rep.reference : 0.0;
  rep.bulk_ratio = rep.ratio;
  return rep;
}

EmissionReport local_field_corrected_rate(const ModeBank& bulk_bank, const AtomSpec& atom,
                                          std::size_t k, std::size_t k_prime, double eta,
                                          const CavityModelOptions& cavity) {
  const MediumProfile& m = *bulk_bank.medium;
  if (m.eps_min() != m.eps_max())
    throw ContractError("local-field correction needs a homogeneous host bank");
  if (!(atom.cavity_radius > 0.0)) throw ContractError("atom needs a positive cavity radius");
  if (!(cavity.radius_cells >= 2.0) || cavity.grid_cells < 8)
    throw ContractError("cavity model grid is too coarse");

  EmissionReport rep = emission_rate(bulk_bank, atom, k, k_prime, eta);
  const double eps = m.eps_max();
  // The cavity grid is scaled so the atom's radius spans radius_cells cells.
  const Grid cg({cavity.grid_cells, cavity.grid_cells, cavity.grid_cells},
                atom.cavity_radius / cavity.radius_cells);
  const double factor = cavity_field_factor(eps, cg, atom.cavity_radius, cavity.tol);
  rep.local_field_factor = factor;
  rep.bulk_ratio = rep.ratio;
  rep.rate *= factor * factor;
  rep.ratio = rep.reference > 0.0 ? rep.rate / rep.reference : 0.0;
  return rep;
}

std::vector<LdosSample> ldos_spectrum(const ModeBank& bank, const std::array<double, 3>& position,
                                      const std::array<double, 3>& orientation,
                                      const std::vector<double>& omega_grid, double eta) {
  if (!(eta > 0.0)) throw ContractError("ldos_spectrum: eta must be positive");
  if (!std::is_sorted(omega_grid.begin(), omega_grid.end()))
    throw ContractError("ldos_spectrum: omega grid must be ascending");
  const double un = std::sqrt(dot3(orientation, orientation));
  if (!(un > 0.0)) throw ContractError("ldos_spectrum: orientation must be nonzero");
  const Grid& g = bank.grid();
  for (int a = 0; a < 3; ++a)
    if (!(position[a] >= 0.0 && position[a] < g.dims[a]))
      throw ContractError("ldos_spectrum: position outside the grid");

  const std::array<double, 3> u{orientation[0] / un, orientation[1] / un, orientation[2] / un};
  const double eps_r =
      bank.medium->eps_at({position[0] * g.spacing, position[1] * g.spacing, position[2] * g.spacing});
  std::vector<double> weight(bank.size());
  for (std::size_t l = 0; l < bank.size(); ++l) {
    const double p = dot3(u, interpolate_edge_field(bank.modes_h[l], position));
    weight[l] = p * p * eps_r;
  }
  std::vector<LdosSample> out;
  out.reserve(omega_grid.size());
  for (double w : omega_grid) {
    double s = 0.0;
    for (std::size_t l = 0; l < bank.size(); ++l)
      s += weight[l] * lorentzian(w - bank.frequencies[l], eta);
    out.push_back({w, s});
  }
  return out;
}

}  // namespace mqed
