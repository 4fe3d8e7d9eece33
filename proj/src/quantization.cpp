#include "mqed/quantization.hpp"

#include <cmath>

namespace mqed {

namespace {

void require_count(const ModeBank& bank, const ModeCoefficients& c, const char* what) {
  if (c.q.size() != bank.size() || c.p.size() != bank.size())
    throw ContractError(std::string(what) + ": " + std::to_string(c.q.size()) + "/" +
                        std::to_string(c.p.size()) + " coefficients for a bank of " +
                        std::to_string(bank.size()) + " modes");
}

Eigen::Map<const Eigen::VectorXd> view(const VectorField& f) {
  return {f.values.data(), static_cast<Eigen::Index>(f.size())};
}

}  // namespace

TransverseProjector::TransverseProjector(std::shared_ptr<const ModeBank> bank)
    : bank_(std::move(bank)) {
  if (!bank_ || bank_->size() == 0) throw ContractError("TransverseProjector needs a nonempty bank");
  const auto d = static_cast<Eigen::Index>(3 * bank_->grid().cells());
  const auto n = static_cast<Eigen::Index>(bank_->size());
  h_.resize(d, n);
  for (Eigen::Index j = 0; j < n; ++j) h_.col(j) = view(bank_->modes_h[j]);
  eh_ = view(bank_->medium->eps()).asDiagonal() * h_;
}

VectorField TransverseProjector::apply(const VectorField& x, ProjectorAction action) const {
  require_placement(x, Placement::edge, "apply_projector");
  require_same(x.grid, bank_->grid(), "apply_projector");
  const double dv = x.grid.cell_volume();
  VectorField out(x.grid, Placement::edge);
  Eigen::Map<Eigen::VectorXd> y(out.values.data(), static_cast<Eigen::Index>(out.size()));
  if (action == ProjectorAction::generalized)
    y.noalias() = h_ * (dv * (eh_.transpose() * view(x)));
  else
    y.noalias() = eh_ * (dv * (h_.transpose() * view(x)));
  return out;
}

Eigen::MatrixXd TransverseProjector::matrix() const {
  return bank_->grid().cell_volume() * (h_ * eh_.transpose());
}

VectorField apply_projector(const TransverseProjector& p, const VectorField& x,
                            ProjectorAction action) {
  return p.apply(x, action);
}

Eigen::Matrix3d commutator_dyadic(const ModeBank& bank, std::size_t r, std::size_t r_prime) {
  if (!bank.complete)
    throw ContractError("commutator_dyadic needs a complete bank (full transverse spectrum)");
  const std::size_t n = bank.grid().cells();
  if (r >= n || r_prime >= n) throw ContractError("commutator_dyadic: cell index out of range");
  const auto& eps = bank.medium->eps();
  Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
  for (const auto& h : bank.modes_h)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        out(a, b) += h[a * n + r] * h[b * n + r_prime] * eps[b * n + r_prime];
  return out;
}

std::vector<std::complex<double>> annihilation_amplitudes(const ModeCoefficients& c,
                                                          const std::vector<double>& frequencies) {
  if (c.q.size() != frequencies.size() || c.p.size() != frequencies.size())
    throw ContractError("annihilation_amplitudes: size mismatch");
  std::vector<std::complex<double>> a(frequencies.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = frequencies[i];
    if (!(w > 0.0)) throw ContractError("annihilation amplitude undefined for a zero-frequency mode");
    a[i] = {std::sqrt(0.5 * w) * c.q[i], c.p[i] / std::sqrt(2.0 * w)};
  }
  return a;
}

ModeCoefficients coefficients_from_amplitudes(const std::vector<std::complex<double>>& a,
                                              const std::vector<double>& frequencies) {
  if (a.size() != frequencies.size()) throw ContractError("coefficients_from_amplitudes: size mismatch");
  ModeCoefficients c;
  c.q.resize(a.size());
  c.p.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = frequencies[i];
    if (!(w > 0.0)) throw ContractError("annihilation amplitude undefined for a zero-frequency mode");
    c.q[i] = a[i].real() / std::sqrt(0.5 * w);
    c.p[i] = a[i].imag() * std::sqrt(2.0 * w);
  }
  return c;
}

FieldSnapshot synthesize_fields(const ModeBank& bank, const ModeCoefficients& c) {
  require_count(bank, c, "synthesize_fields");
  const Grid& g = bank.grid();
  const auto& eps = bank.medium->eps();
  FieldSnapshot f{VectorField(g, Placement::edge), VectorField(g, Placement::edge), true};
  for (std::size_t l = 0; l < bank.size(); ++l) {
    const auto& h = bank.modes_h[l];
    const double q = c.q[l], p = c.p[l];
    for (std::size_t i = 0; i < h.size(); ++i) {
      f.A[i] += q * h[i];
      f.Pi[i] += p * eps[i] * h[i];
    }
  }
  return f;
}

ModeCoefficients analyze_fields(const ModeBank& bank, const FieldSnapshot& f) {
  require_same(f.A.grid, bank.grid(), "analyze_fields");
  ModeCoefficients c;
  for (const auto& h : bank.modes_h) {
    c.q.push_back(eps_inner(f.A, h, *bank.medium));
    c.p.push_back(inner(f.Pi, h));
  }
  return c;
}

VectorField electric_field(const FieldSnapshot& f, const MediumProfile& m) {
  if (!f.free_field) throw ContractError("electric_field: snapshot includes atomic polarization");
  require_same(f.Pi.grid, m.grid(), "electric_field");
  VectorField e(f.Pi.grid, Placement::edge);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = -f.Pi[i] / m.eps()[i];
  return e;
}

VectorField magnetic_field(const FieldSnapshot& f) { return curl(f.A); }

EnergyForms hamiltonian_energy(const ModeBank& bank, const ModeCoefficients& c,
                               const MediumProfile& m) {
  require_count(bank, c, "hamiltonian_energy");
  require_same(m.grid(), bank.grid(), "hamiltonian_energy");
  const FieldSnapshot f = synthesize_fields(bank, c);
  const VectorField b = curl(f.A);
  long double electric = 0.0L, magnetic = 0.0L, spectral = 0.0L;
  for (std::size_t i = 0; i < f.Pi.size(); ++i) {
    electric += static_cast<long double>(f.Pi[i]) * f.Pi[i] / m.eps()[i];
    magnetic += static_cast<long double>(b[i]) * b[i] / m.mu()[i];
  }
  for (std::size_t l = 0; l < bank.size(); ++l) {
    const double w = bank.frequencies[l];
    spectral += static_cast<long double>(c.p[l]) * c.p[l] +
                static_cast<long double>(w * w) * c.q[l] * c.q[l];
  }
  EnergyForms out;
  out.integral_form = static_cast<double>(0.5L * (electric + magnetic) * m.grid().cell_volume());
  out.spectral_form = static_cast<double>(0.5L * spectral);
  return out;
}

ModeCoefficients evolve(const ModeCoefficients& c, const std::vector<double>& frequencies,
                        double t) {
  if (c.q.size() != frequencies.size() || c.p.size() != frequencies.size())
    throw ContractError("evolve: size mismatch");
  ModeCoefficients out = c;
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const double w = frequencies[i];
    if (w == 0.0) {
      out.q[i] = c.q[i] + c.p[i] * t;
      continue;
    }
    const double cs = std::cos(w * t), sn = std::sin(w * t);
    out.q[i] = c.q[i] * cs + c.p[i] / w * sn;
    out.p[i] = c.p[i] * cs - w * c.q[i] * sn;
  }
  return out;
}

}  // namespace mqed
