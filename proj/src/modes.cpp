#include "mqed/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mqed {

QOperator::QOperator(std::shared_ptr<const MediumProfile> medium, OperatorVariant variant)
    : medium_(std::move(medium)), variant_(variant) {
  if (!medium_) throw ContractError("QOperator needs a medium");
  const auto& eps = medium_->eps().values;
  inv_sqrt_eps_.resize(eps.size());
  sqrt_eps_.resize(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    sqrt_eps_[i] = std::sqrt(eps[i]);
    inv_sqrt_eps_[i] = 1.0 / sqrt_eps_[i];
  }
  if (variant_ == OperatorVariant::magnetic) {
    const auto& mu = medium_->mu().values;
    inv_mu_.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) inv_mu_[i] = 1.0 / mu[i];
  }
}

void QOperator::apply(std::span<const double> in, std::span<double> out,
                      std::span<double> scratch) const {
  const std::size_t d = dimension();
  if (in.size() != d || out.size() != d || scratch.size() < 2 * d)
    throw ContractError("apply_q: size mismatch");
  const Grid& g = grid();
  std::span<double> a = scratch.subspan(0, d);
  std::span<double> b = scratch.subspan(d, d);
  for (std::size_t i = 0; i < d; ++i) a[i] = inv_sqrt_eps_[i] * in[i];
  curl_into(g, a, b);
  if (variant_ == OperatorVariant::magnetic)
    for (std::size_t i = 0; i < d; ++i) b[i] *= inv_mu_[i];
  curl_t_into(g, b, out);
  for (std::size_t i = 0; i < d; ++i) out[i] *= inv_sqrt_eps_[i];
}

double QOperator::nonzero_eigenvalue_floor() const {
  const Grid& g = grid();
  double lam = INFINITY;
  for (int a = 0; a < 3; ++a) {
    if (g.dims[a] < 2) continue;
    const double s = 2.0 * std::sin(std::numbers::pi / g.dims[a]) / g.spacing;
    lam = std::min(lam, s * s);
  }
  if (!std::isfinite(lam)) return 0.0;
  double mu_max = 1.0;
  if (variant_ == OperatorVariant::magnetic) {
    const auto& mu = medium_->mu().values;
    mu_max = *std::max_element(mu.begin(), mu.end());
  }
  return lam / (medium_->eps_max() * mu_max);
}

VectorField apply_q(const QOperator& op, const VectorField& g) {
  require_placement(g, Placement::edge, "apply_q");
  require_same(g.grid, op.grid(), "apply_q");
  VectorField out(g.grid, Placement::edge);
  std::vector<double> scratch(2 * op.dimension());
  op.apply(g.values, out.values, scratch);
  return out;
}

TransverseGProjector::TransverseGProjector(const MediumProfile& m, double tol)
    : grid_(m.grid()),
      sqrt_eps_(m.eps().values.size()),
      solver_(m, PoissonOptions{tol, 20000, true}),
      rhs_(m.grid().cells()),
      tmp_(3 * m.grid().cells()) {
  for (std::size_t i = 0; i < sqrt_eps_.size(); ++i) sqrt_eps_[i] = std::sqrt(m.eps()[i]);
}

void TransverseGProjector::project(std::span<double> g) {
  // div(eps grad psi) = div(sqrt(eps) g);  g <- g - sqrt(eps) grad psi.
  for (std::size_t i = 0; i < g.size(); ++i) tmp_[i] = sqrt_eps_[i] * g[i];
  div_into(grid_, tmp_, rhs_);
  for (double& v : rhs_) v = -v;
  solver_.solve(rhs_);
  grad_into(grid_, rhs_, tmp_);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= sqrt_eps_[i] * tmp_[i];
}

VectorField project_transverse_g(const VectorField& g, const MediumProfile& m, double tol) {
  require_placement(g, Placement::edge, "project_transverse_g");
  require_same(g.grid, m.grid(), "project_transverse_g");
  VectorField out = g;
  TransverseGProjector proj(m, tol);
  proj.project(out.values);
  return out;
}

std::size_t max_nonzero_modes(const Grid& g) {
  // rank(curl) = 3N - dim ker(curl) = 3N - (N - 1) - 3
  const std::size_t n = g.cells();
  return 2 * n >= 2 ? 2 * n - 2 : 0;
}

namespace {

Eigen::MatrixXd to_matrix(const std::vector<VectorField>& fields) {
  if (fields.empty()) return {};
  Eigen::MatrixXd m(fields.front().size(), static_cast<Eigen::Index>(fields.size()));
  for (std::size_t j = 0; j < fields.size(); ++j)
    m.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(fields[j].values.data(), fields[j].size());
  return m;
}

}  // namespace

std::vector<std::vector<std::size_t>> degenerate_clusters(const std::vector<double>& frequencies,
                                                          double cluster_tol) {
  std::vector<std::vector<std::size_t>> out;
  if (frequencies.empty()) return out;
  const double wmax = *std::max_element(frequencies.begin(), frequencies.end());
  const double gap = cluster_tol * std::max(wmax, 1e-300);
  out.push_back({0});
  for (std::size_t i = 1; i < frequencies.size(); ++i) {
    if (std::abs(frequencies[i] - frequencies[i - 1]) <= gap)
      out.back().push_back(i);
    else
      out.push_back({i});
  }
  return out;
}

void canonicalize_clusters(Eigen::MatrixXd& vectors, const std::vector<double>& frequencies,
                           double cluster_tol) {
  for (const auto& cl : degenerate_clusters(frequencies, cluster_tol)) {
    const auto c = static_cast<Eigen::Index>(cl.size());
    if (c < 2) continue;
    const auto start = static_cast<Eigen::Index>(cl.front());
    Eigen::MatrixXd y = vectors.middleCols(start, c);
    for (Eigen::Index t = 0; t < c; ++t) {
      const Eigen::VectorXd diag = y.rowwise().squaredNorm();
      const double dmax = diag.maxCoeff();
      Eigen::Index pivot = 0;
      while (diag[pivot] < (1.0 - 1e-6) * dmax) ++pivot;
      Eigen::VectorXd u = y.row(pivot).transpose();
      u /= u.norm();
      const Eigen::VectorXd b = y * u;
      y -= b * u.transpose();
      vectors.col(start + t) = b;
    }
  }
}

void finalize_bank(ModeBank& bank) {
  const QOperator op(bank.medium, bank.variant);
  const auto& inv = op.inv_sqrt_eps();
  bank.modes_h.clear();
  bank.modes_h.reserve(bank.modes_g.size());
  for (const auto& g : bank.modes_g) {
    VectorField h = g;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= inv[i];
    bank.modes_h.push_back(std::move(h));
  }
  const auto rep = mode_residual_report(bank);
  bank.residuals = rep.residuals;
  bank.gram_defect = rep.gram_defect;
}

Eigen::MatrixXd dense_q(const QOperator& op) {
  const auto d = static_cast<Eigen::Index>(op.dimension());
  Eigen::MatrixXd q(d, d);
  std::vector<double> unit(d, 0.0), col(d), scratch(2 * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    unit[j] = 1.0;
    op.apply(unit, col, scratch);
    q.col(j) = Eigen::Map<const Eigen::VectorXd>(col.data(), d);
    unit[j] = 0.0;
  }
  return q;
}

ModeBank dense_complete_bank(const QOperator& op) {
  const Eigen::MatrixXd q = dense_q(op);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (q + q.transpose()));
  const double cut = 0.5 * op.nonzero_eigenvalue_floor();
  const Grid& g = op.grid();
  const auto d = static_cast<Eigen::Index>(op.dimension());

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < d; ++i)
    if (es.eigenvalues()[i] > cut) keep.push_back(i);

  // Static generalized-transverse fields, in g form, orthogonal to the rest.
  const auto harm = harmonic_fields(op.medium(), 1e-13);
  Eigen::MatrixXd hg(d, 3);
  for (int c = 0; c < 3; ++c)
    for (Eigen::Index i = 0; i < d; ++i) hg(i, c) = harm[c][i] * op.sqrt_eps()[i];
  Eigen::MatrixXd nz(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    nz.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
  for (int pass = 0; pass < 2; ++pass) hg -= nz * (nz.transpose() * hg);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(hg);
  const Eigen::MatrixXd hq = qr.householderQ() * Eigen::MatrixXd::Identity(d, 3);

  const auto total = static_cast<Eigen::Index>(keep.size()) + 3;
  Eigen::MatrixXd vecs(d, total);
  std::vector<double> freqs(total, 0.0);
  vecs.leftCols(3) = hq;
  vecs.rightCols(static_cast<Eigen::Index>(keep.size())) = nz;
  for (std::size_t j = 0; j < keep.size(); ++j)
    freqs[3 + j] = std::sqrt(std::max(0.0, es.eigenvalues()[keep[j]]));
  canonicalize_clusters(vecs, freqs, 1e-8);

  ModeBank bank;
  bank.medium = op.medium_ptr();
  bank.variant = op.variant();
  bank.frequencies = freqs;
  bank.complete = true;
  const double scale = 1.0 / std::sqrt(g.cell_volume());
  for (Eigen::Index j = 0; j < total; ++j) {
    VectorField f(g, Placement::edge);
    Eigen::Map<Eigen::VectorXd>(f.values.data(), d) = scale * vecs.col(j);
    bank.modes_g.push_back(std::move(f));
  }
  finalize_bank(bank);
  return bank;
}

ModeResidualReport mode_residual_report(const ModeBank& bank) {
  if (bank.size() == 0) throw ContractError("mode_residual_report: empty bank");
  const QOperator op(bank.medium, bank.variant);
  const Grid& g = bank.grid();
  const MediumProfile& m = *bank.medium;
  const std::size_t d = op.dimension();
  ModeResidualReport rep;
  std::vector<double> qg(d), scratch(2 * d);
  const bool magnetic = bank.variant == OperatorVariant::magnetic;
  for (std::size_t l = 0; l < bank.size(); ++l) {
    const auto& gv = bank.modes_g[l].values;
    const double lam = bank.frequencies[l] * bank.frequencies[l];
    op.apply(gv, qg, scratch);
    double r2 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double r = qg[i] - lam * gv[i];
      r2 += r * r;
      g2 += gv[i] * gv[i];
    }
    rep.residuals.push_back(std::sqrt(r2 / g2));

    const VectorField& h = bank.modes_h.at(l);
    VectorField b = curl(h);
    if (magnetic)
      for (std::size_t i = 0; i < d; ++i) b[i] /= m.mu()[i];
    const VectorField cc = curl_t(b);
    double w2 = 0.0, h2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double r = cc[i] - m.eps()[i] * lam * h[i];
      w2 += r * r;
      h2 += h[i] * h[i];
    }
    rep.wave_residuals.push_back(std::sqrt(w2 / h2));

    const VectorField eh = eps_times(m, h);
    const double dv = norm(div(eh)) * g.spacing;
    rep.divergence.push_back(dv / norm(eh));
  }
  rep.max_residual = *std::max_element(rep.residuals.begin(), rep.residuals.end());
  rep.max_wave_residual = *std::max_element(rep.wave_residuals.begin(), rep.wave_residuals.end());
  rep.max_divergence = *std::max_element(rep.divergence.begin(), rep.divergence.end());

  const Eigen::MatrixXd hm = to_matrix(bank.modes_h);
  const Eigen::Map<const Eigen::VectorXd> eps(m.eps().values.data(),
                                              static_cast<Eigen::Index>(d));
  const Eigen::MatrixXd gram =
      g.cell_volume() * (hm.transpose() * (eps.asDiagonal() * hm));
  rep.gram_defect =
      (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  rep.min_eigenvalue = INFINITY;
  for (double w : bank.frequencies) rep.min_eigenvalue = std::min(rep.min_eigenvalue, w * w);
  return rep;
}

}  // namespace mqed
