// Locally optimal block preconditioned conjugate gradient for the lowest
// nonzero eigenpairs of Q, restricted to the generalized-transverse subspace.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>

#include "mqed/modes.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mqed {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

// sqrt(eps) (L + shift)^-1 sqrt(eps), with L the periodic 7-point Laplacian
// applied to each component separately and inverted by FFT.
class FftPreconditioner {
 public:
  FftPreconditioner(const QOperator& op, int threads) : grid_(op.grid()), sqrt_eps_(op.sqrt_eps()) {
    const auto& d = grid_.dims;
    n_ = grid_.cells();
    const std::size_t nxc = static_cast<std::size_t>(d[0] / 2 + 1);
    nc_ = nxc * d[1] * d[2];
    double lam_min = INFINITY;
    auto symbol = [&](int a, int m) {
      const double s = 2.0 * std::sin(std::numbers::pi * m / d[a]) / grid_.spacing;
      return s * s;
    };
    for (int a = 0; a < 3; ++a)
      if (d[a] > 1) lam_min = std::min(lam_min, symbol(a, 1));
    const double shift = std::isfinite(lam_min) ? 0.5 * lam_min : 1.0;
    inv_symbol_.resize(nc_);
    std::size_t idx = 0;
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (std::size_t i = 0; i < nxc; ++i, ++idx)
          inv_symbol_[idx] = 1.0 / ((symbol(0, static_cast<int>(i)) + symbol(1, j) +
                                     symbol(2, k) + shift) *
                                    static_cast<double>(n_));
    for (int t = 0; t < threads; ++t) {
      real_.push_back(static_cast<double*>(fftw_malloc(sizeof(double) * n_)));
      cplx_.push_back(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc_)));
    }
    forward_ = fftw_plan_dft_r2c_3d(d[2], d[1], d[0], real_[0], cplx_[0], FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_3d(d[2], d[1], d[0], cplx_[0], real_[0], FFTW_ESTIMATE);
  }
  FftPreconditioner(const FftPreconditioner&) = delete;
  FftPreconditioner& operator=(const FftPreconditioner&) = delete;
  ~FftPreconditioner() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    for (auto* p : real_) fftw_free(p);
    for (auto* p : cplx_) fftw_free(p);
  }

  void apply(double* v, int tid) const {
    double* re = real_[tid];
    fftw_complex* cx = cplx_[tid];
    for (int c = 0; c < 3; ++c) {
      double* vc = v + c * n_;
      const double* se = sqrt_eps_.data() + c * n_;
      for (std::size_t i = 0; i < n_; ++i) re[i] = se[i] * vc[i];
      fftw_execute_dft_r2c(forward_, re, cx);
      for (std::size_t i = 0; i < nc_; ++i) {
        cx[i][0] *= inv_symbol_[i];
        cx[i][1] *= inv_symbol_[i];
      }
      fftw_execute_dft_c2r(backward_, cx, re);
      for (std::size_t i = 0; i < n_; ++i) vc[i] = se[i] * re[i];
    }
  }

 private:
  Grid grid_;
  const std::vector<double>& sqrt_eps_;
  std::size_t n_ = 0, nc_ = 0;
  std::vector<double> inv_symbol_;
  std::vector<double*> real_;
  std::vector<fftw_complex*> cplx_;
  fftw_plan forward_ = nullptr, backward_ = nullptr;
};

class BlockOps {
 public:
  BlockOps(const QOperator& op, double poisson_tol)
      : op_(op), threads_(std::max(1, thread_count())), precond_(op, threads_) {
    const auto d = static_cast<Eigen::Index>(op.dimension());
    const auto harm = harmonic_fields(op.medium(), std::min(poisson_tol, 1e-12));
    harmonic_.resize(d, 3);
    for (int c = 0; c < 3; ++c)
      for (Eigen::Index i = 0; i < d; ++i) harmonic_(i, c) = harm[c][i] * op.sqrt_eps()[i];
    const Eigen::HouseholderQR<Mat> qr(harmonic_);
    harmonic_ = qr.householderQ() * Mat::Identity(d, 3);
    for (int t = 0; t < threads_; ++t) {
      scratch_.emplace_back(2 * op.dimension());
      projectors_.push_back(std::make_unique<TransverseGProjector>(op.medium(), poisson_tol));
    }
  }

  void apply_q(const Mat& in, Mat& out) {
    out.resize(in.rows(), in.cols());
    const auto d = static_cast<std::size_t>(in.rows());
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index j = 0; j < in.cols(); ++j)
      op_.apply(std::span<const double>(in.col(j).data(), d),
                std::span<double>(out.col(j).data(), d), scratch_[thread_id()]);
  }

  // Maps preconditioned residuals back into the generalized-transverse subspace.
  void precondition_and_project(Mat& w) {
    const auto d = static_cast<std::size_t>(w.rows());
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const int t = thread_id();
      precond_.apply(w.col(j).data(), t);
      projectors_[t]->project(std::span<double>(w.col(j).data(), d));
    }
    deflate_harmonic(w);
  }

  void project(Mat& w) {
    const auto d = static_cast<std::size_t>(w.rows());
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      projectors_[thread_id()]->project(std::span<double>(w.col(j).data(), d));
    deflate_harmonic(w);
  }

 private:
  void deflate_harmonic(Mat& w) const {
    for (int pass = 0; pass < 2; ++pass) w -= harmonic_ * (harmonic_.transpose() * w);
  }

  const QOperator& op_;
  int threads_;
  FftPreconditioner precond_;
  Mat harmonic_;
  std::vector<std::vector<double>> scratch_;
  std::vector<std::unique_ptr<TransverseGProjector>> projectors_;
};

// Orthonormalizes the columns of v in place (and applies the same map to
// qv when given); directions with relative Gram eigenvalue below drop_tol
// are discarded.  Returns the surviving column count.
Eigen::Index svqb(Mat& v, Mat* qv, double drop_tol = 1e-12) {
  if (v.cols() == 0) return 0;
  Mat gram = v.transpose() * v;
  Vec scale = gram.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  gram = scale.asDiagonal() * gram * scale.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (gram + gram.transpose()));
  const Vec& theta = es.eigenvalues();
  const double tmax = theta.maxCoeff();
  Eigen::Index first = 0;
  while (first < theta.size() && theta[first] <= drop_tol * tmax) ++first;
  const Eigen::Index keep = theta.size() - first;
  Mat c = scale.asDiagonal() * es.eigenvectors().rightCols(keep);
  for (Eigen::Index j = 0; j < keep; ++j) c.col(j) /= std::sqrt(theta[first + j]);
  v = v * c;
  if (qv != nullptr) *qv = *qv * c;
  return keep;
}

// Removes the span of the orthonormal columns of x from w (two passes).
void orthogonalize(const Mat& x, Mat& w, Mat* qw, const Mat* qx) {
  for (int pass = 0; pass < 2; ++pass) {
    const Mat coef = x.transpose() * w;
    w.noalias() -= x * coef;
    if (qw != nullptr) qw->noalias() -= *qx * coef;
  }
}

Mat select_columns(const Mat& m, const std::vector<Eigen::Index>& idx) {
  Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

}  // namespace

ModeBank solve_modes(const QOperator& op, int n_modes, const ModeSolverOptions& opts) {
  const Grid& grid = op.grid();
  const auto max_modes = static_cast<int>(max_nonzero_modes(grid));
  if (n_modes < 1) throw ContractError("solve_modes: n_modes must be >= 1");
  if (n_modes > max_modes)
    throw ContractError("solve_modes: " + std::to_string(n_modes) +
                        " modes requested but the grid supports only " +
                        std::to_string(max_modes) + " nonzero transverse modes");
  if (!(opts.tol > 0.0)) throw ContractError("solve_modes: tol must be positive");

  const int guard = opts.guard >= 0 ? opts.guard : std::max(8, (n_modes + 4) / 5);
  const auto m = static_cast<Eigen::Index>(std::min(n_modes + guard, max_modes));
  const auto d = static_cast<Eigen::Index>(op.dimension());
  const double floor = op.nonzero_eigenvalue_floor();
  const double cut = 0.5 * floor;

  BlockOps ops(op, opts.poisson_tol);

  std::mt19937_64 rng(opts.seed);
  Mat x(d, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < d; ++i)
      x(i, j) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  ops.project(x);
  if (svqb(x, nullptr) < m) throw SolverError("solve_modes: degenerate starting block", 1.0);
  Mat qx;
  ops.apply_q(x, qx);

  Vec lam;
  auto rayleigh_ritz_x = [&]() {
    Mat h = x.transpose() * qx;
    const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()));
    x = x * es.eigenvectors();
    qx = qx * es.eigenvectors();
    lam = es.eigenvalues();
  };
  rayleigh_ritz_x();

  // Columns that must converge: the requested modes plus the rest of any
  // degenerate cluster the last one belongs to, so the cluster basis is
  // fixed by the whole cluster.
  auto required_columns = [&]() {
    Eigen::Index need = n_modes;
    const double gap = opts.cluster_tol * std::sqrt(std::max(lam[m - 1], 0.0));
    while (need < m &&
           std::sqrt(std::max(lam[need], 0.0)) - std::sqrt(std::max(lam[need - 1], 0.0)) <= gap)
      ++need;
    return need < m ? need : static_cast<Eigen::Index>(n_modes);
  };

  Mat p, qp;  // previous search directions, all m columns once available
  Vec res(m);
  int iter = 0;
  double worst = INFINITY;
  bool converged = false;
  for (; iter < opts.max_iterations; ++iter) {
    Mat r = qx - x * lam.asDiagonal();
    std::vector<Eigen::Index> active;
    const Eigen::Index need = required_columns();
    worst = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      res[j] = r.col(j).norm();
      const double target = opts.tol * std::max(lam[j], floor);
      if (j < need) worst = std::max(worst, res[j] / std::max(lam[j], floor));
      if (res[j] > target) active.push_back(j);
    }
    if (opts.verbose)
      std::cerr << "lobpcg iter " << iter << " active " << active.size() << " worst " << worst
                << "\n";
    if (worst <= opts.tol) {
      converged = true;
      break;
    }

    Mat w = select_columns(r, active);
    ops.precondition_and_project(w);
    orthogonalize(x, w, nullptr, nullptr);
    if (svqb(w, nullptr) == 0) break;
    orthogonalize(x, w, nullptr, nullptr);
    Mat qw;
    ops.apply_q(w, qw);

    Mat pa, qpa;
    if (p.cols() == m) {
      pa = select_columns(p, active);
      qpa = select_columns(qp, active);
      orthogonalize(x, pa, &qpa, &qx);
      orthogonalize(w, pa, &qpa, &qw);
      svqb(pa, &qpa);
    }

    const Eigen::Index nw = w.cols(), np = pa.cols();
    const Eigen::Index k = m + nw + np;
    Mat kk = Mat::Zero(k, k);
    kk.topLeftCorner(m, m) = lam.asDiagonal();
    kk.block(0, m, m, nw) = x.transpose() * qw;
    kk.block(m, m, nw, nw) = w.transpose() * qw;
    if (np > 0) {
      kk.block(0, m + nw, m, np) = x.transpose() * qpa;
      kk.block(m, m + nw, nw, np) = w.transpose() * qpa;
      kk.block(m + nw, m + nw, np, np) = pa.transpose() * qpa;
    }
    kk = kk.selfadjointView<Eigen::Upper>();
    const Eigen::SelfAdjointEigenSolver<Mat> es(kk);

    Eigen::Index first = 0;
    while (first < k && es.eigenvalues()[first] <= cut) ++first;
    if (k - first < m) throw SolverError("solve_modes: search space collapsed", worst);
    const Mat z = es.eigenvectors().middleCols(first, m);
    lam = es.eigenvalues().segment(first, m);

    Mat pn = w * z.middleRows(m, nw);
    Mat qpn = qw * z.middleRows(m, nw);
    if (np > 0) {
      pn.noalias() += pa * z.bottomRows(np);
      qpn.noalias() += qpa * z.bottomRows(np);
    }
    x = x * z.topRows(m) + pn;
    qx = qx * z.topRows(m) + qpn;
    p = std::move(pn);
    qp = std::move(qpn);

    // Guard against slow loss of orthonormality.
    if ((iter + 1) % 10 == 0) {
      const double defect = (x.transpose() * x - Mat::Identity(m, m)).cwiseAbs().maxCoeff();
      if (defect > 1e-10) {
        svqb(x, &qx);
        rayleigh_ritz_x();
        p.resize(0, 0);
        qp.resize(0, 0);
      }
    }
  }
  if (!converged)
    throw SolverError("solve_modes: no convergence after " + std::to_string(iter) +
                          " iterations (worst relative residual " + std::to_string(worst) + ")",
                      worst);

  // Final Rayleigh-Ritz on the converged block removes any residual drift.
  svqb(x, &qx);
  rayleigh_ritz_x();

  std::vector<double> freqs(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) freqs[j] = std::sqrt(std::max(lam[j], 0.0));
  const Eigen::Index need = required_columns();
  Mat head = x.leftCols(need);
  canonicalize_clusters(head, std::vector<double>(freqs.begin(), freqs.begin() + need),
                        opts.cluster_tol);

  ModeBank bank;
  bank.medium = op.medium_ptr();
  bank.variant = op.variant();
  bank.tolerance = opts.tol;
  bank.iterations = iter;
  bank.frequencies.assign(freqs.begin(), freqs.begin() + n_modes);
  const double scale = 1.0 / std::sqrt(grid.cell_volume());
  for (int j = 0; j < n_modes; ++j) {
    VectorField f(grid, Placement::edge);
    Eigen::Map<Vec>(f.values.data(), d) = scale * head.col(j);
    bank.modes_g.push_back(std::move(f));
  }
  finalize_bank(bank);
  return bank;
}

}  // namespace mqed
