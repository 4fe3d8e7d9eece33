// Acceptance checks: one PASS/FAIL line per criterion.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "mqed/electrostatics.hpp"
#include "mqed/emission.hpp"
#include "mqed/quantization.hpp"

using namespace mqed;
namespace fs = std::filesystem;

namespace {

using Vec3 = std::array<double, 3>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(-1.0, 1.0)(rng); }

VectorField random_vector(const Grid& g, Placement p, std::mt19937_64& rng) {
  VectorField v(g, p);
  for (double& x : v.values) x = uniform(rng);
  return v;
}

ScalarField random_scalar(const Grid& g, std::mt19937_64& rng) {
  ScalarField s(g);
  for (double& x : s.values) x = uniform(rng);
  return s;
}

std::shared_ptr<const MediumProfile> profile(const Grid& g, MediumDescriptor d) {
  return std::make_shared<const MediumProfile>(g, std::move(d));
}

Outcome operator_identities() {
  std::mt19937_64 rng(101);
  double dc = 0.0, cg = 0.0, adj = 0.0;
  for (double s : {1.0, 0.37}) {
    const Grid g(8, 8, 8, s);
    for (int t = 0; t < 10; ++t) {
      const ScalarField phi = random_scalar(g, rng);
      const VectorField v = random_vector(g, Placement::edge, rng);
      const VectorField w = random_vector(g, Placement::face, rng);
      const double scale = s * s;  // inputs are O(1); second differences are O(1/s^2)
      dc = std::max(dc, max_abs(div(curl_t(w)).values) * scale);
      cg = std::max(cg, max_abs(curl(grad(phi)).values) * scale);
      const VectorField gp = grad(phi);
      adj = std::max(adj, std::abs(inner(gp, v) + inner(phi, div(v))) / (norm(gp) * norm(v)));
    }
  }
  return {dc <= 1e-13 && cg <= 1e-13 && adj <= 1e-12,
          "div curl_t " + fmt("%.1e", dc) + ", curl grad " + fmt("%.1e", cg) + ", adjointness " +
              fmt("%.1e", adj)};
}

Outcome decomposition_suite() {
  std::mt19937_64 rng(202);
  const Grid g(8, 8, 8);
  const MediumProfile m(g, {RandomSmooth{1.0, 4.0, 5, 3}});
  double recon = 0.0, divx1 = 0.0, redo = 0.0;
  for (int t = 0; t < 100; ++t) {
    const VectorField x = random_vector(g, Placement::edge, rng);
    const double xm = max_abs(x.values);
    const auto d = helmholtz_decompose(x, m, 1e-11);
    recon = std::max(recon, max_abs((d.x1 + d.x2 - x).values) / xm);
    divx1 = std::max(divx1, norm(div(d.x1)) * g.spacing / norm(x));
    const auto again = helmholtz_decompose(d.x1, m, 1e-11);
    redo = std::max(redo, max_abs((again.x1 - d.x1).values) / xm);
  }
  return {recon <= 1e-12 && divx1 <= 1e-9 && redo <= 2e-10,
          "reconstruction " + fmt("%.1e", recon) + ", div x1 " + fmt("%.1e", divx1) +
              ", re-decomposition " + fmt("%.1e", redo) + " over 100 fields"};
}

Outcome projector_properties() {
  std::mt19937_64 rng(303);
  const auto bank = std::make_shared<const ModeBank>(
      dense_complete_bank(QOperator(profile(Grid(4, 4, 4, 0.5), {RandomSmooth{1.0, 4.0, 3, 3}}))));
  const TransverseProjector p(bank);
  const Eigen::MatrixXd pm = p.matrix();
  const double idem = (pm * pm - pm).cwiseAbs().maxCoeff();
  double trans = 0.0;
  for (int t = 0; t < 20; ++t) {
    const VectorField x = random_vector(bank->grid(), Placement::edge, rng);
    const VectorField px = p.apply(x);
    trans = std::max(trans, norm(div(eps_times(*bank->medium, px))) * bank->grid().spacing / norm(x));
  }
  return {idem <= 1e-8 && trans <= 1e-8, "rank " + std::to_string(bank->size()) + ", |P^2 - P|max " +
                                             fmt("%.1e", idem) + ", div(eps P x) " + fmt("%.1e", trans)};
}

Outcome vacuum_symbol() {
  const auto bank = std::make_shared<const ModeBank>(
      dense_complete_bank(QOperator(profile(Grid(4, 4, 4), {Homogeneous{1.0}}))));
  const Grid& g = bank->grid();
  const std::size_t n = g.cells();
  std::vector<Eigen::Matrix3d> dy(n);
  const std::size_t r = g.index(2, 1, 3);
  for (std::size_t rp = 0; rp < n; ++rp) dy[rp] = commutator_dyadic(*bank, r, rp);
  double worst = 0.0;
  for (int m0 = 0; m0 < 4; ++m0)
    for (int m1 = 0; m1 < 4; ++m1)
      for (int m2 = 0; m2 < 4; ++m2) {
        const Vec3 k{M_PI * m0 / 2, M_PI * m1 / 2, M_PI * m2 / 2};
        Vec3 kt{};
        double k2 = 0.0;
        for (int c = 0; c < 3; ++c) {
          kt[c] = 2.0 * std::sin(0.5 * k[c]);
          k2 += kt[c] * kt[c];
        }
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            const auto xa = sample_position(g, Placement::edge, a, r);
            std::complex<double> sym = 0.0;
            for (std::size_t rp = 0; rp < n; ++rp) {
              const auto xb = sample_position(g, Placement::edge, b, rp);
              double phase = 0.0;
              for (int c = 0; c < 3; ++c) phase += k[c] * (xb[c] - xa[c]);
              sym += dy[rp](a, b) * std::polar(1.0, phase);
            }
            sym *= g.cell_volume();
            const double ref = (a == b ? 1.0 : 0.0) - (k2 > 0.0 ? kt[a] * kt[b] / k2 : 0.0);
            worst = std::max(worst, std::abs(sym - ref));
          }
      }
  return {worst <= 1e-8, "max symbol error " + fmt("%.1e", worst) + " over 64 wavevectors"};
}

Outcome solver_vs_dense() {
  const QOperator op(profile(Grid(6, 6, 6), {RandomSmooth{1.0, 4.0, 7, 3}}));
  const ModeBank it = solve_modes(op, 100);
  const ModeBank dense = dense_complete_bank(op);
  double worst = 0.0;
  for (std::size_t i = 0; i < it.size(); ++i) {
    const double a = it.frequencies[i] * it.frequencies[i];
    const double b = dense.frequencies[3 + i] * dense.frequencies[3 + i];
    worst = std::max(worst, std::abs(a - b) / b);
  }
  return {worst <= 1e-8, "100 modes, max relative eigenvalue error " + fmt("%.1e", worst)};
}

Outcome scaling_law() {
  const Grid g(16, 16, 16);
  // 64 modes end exactly at the (200) shell boundary.
  const ModeBank vac = solve_modes(QOperator(profile(g, {Homogeneous{1.0}})), 64);
  const ModeBank med = solve_modes(QOperator(profile(g, {Homogeneous{4.0}})), 64);
  double worst = 0.0;
  for (std::size_t i = 0; i < vac.size(); ++i)
    worst = std::max(worst, std::abs(med.frequencies[i] - 0.5 * vac.frequencies[i]) / med.frequencies[i]);
  return {worst <= 1e-10, "64 modes, max relative deviation " + fmt("%.1e", worst)};
}

Outcome energy_equivalence() {
  const Grid g(12, 12, 12, 0.5);
  const auto medium = profile(g, {RandomSmooth{1.0, 4.0, 5, 3}});
  const ModeBank bank = solve_modes(QOperator(medium), 20);
  std::mt19937_64 rng(707);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    ModeCoefficients c;
    for (int i = 0; i < 20; ++i) {
      c.q.push_back(uniform(rng));
      c.p.push_back(uniform(rng));
    }
    const auto e = hamiltonian_energy(bank, c, *medium);
    worst = std::max(worst, std::abs(e.integral_form - e.spectral_form) / e.spectral_form);
  }
  return {worst <= 1e-7, "100 states, max relative difference " + fmt("%.1e", worst)};
}

Outcome cavity_factor() {
  const Grid g(64, 64, 64);
  bool ok = true;
  std::string detail;
  for (double eps : {2.25, 4.0, 9.0}) {
    const auto rep = cavity_field_report(eps, g, 8.0);
    const double target = 3.0 * eps / (2.0 * eps + 1.0);
    const double err = std::abs(rep.factor - target) / target;
    ok = ok && err <= 0.03;
    detail += (detail.empty() ? "" : "; ") + fmt("eps %.2f", eps) + fmt(" factor %.5f", rep.factor) +
              fmt(" target %.5f", target) + fmt(" err %.2f%%", 100.0 * err);
  }
  return {ok, detail};
}

// Golden-rule rate of a z dipole at a cubic-symmetric lattice point, with
// the transition placed at 0.75 / sqrt(eps) and the default broadening.
Outcome bulk_emission() {
  const Grid g(16, 16, 16);
  bool ok = true;
  std::string detail;
  for (double eps : {1.0, 2.25, 4.0}) {
    const ModeBank bank = solve_modes(QOperator(profile(g, {Homogeneous{eps}})), 292);
    const double n = std::sqrt(eps);
    const auto atom = AtomSpec::two_level({8, 8, 8}, 0.75 / n, {0, 0, 1}, 1.0);
    const auto bulk = emission_rate(bank, atom, 1, 0);
    const double bulk_err = std::abs(bulk.ratio - n) / n;
    detail += (detail.empty() ? "" : "; ") + fmt("eps %.2f", eps) + fmt(" bulk %.4f", bulk.ratio) +
              fmt(" (err %.1f%%)", 100.0 * bulk_err);
    if (eps == 1.0) {
      // Vacuum self-test: informational, not part of the criterion.
      continue;
    }
    ok = ok && bulk_err <= 0.15;
    const auto composed = local_field_corrected_rate(bank, atom, 1, 0);
    const double f = 3.0 * eps / (2.0 * eps + 1.0);
    const double target = f * f * n;
    const double err = std::abs(composed.ratio - target) / target;
    ok = ok && err <= 0.08;
    detail += fmt(", composed %.4f", composed.ratio) + fmt(" target %.4f", target) +
              fmt(" (err %.1f%%)", 100.0 * err);
  }
  return {ok, detail};
}

// Lattice transfer matrix for y-polarized waves along x: the wave equation
// h[i+1] = (2 - s^2 w^2 eps_i) h[i] - h[i-1] on y-edge samples.  Bloch
// states of a periodic stack satisfy trace(T_period) = 2 cos(theta); the
// edges of the first gap are the first two roots of trace = -2.
double transfer_trace(const std::vector<double>& eps, double w, double s) {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;  // [[a, b], [c, d]]
  for (double e : eps) {
    const double t = 2.0 - s * s * w * w * e;
    const double na = t * a - c, nb = t * b - d;
    c = a;
    d = b;
    a = na;
    b = nb;
  }
  return a + d;
}

std::pair<double, double> gap_edges(const std::vector<double>& eps, double s) {
  std::vector<double> roots;
  auto f = [&](double w) { return transfer_trace(eps, w, s) + 2.0; };
  const double dw = 1e-4;
  for (double w = dw; roots.size() < 2 && w < 2.0; w += dw) {
    if (f(w - dw) * f(w) > 0.0) continue;
    double lo = w - dw, hi = w;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  return {roots.at(0), roots.at(1)};
}

Outcome band_gap() {
  const Grid g(64, 1, 1);
  const auto medium = profile(g, {SlabStack{{{6.0, 1.0}, {2.0, 13.0}}, 0}});
  const ModeBank bank = solve_modes(QOperator(medium), 40);
  std::vector<double> cell_eps(8);
  for (int i = 0; i < 8; ++i) cell_eps[i] = medium->eps()[g.cells() + g.index(i, 0, 0)];
  const auto [lo, hi] = gap_edges(cell_eps, g.spacing);
  // First band: 7 nonzero Bloch states in each of the two polarizations.
  const double w_lo = bank.frequencies[13], w_hi = bank.frequencies[14];
  const double loc_err = std::max(std::abs(w_lo - lo) / lo, std::abs(w_hi - hi) / hi);
  const double eta = (w_hi - w_lo) / 200.0;
  const auto s = ldos_spectrum(bank, {2.0, 0.0, 0.0}, {0, 1, 0}, {w_lo, 0.5 * (w_lo + w_hi), w_hi}, eta);
  const double suppression = std::max(s[0].value, s[2].value) / s[1].value;
  return {loc_err <= 0.01 && suppression >= 1e3,
          fmt("gap [%.6f", w_lo) + fmt(", %.6f]", w_hi) + fmt(" vs oracle [%.6f", lo) +
              fmt(", %.6f]", hi) + fmt(", location err %.1e", loc_err) +
              fmt(", suppression %.3g", suppression)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("mqed_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "run.json") << R"({
  "grid": {"dims": [8, 8, 8], "spacing": 1.0},
  "medium": {"kind": "random_smooth", "eps_min": 1.0, "eps_max": 3.0, "seed": 4},
  "modes": {"count": 24},
  "atoms": [{"position": [3.5, 4.2, 2.0], "omega0": 0.6, "dipole": [0.2, 0.0, 1.0]}],
  "ldos": {"position": [3.5, 4.2, 2.0], "orientation": [0, 0, 1],
           "omega_min": 0.4, "omega_max": 0.8, "samples": 9, "eta": 0.05},
  "rate": {"atom": 0, "eta": 0.05},
  "cavity_factor": {"eps": [4.0], "grid_cells": 32, "radius_cells": 4},
  "tasks": ["decompose", "modes", "verify", "ldos", "rate", "cavity-factor"]
})";
  }
  auto run = [&](const std::string& out) {
    const std::string cmd = std::string("\"") + MQED_CLI_PATH + "\" --config \"" +
                            (dir / "run.json").string() + "\" --out-dir \"" + (dir / out).string() +
                            "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const int a = run("first"), b = run("second");
  bool same = a == 0 && b == 0;
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "first")) {
    ++files;
    const fs::path other = dir / "second" / e.path().filename();
    same = same && fs::exists(other) && slurp(e.path()) == slurp(other);
  }
  for (const auto& e : fs::directory_iterator(dir / "second"))
    same = same && fs::exists(dir / "first" / e.path().filename());
  fs::remove_all(dir);
  return {same, "exit codes " + std::to_string(a) + "/" + std::to_string(b) + ", " +
                    std::to_string(files) + " output files compared byte for byte"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"operator identities", operator_identities},
      {"decomposition suite", decomposition_suite},
      {"projector idempotency and transversality", projector_properties},
      {"vacuum transverse delta symbol", vacuum_symbol},
      {"mode solver vs dense eigendecomposition", solver_vs_dense},
      {"eps = 4 scaling law", scaling_law},
      {"energy equivalence", energy_equivalence},
      {"electrostatic cavity factor", cavity_factor},
      {"bulk and composed emission enhancement", bulk_emission},
      {"1D band gap", band_gap},
      {"CLI determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), dt);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
