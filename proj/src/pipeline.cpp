#include "mqed/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "mqed/bank_io.hpp"
#include "mqed/electrostatics.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mqed {

using nlohmann::json;

namespace {

class InvariantFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double uniform(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

VectorField random_edge_field(const Grid& g, std::mt19937_64& rng) {
  VectorField v(g, Placement::edge);
  for (double& x : v.values) x = uniform(rng);
  return v;
}

ScalarField random_scalar(const Grid& g, std::mt19937_64& rng) {
  ScalarField s(g);
  for (double& x : s.values) x = uniform(rng);
  return s;
}

// Shortest representation that round-trips.
std::string num(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

struct Context {
  const RunConfig& cfg;
  const RunOptions& opts;
  std::ostream& log;
  std::filesystem::path out_dir;
  std::shared_ptr<const MediumProfile> medium;
  std::optional<ModeBank> bank;

  void info(const std::string& s) const {
    if (opts.verbosity >= 1) log << s << "\n";
  }
  void write_json(const std::string& name, const json& j) const {
    write_file_atomic(out_dir / name, j.dump(2) + "\n");
    info("  wrote " + (out_dir / name).string());
  }
  const ModeBank& require_bank() const {
    if (!bank) throw ConfigError("no mode bank available");
    return *bank;
  }
};

void task_decompose(Context& ctx) {
  const auto& m = *ctx.medium;
  const Grid& g = m.grid();
  std::mt19937_64 rng(ctx.cfg.seed);
  const VectorField x = random_edge_field(g, rng);
  const auto dec = helmholtz_decompose(x, m, ctx.cfg.poisson_tol);
  double recon = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    recon = std::max(recon, std::abs(dec.x1[i] + dec.x2[i] - x[i]));
  const double div_rel = norm(div(dec.x1)) * g.spacing / norm(x);
  double ortho = 0.0;
  for (int probe = 0; probe < 8; ++probe) {
    const VectorField gp = grad(random_scalar(g, rng));
    ortho = std::max(ortho, std::abs(inner(dec.x1, gp)) / (norm(dec.x1) * norm(gp)));
  }
  ctx.write_json("decompose.json", {{"seed", ctx.cfg.seed},
                                    {"tol", ctx.cfg.poisson_tol},
                                    {"poisson_residual", dec.residual_norm},
                                    {"reconstruction_error", recon / max_abs(x.values)},
                                    {"div_x1_relative", div_rel},
                                    {"gradient_orthogonality", ortho},
                                    {"norm_x1", norm(dec.x1)},
                                    {"norm_x2", norm(dec.x2)}});
}

void load_input_bank(Context& ctx) {
  const auto& cfg = ctx.cfg;
  ctx.info("  loading bank " + cfg.input_bank->string());
  ctx.bank = load_bank(*cfg.input_bank);
  if (!(ctx.bank->grid() == cfg.grid)) throw ConfigError("input bank grid differs from config grid");
}

void task_modes(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.input_bank) {
    if (!ctx.bank) load_input_bank(ctx);
  } else {
    ModeSolverOptions o = cfg.solver;
    o.verbose = ctx.opts.verbosity >= 2;
    const QOperator op(ctx.medium, cfg.variant);
    ctx.bank = solve_modes(op, cfg.mode_count, o);
    save_bank(*ctx.bank, ctx.out_dir / cfg.bank_file);
    ctx.info("  wrote " + (ctx.out_dir / cfg.bank_file).string());
  }
  const auto& b = *ctx.bank;
  ctx.write_json("modes.json",
                 {{"mode_count", b.size()},
                  {"variant", b.variant == OperatorVariant::magnetic ? "magnetic" : "nonmagnetic"},
                  {"seed", cfg.seed},
                  {"tol", b.tolerance},
                  {"iterations", b.iterations},
                  {"gram_defect", b.gram_defect},
                  {"frequencies", b.frequencies},
                  {"residuals", b.residuals}});
}

void task_verify(Context& ctx) {
  const auto& m = *ctx.medium;
  const Grid& g = m.grid();
  std::mt19937_64 rng(ctx.cfg.seed + 1);
  json checks = json::array();
  bool all = true;
  auto check = [&](const std::string& name, double value, double threshold) {
    const bool pass = value <= threshold;
    all = all && pass;
    checks.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
  };
  const double inv_s2 = 1.0 / (g.spacing * g.spacing);

  const VectorField w = random_edge_field(g, rng);
  VectorField wf = w;
  wf.placement = Placement::face;
  check("div_curl_t", max_abs(div(curl_t(wf)).values) / (max_abs(w.values) * inv_s2), 1e-13);
  const ScalarField phi = random_scalar(g, rng);
  check("curl_grad", max_abs(curl(grad(phi)).values) / (max_abs(phi.values) * inv_s2), 1e-13);
  const VectorField gp = grad(phi);
  check("grad_div_adjoint",
        std::abs(inner(gp, w) + inner(phi, div(w))) / (norm(gp) * norm(w)), 1e-12);

  const auto dec = helmholtz_decompose(w, m, ctx.cfg.poisson_tol);
  double recon = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    recon = std::max(recon, std::abs(dec.x1[i] + dec.x2[i] - w[i]));
  check("decomposition_reconstruction", recon / max_abs(w.values), 1e-12);
  const double div_tol = std::max(1e-8, 10.0 * ctx.cfg.poisson_tol);
  check("decomposition_div_x1", norm(div(dec.x1)) * g.spacing / norm(w), div_tol);

  if (ctx.bank) {
    const auto rep = mode_residual_report(*ctx.bank);
    check("mode_residual", rep.max_residual, std::max(1e-6, 10.0 * ctx.bank->tolerance));
    check("mode_gram_defect", rep.gram_defect, 1e-8);
    check("mode_divergence", rep.max_divergence, 1e-8);
    check("mode_min_eigenvalue_negativity", std::max(0.0, -rep.min_eigenvalue), 1e-12);
  }
  ctx.write_json("verify.json", {{"all_pass", all}, {"checks", checks}});
  if (!all) throw InvariantFailure("verification failed; see verify.json");
}

void task_ldos(Context& ctx) {
  const auto& b = ctx.require_bank();
  const auto& s = *ctx.cfg.ldos;
  std::vector<double> omega(static_cast<std::size_t>(s.samples));
  for (int i = 0; i < s.samples; ++i)
    omega[i] = s.omega_min + (s.omega_max - s.omega_min) * i / (s.samples - 1);
  const double eta = s.eta > 0.0 ? s.eta : default_broadening(b, 0.5 * (s.omega_min + s.omega_max));
  const auto samples = ldos_spectrum(b, s.position, s.orientation, omega, eta);
  std::string csv = "omega,value,eta,tol\n";
  for (const auto& p : samples)
    csv += num(p.omega) + "," + num(p.value) + "," + num(eta) + "," + num(b.tolerance) + "\n";
  write_file_atomic(ctx.out_dir / "ldos.csv", csv);
  ctx.info("  wrote " + (ctx.out_dir / "ldos.csv").string());
}

void task_rate(Context& ctx) {
  const auto& b = ctx.require_bank();
  const auto& s = *ctx.cfg.rate;
  const auto& atom = ctx.cfg.atoms.at(s.atom);
  const EmissionReport rep = s.local_field
                                 ? local_field_corrected_rate(b, atom, s.upper, s.lower, s.eta, s.cavity)
                                 : emission_rate(b, atom, s.upper, s.lower, s.eta);
  json j = {{"omega0", rep.omega0},
            {"rate", rep.rate},
            {"reference", rep.reference},
            {"ratio", rep.ratio},
            {"bulk_ratio", rep.bulk_ratio},
            {"local_field_factor", rep.local_field_factor},
            {"eta", rep.eta},
            {"tol", b.tolerance},
            {"mode_count", b.size()},
            {"local_field", s.local_field}};
  if (s.local_field)
    j["cavity"] = {{"grid_cells", s.cavity.grid_cells},
                   {"radius_cells", s.cavity.radius_cells},
                   {"tol", s.cavity.tol}};
  ctx.write_json("rate.json", j);
}

void task_cavity_factor(Context& ctx) {
  const auto& s = ctx.cfg.cavity_factor;
  json rows = json::array();
  for (double eps : s.eps) {
    const Grid g({s.grid_cells, s.grid_cells, s.grid_cells}, 1.0);
    const auto rep = cavity_field_report(eps, g, s.radius_cells, s.tol);
    const double analytic = 3.0 * eps / (2.0 * eps + 1.0);
    rows.push_back({{"eps", eps},
                    {"factor", rep.factor},
                    {"analytic", analytic},
                    {"relative_error", (rep.factor - analytic) / analytic},
                    {"interior_spread", rep.interior_spread},
                    {"core_spread", rep.core_spread},
                    {"interior_samples", rep.interior_samples},
                    {"poisson_residual", rep.residual_norm},
                    {"iterations", rep.iterations}});
  }
  ctx.write_json("cavity_factor.json", {{"grid_cells", s.grid_cells},
                                        {"radius_cells", s.radius_cells},
                                        {"tol", s.tol},
                                        {"results", rows}});
}

}  // namespace

int run_pipeline(const RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  try {
#ifdef _OPENMP
    if (opts.threads > 0) omp_set_num_threads(opts.threads);
#endif
    Context ctx{cfg, opts, log, opts.out_dir ? *opts.out_dir : cfg.out_dir, nullptr, std::nullopt};
    std::filesystem::create_directories(ctx.out_dir);
    ctx.medium = std::make_shared<const MediumProfile>(cfg.grid, cfg.medium, cfg.mu);
    if (cfg.input_bank) load_input_bank(ctx);
    for (Task t : cfg.tasks) {
      ctx.info("task " + to_string(t));
      const auto t0 = std::chrono::steady_clock::now();
      switch (t) {
        case Task::decompose: task_decompose(ctx); break;
        case Task::modes: task_modes(ctx); break;
        case Task::verify: task_verify(ctx); break;
        case Task::ldos: task_ldos(ctx); break;
        case Task::rate: task_rate(ctx); break;
        case Task::cavity_factor: task_cavity_factor(ctx); break;
      }
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", dt);
      ctx.info(std::string("  done in ") + buf + " s");
    }
    return exit_ok;
  } catch (const InvariantFailure& e) {
    log << "error: " << e.what() << "\n";
    return exit_invariant;
  } catch (const SolverError& e) {
    log << "solver error: " << e.what() << " (best residual " << e.best_residual() << ")\n";
    return exit_solver;
  } catch (const BankFormatError& e) {
    log << "bank error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::invalid_argument& e) {
    // ConfigError, ContractError and IncompatibleSource
    log << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const json::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::runtime_error& e) {
    // file access and bank sidecar problems
    log << "I/O error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_solver;
  }
}

int run_pipeline(const std::filesystem::path& config_path, const RunOptions& opts,
                 std::ostream& log) {
  try {
    const RunConfig cfg = load_config(config_path);
    return run_pipeline(cfg, opts, log);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace mqed
