#pragma once

// Run configuration: a JSON document describing the grid, medium, solver
// settings, atoms and the ordered list of tasks.  See README.md for the
// schema.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mqed/emission.hpp"
#include "mqed/medium.hpp"
#include "mqed/modes.hpp"

namespace mqed {

/// Schema or feasibility violation in a configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Task { decompose, modes, verify, ldos, rate, cavity_factor };

[[nodiscard]] std::string to_string(Task t);

struct LdosSpec {
  std::array<double, 3> position{};
  std::array<double, 3> orientation{0.0, 0.0, 1.0};
  double omega_min = 0.0;
  double omega_max = 1.0;
  int samples = 101;
  double eta = 0.0;  ///< <= 0: default broadening at the band center
};

struct RateSpec {
  std::size_t atom = 0;
  std::size_t upper = 1;
  std::size_t lower = 0;
  double eta = 0.0;  ///< <= 0: default broadening
  bool local_field = false;
  CavityModelOptions cavity;
};

struct CavityFactorSpec {
  std::vector<double> eps{2.25, 4.0, 9.0};
  int grid_cells = 64;
  double radius_cells = 8.0;
  double tol = 1e-10;
};

struct RunConfig {
  Grid grid;
  MediumDescriptor medium;
  std::optional<MediumDescriptor> mu;
  OperatorVariant variant = OperatorVariant::nonmagnetic;
  ModeSolverOptions solver;
  double poisson_tol = 1e-10;
  int mode_count = 0;
  std::string bank_file = "bank.qmb";   ///< written by the modes task, relative to out_dir
  std::optional<std::filesystem::path> input_bank;  ///< loaded instead of solving
  std::vector<AtomSpec> atoms;
  std::optional<LdosSpec> ldos;
  std::optional<RateSpec> rate;
  CavityFactorSpec cavity_factor;
  std::vector<Task> tasks;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
};

[[nodiscard]] nlohmann::json descriptor_to_json(const MediumDescriptor& d);
[[nodiscard]] MediumDescriptor descriptor_from_json(const nlohmann::json& j);

/// Parses and validates; relative paths resolve against base_dir.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

}  // namespace mqed
