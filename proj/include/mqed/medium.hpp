#pragma once

// Relative permittivity / permeability profiles and their staircase
// sampling onto the staggered grid.  eps is sampled at every edge component
// position (where Q and the Poisson operator need it); mu at face positions.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mqed/lattice.hpp"

namespace mqed {

struct MediumDescriptor;

struct Homogeneous {
  double eps = 1.0;
};

struct Layer {
  double thickness = 1.0;
  double eps = 1.0;
};

/// Layers stacked along `axis`, starting at coordinate 0 and repeating with
/// period sum(thickness).  A coordinate exactly on an interface belongs to
/// the layer that starts there.
struct SlabStack {
  std::vector<Layer> layers;
  int axis = 0;
};

struct Sphere {
  std::array<double, 3> center{};
  double radius = 1.0;
  double eps_in = 1.0;
  double eps_out = 1.0;
};

/// Smooth periodic profile built from a few seeded low-order cosines,
/// mapped into [eps_min, eps_max].
struct RandomSmooth {
  double eps_min = 1.0;
  double eps_max = 4.0;
  std::uint64_t seed = 1;
  int harmonics = 3;
};

/// Host profile with spherical eps = 1 voids around the given centers.
struct EmptyCavity {
  std::shared_ptr<const MediumDescriptor> host;
  std::vector<std::array<double, 3>> centers;
  double radius = 1.0;
};

struct MediumDescriptor {
  std::variant<Homogeneous, SlabStack, Sphere, RandomSmooth, EmptyCavity> shape;

  /// Pointwise value at a physical position (periodic in the box of `g`).
  [[nodiscard]] double evaluate(const Grid& g, const std::array<double, 3>& r) const;
  [[nodiscard]] std::string kind() const;
};

/// Checks descriptor parameters against the grid; throws ContractError.
void validate(const MediumDescriptor& d, const Grid& g);

/// Minimum-image distance between two points in the periodic box.
[[nodiscard]] double periodic_distance(const Grid& g, const std::array<double, 3>& a,
                                       const std::array<double, 3>& b);

class MediumProfile {
 public:
  MediumProfile(const Grid& g, MediumDescriptor eps_descriptor,
                std::optional<MediumDescriptor> mu_descriptor = std::nullopt);

  [[nodiscard]] const Grid& grid() const { return grid_; }
  /// eps at edge sample positions.
  [[nodiscard]] const VectorField& eps() const { return eps_; }
  /// mu at face sample positions (all ones when nonmagnetic).
  [[nodiscard]] const VectorField& mu() const { return mu_; }
  [[nodiscard]] bool magnetic() const { return mu_descriptor_.has_value(); }
  [[nodiscard]] const MediumDescriptor& descriptor() const { return descriptor_; }
  [[nodiscard]] const std::optional<MediumDescriptor>& mu_descriptor() const {
    return mu_descriptor_;
  }
  [[nodiscard]] double eps_at(const std::array<double, 3>& r) const {
    return descriptor_.evaluate(grid_, r);
  }
  [[nodiscard]] double eps_min() const { return eps_min_; }
  [[nodiscard]] double eps_max() const { return eps_max_; }
  [[nodiscard]] double mu_min() const { return mu_min_; }

 private:
  Grid grid_;
  MediumDescriptor descriptor_;
  std::optional<MediumDescriptor> mu_descriptor_;
  VectorField eps_;
  VectorField mu_;
  double eps_min_ = 1.0, eps_max_ = 1.0, mu_min_ = 1.0;
};

[[nodiscard]] MediumProfile build_profile(const MediumDescriptor& d, const Grid& g);

/// sum eps * u . v * cell volume (compensated summation).
[[nodiscard]] double eps_inner(const VectorField& u, const VectorField& v, const MediumProfile& m);

/// Elementwise eps ⊙ v for an edge field.
[[nodiscard]] VectorField eps_times(const MediumProfile& m, const VectorField& v);

}  // namespace mqed
