#pragma once

// Periodic staggered (Yee) lattice and the discrete grad/div/curl family.
//
// Sample placement, in cell units, for cell (i, j, k):
//   cell-center scalar      (i, j, k)
//   edge component c        (i, j, k) + e_c / 2
//   face component c        (i, j, k) + (1 - e_c) / 2
//
// Vector fields are stored component-major: the x block, then y, then z,
// each block x-fastest.  grad maps cell-center -> edge, curl maps
// edge -> face, and curl_t / div are the exact transposes (up to sign for
// div) so that curl o grad = 0 and div o curl_t = 0 hold identically.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqed {

/// Raised when a field is passed to an operation with the wrong placement or grid.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Grid {
  std::array<int, 3> dims{2, 2, 2};
  double spacing = 1.0;

  Grid() = default;
  Grid(int nx, int ny, int nz, double h = 1.0);
  explicit Grid(std::array<int, 3> n, double h = 1.0) : Grid(n[0], n[1], n[2], h) {}

  [[nodiscard]] std::size_t cells() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  [[nodiscard]] std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) +
                                                static_cast<std::size_t>(dims[1]) * k);
  }
  [[nodiscard]] std::array<int, 3> coords(std::size_t idx) const;
  [[nodiscard]] double cell_volume() const { return spacing * spacing * spacing; }
  [[nodiscard]] double length(int axis) const { return dims[axis] * spacing; }
  [[nodiscard]] double volume() const { return cells() * cell_volume(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

enum class Placement { cell_center, edge, face };

[[nodiscard]] std::string to_string(Placement p);

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.cells(), fill) {}
  ScalarField(const Grid& g, std::vector<double> v);

  [[nodiscard]] static constexpr Placement placement() { return Placement::cell_center; }
  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

struct VectorField {
  Grid grid;
  Placement placement = Placement::edge;
  std::vector<double> values;

  VectorField() = default;
  VectorField(const Grid& g, Placement p, double fill = 0.0);
  VectorField(const Grid& g, Placement p, std::vector<double> v);

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] std::span<double> component(int c) {
    return {values.data() + c * grid.cells(), grid.cells()};
  }
  [[nodiscard]] std::span<const double> component(int c) const {
    return {values.data() + c * grid.cells(), grid.cells()};
  }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Physical coordinates of a sample (cell center, edge or face component).
[[nodiscard]] std::array<double, 3> sample_position(const Grid& g, Placement p, int component,
                                                    std::size_t cell);

// Discrete operators.  All throw ContractError on placement mismatch.
[[nodiscard]] VectorField grad(const ScalarField& phi);
[[nodiscard]] ScalarField div(const VectorField& v);
[[nodiscard]] VectorField curl(const VectorField& v);
[[nodiscard]] VectorField curl_t(const VectorField& w);

// Raw kernels over contiguous storage, used by the solvers to avoid allocation.
// `in` and `out` must not alias.
void grad_into(const Grid& g, std::span<const double> phi, std::span<double> out);
void div_into(const Grid& g, std::span<const double> v, std::span<double> out);
void curl_into(const Grid& g, std::span<const double> v, std::span<double> out);
void curl_t_into(const Grid& g, std::span<const double> w, std::span<double> out);

/// Grid inner product: cell volume times the sum of products.
[[nodiscard]] double inner(const VectorField& u, const VectorField& v);
[[nodiscard]] double inner(const ScalarField& u, const ScalarField& v);
[[nodiscard]] double norm(const VectorField& u);
[[nodiscard]] double norm(const ScalarField& u);

[[nodiscard]] double max_abs(std::span<const double> v);

VectorField& axpy(double a, const VectorField& x, VectorField& y);
[[nodiscard]] VectorField operator+(const VectorField& a, const VectorField& b);
[[nodiscard]] VectorField operator-(const VectorField& a, const VectorField& b);
[[nodiscard]] VectorField operator*(double s, const VectorField& a);

void require_same(const Grid& a, const Grid& b, const char* what);
void require_placement(const VectorField& v, Placement p, const char* what);

}  // namespace mqed
