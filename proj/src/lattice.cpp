#include "mqed/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace mqed {

Grid::Grid(int nx, int ny, int nz, double h) : dims{nx, ny, nz}, spacing(h) {
  // A single cell along an axis is allowed: it represents a field that is
  // uniform in that direction (e.g. 1D layered media on an N x 1 x 1 grid).
  for (int d : dims)
    if (d < 1) throw ContractError("grid dimensions must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw ContractError("grid spacing must be positive");
}

std::array<int, 3> Grid::coords(std::size_t idx) const {
  const int i = static_cast<int>(idx % dims[0]);
  idx /= dims[0];
  const int j = static_cast<int>(idx % dims[1]);
  const int k = static_cast<int>(idx / dims[1]);
  return {i, j, k};
}

std::string to_string(Placement p) {
  switch (p) {
    case Placement::cell_center: return "cell-center";
    case Placement::edge: return "edge";
    case Placement::face: return "face";
  }
  return "unknown";
}

ScalarField::ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != g.cells()) throw ContractError("scalar field size does not match grid");
}

VectorField::VectorField(const Grid& g, Placement p, double fill)
    : grid(g), placement(p), values(3 * g.cells(), fill) {
  if (p == Placement::cell_center) throw ContractError("vector fields live on edges or faces");
}

VectorField::VectorField(const Grid& g, Placement p, std::vector<double> v)
    : grid(g), placement(p), values(std::move(v)) {
  if (p == Placement::cell_center) throw ContractError("vector fields live on edges or faces");
  if (values.size() != 3 * g.cells()) throw ContractError("vector field size does not match grid");
}

std::array<double, 3> sample_position(const Grid& g, Placement p, int component,
                                      std::size_t cell) {
  const auto ijk = g.coords(cell);
  std::array<double, 3> r{};
  for (int a = 0; a < 3; ++a) {
    double offset = 0.0;
    if (p == Placement::edge && a == component) offset = 0.5;
    if (p == Placement::face && a != component) offset = 0.5;
    r[a] = (ijk[a] + offset) * g.spacing;
  }
  return r;
}

void require_same(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw ContractError(std::string(what) + ": grid mismatch");
}

void require_placement(const VectorField& v, Placement p, const char* what) {
  if (v.placement != p)
    throw ContractError(std::string(what) + ": expected " + to_string(p) + " placement, got " +
                        to_string(v.placement));
}

namespace {

// Periodic neighbour offsets along each axis, as flat-index deltas per
// coordinate value.  up[a][x] is the delta to reach x+1, dn[a][x] to x-1.
struct Stencil {
  std::array<std::vector<std::ptrdiff_t>, 3> up, dn;

  explicit Stencil(const Grid& g) {
    const std::array<std::ptrdiff_t, 3> stride{1, g.dims[0],
                                               static_cast<std::ptrdiff_t>(g.dims[0]) * g.dims[1]};
    for (int a = 0; a < 3; ++a) {
      const int n = g.dims[a];
      up[a].resize(n);
      dn[a].resize(n);
      for (int x = 0; x < n; ++x) {
        up[a][x] = (x + 1 == n ? -(n - 1) : 1) * stride[a];
        dn[a][x] = (x == 0 ? (n - 1) : -1) * stride[a];
      }
    }
  }
};

template <class F>
void for_each_cell(const Grid& g, F&& f) {
  std::size_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++idx) f(idx, i, j, k);
}

}  // namespace

void grad_into(const Grid& g, std::span<const double> phi, std::span<double> out) {
  const Stencil st(g);
  const std::size_t n = g.cells();
  const double inv = 1.0 / g.spacing;
  for_each_cell(g, [&](std::size_t c, int i, int j, int k) {
    const double p = phi[c];
    out[c] = (phi[c + st.up[0][i]] - p) * inv;
    out[n + c] = (phi[c + st.up[1][j]] - p) * inv;
    out[2 * n + c] = (phi[c + st.up[2][k]] - p) * inv;
  });
}

void div_into(const Grid& g, std::span<const double> v, std::span<double> out) {
  const Stencil st(g);
  const std::size_t n = g.cells();
  const double inv = 1.0 / g.spacing;
  const double* vx = v.data();
  const double* vy = v.data() + n;
  const double* vz = v.data() + 2 * n;
  for_each_cell(g, [&](std::size_t c, int i, int j, int k) {
    out[c] = ((vx[c] - vx[c + st.dn[0][i]]) + (vy[c] - vy[c + st.dn[1][j]]) +
              (vz[c] - vz[c + st.dn[2][k]])) *
             inv;
  });
}

void curl_into(const Grid& g, std::span<const double> v, std::span<double> out) {
  const Stencil st(g);
  const std::size_t n = g.cells();
  const double inv = 1.0 / g.spacing;
  const double* vx = v.data();
  const double* vy = v.data() + n;
  const double* vz = v.data() + 2 * n;
  for_each_cell(g, [&](std::size_t c, int i, int j, int k) {
    const auto ux = st.up[0][i], uy = st.up[1][j], uz = st.up[2][k];
    out[c] = ((vz[c + uy] - vz[c]) - (vy[c + uz] - vy[c])) * inv;
    out[n + c] = ((vx[c + uz] - vx[c]) - (vz[c + ux] - vz[c])) * inv;
    out[2 * n + c] = ((vy[c + ux] - vy[c]) - (vx[c + uy] - vx[c])) * inv;
  });
}

void curl_t_into(const Grid& g, std::span<const double> w, std::span<double> out) {
  const Stencil st(g);
  const std::size_t n = g.cells();
  const double inv = 1.0 / g.spacing;
  const double* wx = w.data();
  const double* wy = w.data() + n;
  const double* wz = w.data() + 2 * n;
  for_each_cell(g, [&](std::size_t c, int i, int j, int k) {
    const auto dx = st.dn[0][i], dy = st.dn[1][j], dz = st.dn[2][k];
    out[c] = ((wz[c] - wz[c + dy]) - (wy[c] - wy[c + dz])) * inv;
    out[n + c] = ((wx[c] - wx[c + dz]) - (wz[c] - wz[c + dx])) * inv;
    out[2 * n + c] = ((wy[c] - wy[c + dx]) - (wx[c] - wx[c + dy])) * inv;
  });
}

VectorField grad(const ScalarField& phi) {
  VectorField out(phi.grid, Placement::edge);
  grad_into(phi.grid, phi.values, out.values);
  return out;
}

ScalarField div(const VectorField& v) {
  require_placement(v, Placement::edge, "div");
  ScalarField out(v.grid);
  div_into(v.grid, v.values, out.values);
  return out;
}

VectorField curl(const VectorField& v) {
  require_placement(v, Placement::edge, "curl");
  VectorField out(v.grid, Placement::face);
  curl_into(v.grid, v.values, out.values);
  return out;
}

VectorField curl_t(const VectorField& w) {
  require_placement(w, Placement::face, "curl_t");
  VectorField out(w.grid, Placement::edge);
  curl_t_into(w.grid, w.values, out.values);
  return out;
}

namespace {
double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

double inner(const VectorField& u, const VectorField& v) {
  require_same(u.grid, v.grid, "inner");
  if (u.placement != v.placement) throw ContractError("inner: placement mismatch");
  return u.grid.cell_volume() * dot(u.values, v.values);
}

double inner(const ScalarField& u, const ScalarField& v) {
  require_same(u.grid, v.grid, "inner");
  return u.grid.cell_volume() * dot(u.values, v.values);
}

double norm(const VectorField& u) { return std::sqrt(inner(u, u)); }
double norm(const ScalarField& u) { return std::sqrt(inner(u, u)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

VectorField& axpy(double a, const VectorField& x, VectorField& y) {
  require_same(x.grid, y.grid, "axpy");
  if (x.placement != y.placement) throw ContractError("axpy: placement mismatch");
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
  return y;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  VectorField out = b;
  return axpy(1.0, a, out);
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  VectorField out = a;
  return axpy(-1.0, b, out);
}

VectorField operator*(double s, const VectorField& a) {
  VectorField out = a;
  for (double& x : out.values) x *= s;
  return out;
}

}  // namespace mqed
