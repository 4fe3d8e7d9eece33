#include "mqed/medium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mqed {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double wrap(double x, double period) {
  double y = std::fmod(x, period);
  if (y < 0) y += period;
  return y;
}

struct Harmonic {
  std::array<int, 3> k;
  double amplitude;
  double phase;
};

// Seeded harmonic set for RandomSmooth.  Draws from mt19937_64 bits directly
// so the profile does not depend on the standard library's distributions.
std::vector<Harmonic> smooth_harmonics(const RandomSmooth& s) {
  std::mt19937_64 rng(s.seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Harmonic> out;
  for (int h = 0; h < s.harmonics; ++h) {
    Harmonic hm{};
    do {
      for (int a = 0; a < 3; ++a) hm.k[a] = static_cast<int>(rng() % 3) - 1;
    } while (hm.k == std::array<int, 3>{0, 0, 0});
    hm.amplitude = 0.25 + unit();
    hm.phase = 2.0 * std::numbers::pi * unit();
    out.push_back(hm);
  }
  return out;
}

double evaluate_smooth(const RandomSmooth& s, const Grid& g, const std::array<double, 3>& r) {
  const auto hs = smooth_harmonics(s);
  double total = 0.0, weight = 0.0;
  for (const auto& h : hs) {
    double arg = h.phase;
    for (int a = 0; a < 3; ++a) arg += 2.0 * std::numbers::pi * h.k[a] * r[a] / g.length(a);
    total += h.amplitude * std::cos(arg);
    weight += h.amplitude;
  }
  const double f = weight > 0 ? total / weight : 0.0;  // in [-1, 1]
  return 0.5 * (s.eps_min + s.eps_max) + 0.5 * (s.eps_max - s.eps_min) * f;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ContractError(std::string(what) + " must be positive and finite");
}

}  // namespace

double periodic_distance(const Grid& g, const std::array<double, 3>& a,
                         const std::array<double, 3>& b) {
  double d2 = 0.0;
  for (int ax = 0; ax < 3; ++ax) {
    const double L = g.length(ax);
    double d = wrap(a[ax] - b[ax], L);
    if (d > 0.5 * L) d -= L;
    d2 += d * d;
  }
  return std::sqrt(d2);
}

double MediumDescriptor::evaluate(const Grid& g, const std::array<double, 3>& r) const {
  return std::visit(
      overloaded{
          [](const Homogeneous& h) { return h.eps; },
          [&](const SlabStack& s) {
            double period = 0.0;
            for (const auto& l : s.layers) period += l.thickness;
            double x = wrap(r[s.axis], period);
            for (const auto& l : s.layers) {
              if (x < l.thickness) return l.eps;
              x -= l.thickness;
            }
            return s.layers.back().eps;
          },
          [&](const Sphere& s) {
            return periodic_distance(g, r, s.center) < s.radius ? s.eps_in : s.eps_out;
          },
          [&](const RandomSmooth& s) { return evaluate_smooth(s, g, r); },
          [&](const EmptyCavity& c) {
            for (const auto& ctr : c.centers)
              if (periodic_distance(g, r, ctr) < c.radius) return 1.0;
            return c.host->evaluate(g, r);
          },
      },
      shape);
}

std::string MediumDescriptor::kind() const {
  return std::visit(overloaded{
                        [](const Homogeneous&) { return std::string("homogeneous"); },
                        [](const SlabStack&) { return std::string("slab_stack"); },
                        [](const Sphere&) { return std::string("sphere"); },
                        [](const RandomSmooth&) { return std::string("random_smooth"); },
                        [](const EmptyCavity&) { return std::string("empty_cavity"); },
                    },
                    shape);
}

void validate(const MediumDescriptor& d, const Grid& g) {
  const double half_box = 0.5 * std::min({g.length(0), g.length(1), g.length(2)});
  std::visit(overloaded{
                 [](const Homogeneous& h) { require_positive(h.eps, "eps"); },
                 [](const SlabStack& s) {
                   if (s.layers.empty()) throw ContractError("slab stack needs at least one layer");
                   if (s.axis < 0 || s.axis > 2) throw ContractError("slab axis must be 0, 1 or 2");
                   for (const auto& l : s.layers) {
                     require_positive(l.thickness, "layer thickness");
                     require_positive(l.eps, "layer eps");
                   }
                 },
                 [&](const Sphere& s) {
                   require_positive(s.eps_in, "eps_in");
                   require_positive(s.eps_out, "eps_out");
                   require_positive(s.radius, "sphere radius");
                   if (s.radius > half_box)
                     throw ContractError("sphere radius exceeds half the box");
                 },
                 [](const RandomSmooth& s) {
                   require_positive(s.eps_min, "eps_min");
                   if (!(s.eps_max >= s.eps_min)) throw ContractError("eps_max < eps_min");
                   if (s.harmonics < 1) throw ContractError("need at least one harmonic");
                 },
                 [&](const EmptyCavity& c) {
                   if (!c.host) throw ContractError("empty cavity needs a host profile");
                   validate(*c.host, g);
                   if (c.radius < g.spacing)
                     throw ContractError("cavity radius must be at least one cell");
                   if (c.radius > half_box)
                     throw ContractError("cavity radius exceeds half the box");
                 },
             },
             d.shape);
}

MediumProfile::MediumProfile(const Grid& g, MediumDescriptor eps_descriptor,
                             std::optional<MediumDescriptor> mu_descriptor)
    : grid_(g),
      descriptor_(std::move(eps_descriptor)),
      mu_descriptor_(std::move(mu_descriptor)),
      eps_(g, Placement::edge),
      mu_(g, Placement::face, 1.0) {
  validate(descriptor_, g);
  const std::size_t n = g.cells();
  for (int c = 0; c < 3; ++c)
    for (std::size_t cell = 0; cell < n; ++cell)
      eps_[c * n + cell] = descriptor_.evaluate(g, sample_position(g, Placement::edge, c, cell));
  if (mu_descriptor_) {
    validate(*mu_descriptor_, g);
    for (int c = 0; c < 3; ++c)
      for (std::size_t cell = 0; cell < n; ++cell)
        mu_[c * n + cell] =
            mu_descriptor_->evaluate(g, sample_position(g, Placement::face, c, cell));
  }
  for (double e : eps_.values)
    if (!(e > 0.0) || !std::isfinite(e)) throw ContractError("eps samples must be positive");
  for (double m : mu_.values)
    if (!(m > 0.0) || !std::isfinite(m)) throw ContractError("mu samples must be positive");
  const auto [lo, hi] = std::minmax_element(eps_.values.begin(), eps_.values.end());
  eps_min_ = *lo;
  eps_max_ = *hi;
  mu_min_ = *std::min_element(mu_.values.begin(), mu_.values.end());
}

MediumProfile build_profile(const MediumDescriptor& d, const Grid& g) { return {g, d}; }

double eps_inner(const VectorField& u, const VectorField& v, const MediumProfile& m) {
  require_same(u.grid, m.grid(), "eps_inner");
  require_same(v.grid, m.grid(), "eps_inner");
  require_placement(u, Placement::edge, "eps_inner");
  require_placement(v, Placement::edge, "eps_inner");
  const auto& e = m.eps().values;
  // Neumaier summation keeps the result accurate for nearly-cancelling sums.
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double term = e[i] * u[i] * v[i];
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
  }
  return (sum + comp) * m.grid().cell_volume();
}

VectorField eps_times(const MediumProfile& m, const VectorField& v) {
  require_same(v.grid, m.grid(), "eps_times");
  require_placement(v, Placement::edge, "eps_times");
  VectorField out = v;
  for (std::size_t i = 0; i < out.values.size(); ++i) out[i] *= m.eps()[i];
  return out;
}

}  // namespace mqed
