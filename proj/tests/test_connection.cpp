#include <cmath>

#include "asdweld/connection.hpp"
#include "asdweld/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace asdweld;
using testutil::random_field;
using testutil::smooth_field;

namespace {

Grid make_grid(int n, double L = 4.0) {
  Grid g;
  g.n = n;
  g.L = L;
  g.h = L / n;
  g.nsites = std::int64_t(n) * n * n * n;
  return g;
}

Background bpst_center(double rho, double L = 4.0) {
  Background b;
  b.kind = Background::Kind::Bpst;
  b.center = {L / 2, L / 2, L / 2, L / 2};
  b.scale = rho;
  return b;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("one instanton carries energy eight pi squared") {
  const double rho = 0.7;
  const Grid g = make_grid(16);
  const Background bg = bpst_center(rho);
  const Connection c = make_background_connection(g, g.L, bg);

  // Quadrature of the closed-form density over the same lattice.
  double exact_quad = 0.0;
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Point u = torus_delta(g.point(s), bg.center, g.L);
    exact_quad += bg.density_at(u);
  }
  exact_quad *= g.h * g.h * g.h * g.h;

  const double target = 8.0 * kPi * kPi;
  CHECK(std::abs(exact_quad - target) / target < 0.02);  // tail + quadrature
  const double e = energy(c);
  CHECK(std::abs(e - exact_quad) / target < 0.09);  // adds the h^2 stencil error
  CHECK(std::abs(e - target) / target < 0.10);
}

TEST_CASE("curvature stencil converges to the closed form") {
  const double rho = 0.5;
  double err[2];
  int idx = 0;
  for (int n : {12, 24}) {
    const Grid g = make_grid(n);
    const Background bg = bpst_center(rho);
    Field F;
    background_curvature_stencil(g, bg, g.L, F);
    double worst = 0.0;
    Alg exact[6];
    for (std::int64_t s = 0; s < g.nsites; ++s) {
      const Point u = torus_delta(g.point(s), bg.center, g.L);
      bg.curvature_at(u, exact);
      for (int p = 0; p < 6; ++p) worst = std::max(worst, norm(F.get(s, p) - exact[p]));
    }
    err[idx++] = worst;
  }
  const double ratio = err[0] / err[1];
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.5);
}

TEST_CASE("instanton curvature is anti self dual") {
  const Grid g = make_grid(16);
  const Background bg = bpst_center(0.7);
  const Connection c = make_background_connection(g, g.L, bg);
  const Field F = curvature(c);
  const Field sd = p_plus(F);
  // The self dual residue is pure stencil truncation, two orders below |F|.
  const double r = norm_l2(g, sd, 2.0) / norm_l2(g, F, 1.0);
  CHECK(r < 0.06);
  // The closed form itself is exactly anti self dual.
  Alg exact[6];
  bg.curvature_at(Point{0.3, -0.2, 0.1, 0.4}, exact);
  CHECK(std::abs(exact[0].c[0] + exact[5].c[0]) < 1e-15);
  CHECK(std::abs(exact[1].c[1] - exact[4].c[1]) < 1e-15);
  CHECK(std::abs(exact[2].c[2] + exact[3].c[2]) < 1e-15);
}

TEST_CASE("instanton charge is minus one") {
  const Grid g = make_grid(16);
  const Connection c = make_background_connection(g, g.L, bpst_center(0.7));
  const double q = instanton_charge(c);
  CHECK(std::abs(q + 1.0) < 0.1);
  // Second-order stencil error: halving h cuts the defect by about four.
  const Grid g2 = make_grid(24);
  const Connection c2 = make_background_connection(g2, g2.L, bpst_center(0.7));
  const double q2 = instanton_charge(c2);
  CHECK(std::abs(q2 + 1.0) < 0.6 * std::abs(q + 1.0));
}

TEST_CASE("flat background has zero curvature energy and charge") {
  const Grid g = make_grid(8);
  Background flat;
  const Connection c = make_background_connection(g, g.L, flat);
  CHECK(energy(c) == 0.0);
  CHECK(instanton_charge(c) == 0.0);
}

TEST_CASE("constant gauge transformations act exactly") {
  const Grid g = make_grid(8);
  Rng rng(41, "conn.constgauge");
  const Field A = smooth_field(g, 4, rng, 2, 0.8);
  const Group gg = rng.group();
  const std::vector<Group> gauge(std::size_t(g.nsites), gg);

  const Field At = apply_gauge(g, gauge, A);
  const Connection c0 = make_grid_connection(g, A);
  const Connection c1 = make_grid_connection(g, At);
  const Field F0 = curvature(c0), F1 = curvature(c1);

  // F transforms by the pointwise adjoint with no discretization residue.
  const Field F0r = rotate_field(gauge, F0);
  double worst = 0.0;
  for (std::size_t i = 0; i < F0.v.size(); ++i) worst = std::max(worst, std::abs(F1.v[i] - F0r.v[i]));
  const double scale = norm_linf(F0, 1.0);
  CHECK(worst <= 1e-12 * std::max(1.0, scale));

  CHECK(std::abs(energy(c1) - energy(c0)) <= 1e-10 * std::max(1.0, energy(c0)));
  CHECK(std::abs(instanton_charge(c1) - instanton_charge(c0)) < 1e-12);
}

TEST_CASE("pointwise gauge covariance holds at stencil order") {
  double err[2];
  int idx = 0;
  for (int n : {12, 24}) {
    const Grid g = make_grid(n);
    Rng mode_rng(43, "conn.gauge.modes");
    const Field A = smooth_field(g, 4, mode_rng, 2, 0.5);
    const Field th = smooth_field(g, 1, mode_rng, 2, 0.3);
    std::vector<Group> gauge(std::size_t(g.nsites));
    for (std::int64_t s = 0; s < g.nsites; ++s) gauge[std::size_t(s)] = exp_alg(th.get(s, 0));

    const Field At = apply_gauge(g, gauge, A);
    const Field F1 = curvature(make_grid_connection(g, At));
    const Field F0r = rotate_field(gauge, curvature(make_grid_connection(g, A)));
    double worst = 0.0;
    for (std::size_t i = 0; i < F1.v.size(); ++i)
      worst = std::max(worst, std::abs(F1.v[i] - F0r.v[i]));
    err[idx++] = worst;
  }
  const double ratio = err[0] / err[1];
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.5);
}

TEST_CASE("composite curvature matches the plain grid curvature inside") {
  const Grid g = make_grid(12);
  const Background bg = bpst_center(0.45);
  Connection c = make_background_connection(g, g.L, bg);
  Rng rng(44, "conn.composite");
  c.pert = smooth_field(g, 4, rng, 1, 0.2);
  c.has_pert = true;

  const Field Fc = curvature(c);
  Field total = c.base;
  axpy(1.0, c.pert, total);
  const Field Fg = curvature(make_grid_connection(g, total));

  // Same arithmetic wherever no stencil leg wraps a torus seam relative to
  // the background center.
  double worst = 0.0;
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Point u = torus_delta(g.point(s), bg.center, g.L);
    bool interior = true;
    for (int m = 0; m < 4; ++m)
      if (std::abs(u[m]) > g.L / 2 - 1.5 * g.h) interior = false;
    if (!interior) continue;
    for (int p = 0; p < 6; ++p) worst = std::max(worst, norm(Fc.get(s, p) - Fg.get(s, p)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("multilinear sampling reproduces grid values and smooth fields") {
  const Grid g = make_grid(8);
  Rng rng(45, "conn.sample");
  const Field f = smooth_field(g, 4, rng, 1, 1.0);
  Alg out[4];
  const std::int64_t probe = g.site(3, 1, 7, 2);
  sample_field(g, f, g.point(probe), out);
  for (int c = 0; c < 4; ++c) CHECK(norm(out[c] - f.get(probe, c)) < 1e-13);
  // Wrap-around cell.
  sample_field(g, f, Point{g.L - 0.5 * g.h, 0.25 * g.h, g.L - 0.1, 0.0}, out);
  for (int c = 0; c < 4; ++c) CHECK(std::isfinite(out[c].c[0]));

  // Interpolation error against a single analytic mode, second order in h.
  Rng probe_rng(46, "conn.sample.probe");
  for (int n : {16, 32}) {
    const Grid gg = make_grid(n);
    Field mode(1, gg.nsites);
    const double w0 = 2.0 * kPi / gg.L, w3 = 2.0 * w0;
    for (std::int64_t s = 0; s < gg.nsites; ++s) {
      const Point p = gg.point(s);
      mode.set(s, 0, Alg{std::sin(w0 * p[0] + w3 * p[3]), 0.0, 0.0});
    }
    const double tol = (w0 * w0 + w3 * w3) * gg.h * gg.h / 8.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Point x{probe_rng.uniform(0, gg.L), probe_rng.uniform(0, gg.L),
                    probe_rng.uniform(0, gg.L), probe_rng.uniform(0, gg.L)};
      Alg got[1];
      sample_field(gg, mode, x, got);
      CHECK(std::abs(got[0].c[0] - std::sin(w0 * x[0] + w3 * x[3])) <= 1.05 * tol);
    }
  }
}

TEST_CASE("exponential gauge kills the radial component") {
  const Grid g = make_grid(16);
  const Background bg = bpst_center(0.5);
  const Connection c = make_background_connection(g, g.L, bg);

  const ConnectionSampler sampler = [&](const Point& x, Alg out[4]) {
    const Point u = torus_delta(x, bg.center, g.L);
    bg.connection_at(u, out);
  };
  const double r_pure = 0.45, r_blend = 0.7;
  const auto gauge = exponential_gauge(g, g.L, sampler, bg.center, r_pure, r_blend, 8);
  const Field At = apply_gauge(g, gauge, c.base);

  double fmax = 0.0;
  for (std::int64_t s = 0; s < g.nsites; ++s)
    fmax = std::max(fmax, std::sqrt(bg.density_at(torus_delta(g.point(s), bg.center, g.L))));

  double worst_radial = 0.0, worst_bound = 0.0;
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Point u = torus_delta(g.point(s), bg.center, g.L);
    const double r = norm4(u);
    if (r < 2.0 * g.h || r > r_pure - g.h) continue;
    Alg vr{};
    for (int m = 0; m < 4; ++m) {
      Alg t = At.get(s, m);
      t *= u[m] / r;
      vr += t;
    }
    worst_radial = std::max(worst_radial, norm(vr));
    double amag = 0.0;
    for (int m = 0; m < 4; ++m) amag += dot(At.get(s, m), At.get(s, m));
    worst_bound = std::max(worst_bound, std::sqrt(amag) / (0.5 * r * fmax));
  }
  CHECK(worst_radial < 0.05);
  // |A(x)| <= (1/2) |x| sup|F| with ten percent slack for discretization.
  CHECK(worst_bound < 1.1);

  // Identity outside the blend radius.
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Point u = torus_delta(g.point(s), bg.center, g.L);
    if (norm4(u) >= r_blend)
      CHECK(group_distance(gauge[std::size_t(s)], identity_group()) == 0.0);
  }
}
