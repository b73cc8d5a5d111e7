#include "asdweld/connection.hpp"

#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace asdweld {

namespace {

// Im(ubar du) coefficients: c^a_0 = -u_a, c^a_m = u0 d_am + eps_amb u_b.
inline void imaginary_frame(const Point& u, double c[3][4]) {
  c[0][0] = -u[1];
  c[0][1] = u[0];
  c[0][2] = u[3];
  c[0][3] = -u[2];
  c[1][0] = -u[2];
  c[1][1] = -u[3];
  c[1][2] = u[0];
  c[1][3] = u[1];
  c[2][0] = -u[3];
  c[2][1] = u[2];
  c[2][2] = -u[1];
  c[2][3] = u[0];
}

}  // namespace

void Background::connection_at(const Point& u, Alg out[4]) const {
  if (kind == Kind::Flat) {
    for (int m = 0; m < 4; ++m) out[m] = Alg{};
    return;
  }
  const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[3] * u[3];
  const double inv = 1.0 / (r2 + scale * scale);
  double c[3][4];
  imaginary_frame(u, c);
  for (int m = 0; m < 4; ++m)
    out[m] = Alg{kSqrt2 * inv * c[0][m], kSqrt2 * inv * c[1][m],
                 kSqrt2 * inv * c[2][m]};
}

void Background::curvature_at(const Point& u, Alg out[6]) const {
  for (int i = 0; i < 6; ++i) out[i] = Alg{};
  if (kind == Kind::Flat) return;
  const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[3] * u[3];
  const double d = r2 + scale * scale;
  const double f = 2.0 * kSqrt2 * scale * scale / (d * d);
  out[0].c[0] = f;   // 01
  out[5].c[0] = -f;  // 23
  out[1].c[1] = f;   // 02
  out[4].c[1] = f;   // 13
  out[2].c[2] = f;   // 03
  out[3].c[2] = -f;  // 12
}

double Background::density_at(const Point& u) const {
  if (kind == Kind::Flat) return 0.0;
  const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[3] * u[3];
  const double d = r2 + scale * scale;
  const double s2 = scale * scale;
  return 48.0 * s2 * s2 / (d * d * d * d);
}

void sample_background(const Grid& g, const Background& bg, double torus_len,
                       Field& out4) {
  out4 = Field(4, g.nsites);
  Alg a[4];
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Point x = g.point(s);
    const Point u = torus_delta(x, bg.center, torus_len);
    bg.connection_at(u, a);
    for (int m = 0; m < 4; ++m) out4.set(s, m, a[m]);
  }
}

void background_curvature_stencil(const Grid& g, const Background& bg,
                                  double torus_len, Field& out6) {
  out6 = Field(6, g.nsites);
  if (bg.kind == Background::Kind::Flat) {
    out6.fill_zero();
    return;
  }
  const double h = g.h;
  const double inv2h = 1.0 / (2.0 * h);
  Alg ap[4], am[4], at[4];
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Point x = g.point(s);
    const Point u = torus_delta(x, bg.center, torus_len);
    Alg grad[4][4];  // grad[mu][nu] = D_mu A_nu, one image for all samples
    for (int mu = 0; mu < 4; ++mu) {
      Point up = u, um = u;
      up[mu] += h;
      um[mu] -= h;
      bg.connection_at(up, ap);
      bg.connection_at(um, am);
      for (int nu = 0; nu < 4; ++nu) grad[mu][nu] = (ap[nu] - am[nu]) * inv2h;
    }
    bg.connection_at(u, at);
    for (int p = 0; p < 6; ++p) {
      const int mu = kPair[p][0], nu = kPair[p][1];
      Alg v = grad[mu][nu] - grad[nu][mu] + bracket(at[mu], at[nu]);
      out6.set(s, p, v);
    }
  }
}

Connection make_grid_connection(const Grid& g, const Field& A) {
  Connection c;
  c.grid = g;
  c.torus_len = g.L;
  c.base = A;
  c.fbase = Field(0, 0);
  c.pert = Field(4, g.nsites);
  c.pert.fill_zero();
  return c;
}

Connection make_background_connection(const Grid& g, double torus_len,
                                      const Background& bg) {
  Connection c;
  c.grid = g;
  c.torus_len = torus_len;
  c.bg = std::make_shared<Background>(bg);
  sample_background(g, bg, torus_len, c.base);
  background_curvature_stencil(g, bg, torus_len, c.fbase);
  c.pert = Field(4, g.nsites);
  c.pert.fill_zero();
  return c;
}

Field curvature(const Connection& c) {
  if (!c.bg) {
    Field total = c.base;
    if (c.has_pert) axpy(1.0, c.pert, total);
    Field F = cov_d1(c.grid, nullptr, total);
    Field Q = quad_wedge(total);
    axpy(1.0, Q, F);
    return F;
  }
  Field F = c.fbase;
  if (c.has_pert) {
    Field lin = cov_d1(c.grid, &c.base, c.pert);
    axpy(1.0, lin, F);
    Field Q = quad_wedge(c.pert);
    axpy(1.0, Q, F);
  }
  return F;
}

Field curvature_plus(const Connection& c) { return p_plus(curvature(c)); }

double energy(const Connection& c) {
  const Field F = curvature(c);
  return inner_product(c.grid, F, F, 1.0);
}

double energy_masked(const Connection& c, const std::vector<std::uint8_t>& mask) {
  const Field F = curvature(c);
  return mass_lp_masked(c.grid, F, 2.0, 1.0, mask);
}

double instanton_charge(const Connection& c) {
  const Field F = curvature(c);
  const Grid& g = c.grid;
  const double w = g.h * g.h * g.h * g.h / (4.0 * M_PI * M_PI);
  std::vector<double> dens(static_cast<std::size_t>(g.nsites));
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Alg f01 = F.get(s, 0), f02 = F.get(s, 1), f03 = F.get(s, 2);
    const Alg f12 = F.get(s, 3), f13 = F.get(s, 4), f23 = F.get(s, 5);
    dens[static_cast<std::size_t>(s)] =
        dot(f01, f23) - dot(f02, f13) + dot(f03, f12);
  }
  return w * chunked_sum(dens);
}

Field apply_gauge(const Grid& g, const std::vector<Group>& gauge,
                  const Field& A) {
  assert(static_cast<std::int64_t>(gauge.size()) == g.nsites);
  Field out(4, g.nsites);
  const int n = g.n;
  const std::int64_t str[4] = {static_cast<std::int64_t>(n) * n * n,
                               static_cast<std::int64_t>(n) * n, n, 1};
  const double inv2h = 1.0 / (2.0 * g.h);
  std::int64_t s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l, ++s) {
          const int idx[4] = {i, j, k, l};
          const Group gg = gauge[static_cast<std::size_t>(s)];
          const Group gi = inverse(gg);
          for (int mu = 0; mu < 4; ++mu) {
            const int up = idx[mu] + 1 == n ? 0 : idx[mu] + 1;
            const int dn = idx[mu] == 0 ? n - 1 : idx[mu] - 1;
            const std::int64_t sp = s + (up - idx[mu]) * str[mu];
            const std::int64_t sm = s + (dn - idx[mu]) * str[mu];
            // (dg) g^-1 as a quaternion product; the centered difference of
            // a unit-quaternion field is not tangent, so keep the vector part.
            const Group& gp = gauge[static_cast<std::size_t>(sp)];
            const Group& gm = gauge[static_cast<std::size_t>(sm)];
            const Group dg{(gp.w - gm.w) * inv2h, (gp.x - gm.x) * inv2h,
                           (gp.y - gm.y) * inv2h, (gp.z - gm.z) * inv2h};
            const Group dgi = dg * gi;
            const Alg shift{kSqrt2 * dgi.x, kSqrt2 * dgi.y, kSqrt2 * dgi.z};
            out.set(s, mu, adjoint(gg, A.get(s, mu)) - shift);
          }
        }
  return out;
}

Field rotate_field(const std::vector<Group>& gauge, const Field& f) {
  Field out = f;
  for (std::int64_t s = 0; s < f.nsites; ++s) {
    const Group& gg = gauge[static_cast<std::size_t>(s)];
    for (int cc = 0; cc < f.ncomp; ++cc) out.set(s, cc, adjoint(gg, f.get(s, cc)));
  }
  return out;
}

void sample_field(const Grid& g, const Field& f, const Point& x, Alg* out) {
  const int n = g.n;
  const double invh = 1.0 / g.h;
  int i0[4];
  double w1[4];
  for (int m = 0; m < 4; ++m) {
    double t = x[m] * invh;
    double fl = std::floor(t);
    w1[m] = t - fl;
    std::int64_t cell = static_cast<std::int64_t>(fl) % n;
    if (cell < 0) cell += n;
    i0[m] = static_cast<int>(cell);
  }
  for (int cc = 0; cc < f.ncomp; ++cc) out[cc] = Alg{};
  for (int corner = 0; corner < 16; ++corner) {
    double w = 1.0;
    std::int64_t s = 0;
    const std::int64_t str[4] = {static_cast<std::int64_t>(n) * n * n,
                                 static_cast<std::int64_t>(n) * n, n, 1};
    for (int m = 0; m < 4; ++m) {
      const int bit = (corner >> m) & 1;
      int idx = i0[m] + bit;
      if (idx == n) idx = 0;
      s += idx * str[m];
      w *= bit ? w1[m] : 1.0 - w1[m];
    }
    if (w == 0.0) continue;
    for (int cc = 0; cc < f.ncomp; ++cc) {
      Alg v = f.get(s, cc);
      v *= w;
      out[cc] += v;
    }
  }
}

Group ray_transport(const ConnectionSampler& sample, const Point& center,
                    const Point& u, int substeps) {
  Group P = identity_group();
  if (substeps <= 0) return P;
  Alg a[4];
  const double dt = 1.0 / substeps;
  for (int step = 0; step < substeps; ++step) {
    const double tm = (step + 0.5) * dt;
    const Point mid{center[0] + tm * u[0], center[1] + tm * u[1],
                    center[2] + tm * u[2], center[3] + tm * u[3]};
    sample(mid, a);
    Alg av{};
    for (int m = 0; m < 4; ++m) {
      Alg t = a[m];
      t *= u[m] * dt;
      av += t;
    }
    av *= -1.0;
    P = exp_alg(av) * P;
    P = P.normalize();
  }
  return P;
}

Group exponential_frame(const ConnectionSampler& sample, const Point& center,
                        const Point& u, double r_pure, double r_blend,
                        double h, int substeps_per_h) {
  if (!(r_pure > 0.0) || !(r_blend > r_pure))
    throw std::invalid_argument("precondition violated: exponential gauge radii");
  const double r = norm4(u);
  if (r >= r_blend) return identity_group();
  const int steps = std::max(4, static_cast<int>(std::ceil(r / h)) *
                                    substeps_per_h);
  const Group P = ray_transport(sample, center, u, steps);
  Group v = inverse(P);
  const RadialCutoff ramp{r_pure, r_blend};
  const double t = 1.0 - ramp.value(r);  // 1 inside r_pure, 0 at r_blend
  return t >= 1.0 ? v : slerp(identity_group(), v, t);
}

std::vector<Group> exponential_gauge(const Grid& g, double torus_len,
                                     const ConnectionSampler& sample,
                                     const Point& center, double r_pure,
                                     double r_blend, int substeps_per_h) {
  if (!(r_pure > 0.0) || !(r_blend > r_pure))
    throw std::invalid_argument("precondition violated: exponential gauge radii");
  std::vector<Group> out(static_cast<std::size_t>(g.nsites), identity_group());
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    const Point x = g.point(s);
    const Point u = torus_delta(x, center, torus_len);
    out[static_cast<std::size_t>(s)] =
        exponential_frame(sample, center, u, r_pure, r_blend, g.h,
                          substeps_per_h);
  }
  return out;
}

}  // namespace asdweld
