#include <cmath>

#include "asdweld/forms.hpp"
#include "asdweld/grid.hpp"
#include "asdweld/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace asdweld;
using testutil::random_field;
using testutil::smooth_field;

namespace {
Grid small_grid(int n = 8, double L = 4.0) {
  Grid g;
  g.n = n;
  g.L = L;
  g.h = L / n;
  g.nsites = std::int64_t(n) * n * n * n;
  return g;
}
}  // namespace

TEST_CASE("hodge star squares to the identity on two forms") {
  Grid g = small_grid(4);
  Rng rng(31, "forms.star");
  const Field w = random_field(g, 6, rng);
  const Field ww = hodge_star(hodge_star(w));
  for (std::size_t i = 0; i < w.v.size(); ++i) CHECK(ww.v[i] == w.v[i]);
}

TEST_CASE("self dual projection is an orthogonal idempotent") {
  Grid g = small_grid(4);
  Rng rng(32, "forms.pplus");
  const Field w = random_field(g, 6, rng);
  const Field sd = p_plus(w), asd = p_minus(w);
  const Field esd = embed_sd(sd), easd = embed_asd(asd);

  // embed(P+) + embed(P-) reconstructs the form.
  for (std::size_t i = 0; i < w.v.size(); ++i)
    CHECK(esd.v[i] + easd.v[i] == doctest::Approx(w.v[i]).epsilon(1e-14));

  // P+ fixes self dual parts: P+(embed(P+ w)) = P+ w.
  const Field again = p_plus(esd);
  for (std::size_t i = 0; i < sd.v.size(); ++i)
    CHECK(again.v[i] == doctest::Approx(sd.v[i]).epsilon(1e-14));

  // star acts as +1 on the embedded sd part and -1 on the asd part.
  const Field ssd = hodge_star(esd);
  for (std::size_t i = 0; i < esd.v.size(); ++i)
    CHECK(ssd.v[i] == doctest::Approx(esd.v[i]).epsilon(1e-14));

  // Orthogonality and the norm split, with sd weight two.
  const double full = inner_product(g, w, w, 1.0);
  const double plus = inner_product(g, sd, sd, 2.0);
  const double minus = inner_product(g, asd, asd, 2.0);
  CHECK(full == doctest::Approx(plus + minus).epsilon(1e-12));
  CHECK(inner_product(g, esd, easd, 1.0) == doctest::Approx(0.0).scale(full).epsilon(1e-13));
}

TEST_CASE("wedge brackets match their definitions pointwise") {
  Grid g = small_grid(4);
  Rng rng(33, "forms.wedge");
  const Field a = random_field(g, 4, rng), b = random_field(g, 4, rng);
  const Field w = bracket_wedge_11(a, b);
  const Field q = quad_wedge(b);
  const Field bb = bracket_wedge_11(b, b);
  const std::int64_t probe = g.site(1, 2, 3, 0);
  for (int p = 0; p < 6; ++p) {
    const int mu = kPair[p][0], nu = kPair[p][1];
    const Alg want =
        bracket(a.get(probe, mu), b.get(probe, nu)) - bracket(a.get(probe, nu), b.get(probe, mu));
    const Alg got = w.get(probe, p);
    for (int c = 0; c < 3; ++c) CHECK(got.c[c] == doctest::Approx(want.c[c]).epsilon(1e-13));
    // (b^b) = half the graded self wedge.
    for (int c = 0; c < 3; ++c)
      CHECK(q.get(probe, p).c[c] == doctest::Approx(0.5 * bb.get(probe, p).c[c]).epsilon(1e-13));
  }
  // Fused projections agree with the two-step path.
  const Field f1 = wedge_plus_11(a, b), f2 = p_plus(bracket_wedge_11(a, b));
  for (std::size_t i = 0; i < f1.v.size(); ++i)
    CHECK(f1.v[i] == doctest::Approx(f2.v[i]).epsilon(1e-13));
  const Field g1 = quad_wedge_plus(b), g2 = p_plus(quad_wedge(b));
  for (std::size_t i = 0; i < g1.v.size(); ++i)
    CHECK(g1.v[i] == doctest::Approx(g2.v[i]).epsilon(1e-13));
}

TEST_CASE("covariant derivative pairs are exact discrete adjoints") {
  Grid g = small_grid(6);
  Rng rng(34, "forms.adjoint");
  Field B = random_field(g, 4, rng, 0.7);

  const Field s = random_field(g, 1, rng);
  const Field b = random_field(g, 4, rng);
  const double lhs0 = inner_product(g, cov_d0(g, &B, s), b, 1.0);
  const double rhs0 = inner_product(g, s, cov_dstar1(g, &B, b), 1.0);
  CHECK(lhs0 == doctest::Approx(rhs0).epsilon(1e-12));

  const Field sd = random_field(g, 3, rng);
  const double lhsp = inner_product(g, cov_dplus(g, &B, b), sd, 2.0);
  const double rhsp = inner_product(g, b, dplus_transpose(g, &B, sd), 1.0);
  CHECK(lhsp == doctest::Approx(rhsp).epsilon(1e-12));

  // Without background as well (pure finite differences).
  const double l2 = inner_product(g, cov_dplus(g, nullptr, b), sd, 2.0);
  const double r2 = inner_product(g, b, dplus_transpose(g, nullptr, sd), 1.0);
  CHECK(l2 == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("flat exterior derivative composes to zero") {
  Grid g = small_grid(6);
  Rng rng(35, "forms.dd");
  const Field s = random_field(g, 1, rng);
  const Field dds = cov_d1(g, nullptr, cov_d0(g, nullptr, s));
  CHECK(norm_linf(dds, 1.0) < 1e-13);
}

TEST_CASE("covariant derivative converges at second order") {
  double err[2];
  int idx = 0;
  for (int n : {8, 16}) {
    Grid g = small_grid(n);
    Rng rng(37, "forms.order.inner");  // same modes on both grids
    const Field b = smooth_field(g, 4, rng, 2, 1.0);
    const Field db = cov_d1(g, nullptr, b);
    // Compare against a spectral reference: rebuild with the same rng on a
    // fine grid is awkward here, so use Richardson against the halved step.
    Grid g2 = small_grid(2 * n);
    Rng rng2(37, "forms.order.inner");
    const Field b2 = smooth_field(g2, 4, rng2, 2, 1.0);
    const Field db2 = cov_d1(g2, nullptr, b2);
    // Evaluate both on the coarse sites.
    double worst = 0.0;
    for (std::int64_t s = 0; s < g.nsites; ++s) {
      int i, j, k, l;
      g.coords(s, i, j, k, l);
      const std::int64_t s2 = g2.site(2 * i, 2 * j, 2 * k, 2 * l);
      for (int c = 0; c < 6; ++c) {
        const Alg d = db.get(s, c) - db2.get(s2, c);
        worst = std::max(worst, norm(d));
      }
    }
    err[idx++] = worst;
  }
  const double ratio = err[0] / err[1];
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.2);
}

TEST_CASE("norms are deterministic and scale correctly") {
  Grid g = small_grid(6);
  Rng rng(38, "forms.norms");
  Field f = random_field(g, 3, rng);
  const double n2 = norm_l2(g, f, 2.0);
  const double np = norm_lp(g, f, 2.0, 2.0);
  CHECK(n2 == doctest::Approx(np).epsilon(1e-12));
  const double before = norm_lp(g, f, 4.0, 2.0);
  scale(2.0, f);
  CHECK(norm_lp(g, f, 4.0, 2.0) == doctest::Approx(2.0 * before).epsilon(1e-12));
  CHECK(norm_linf(f, 1.0) > 0.0);

  std::vector<std::uint8_t> mask(std::size_t(g.nsites), 0);
  for (std::int64_t s = 0; s < g.nsites; ++s) mask[std::size_t(s)] = s % 3 == 0;
  const double whole = mass_lp_masked(g, f, 2.0, 2.0, std::vector<std::uint8_t>(std::size_t(g.nsites), 1));
  CHECK(whole == doctest::Approx(norm_l2(g, f, 2.0) * norm_l2(g, f, 2.0)).epsilon(1e-12));
  CHECK(mass_lp_masked(g, f, 2.0, 2.0, mask) < whole);
}

TEST_CASE("sobolev style norm adds the covariant gradient term") {
  Grid g = small_grid(6);
  Rng rng(39, "forms.lp1");
  Field B = random_field(g, 4, rng, 0.3);
  const Field f = random_field(g, 4, rng);
  const double plain = norm_lp(g, f, 2.0, 1.0);
  const double sob = norm_lp1(g, &B, f, 2.0, 1.0);
  CHECK(sob > plain);
}

TEST_CASE("two form pullback through the neck preserves the conformal density") {
  // In four dimensions the pointwise 2-form density |w|^2 dV is conformally
  // invariant, so pulling back through the neck inversion must multiply the
  // squared values by exactly det J = (lambda/|xi|^2)^4. This is what makes
  // curvature mass transportable between paired annuli without correction.
  NeckParams p;
  Rng rng(83, "forms.neck");
  for (int trial = 0; trial < 32; ++trial) {
    Point xi;
    double r2 = 0.0;
    do {
      r2 = 0.0;
      for (int i = 0; i < 4; ++i) {
        xi[i] = rng.uniform(-0.8, 0.8);
        r2 += xi[i] * xi[i];
      }
    } while (r2 < 0.01);
    const auto jac = neck_jacobian(xi, p);
    Alg in[6], out[6];
    for (int k = 0; k < 6; ++k)
      for (int i = 0; i < 3; ++i) in[k][i] = rng.gaussian();
    pullback_2form_value(jac, in, out);
    double before = 0.0, after = 0.0;
    for (int k = 0; k < 6; ++k)
      for (int i = 0; i < 3; ++i) {
        before += in[k][i] * in[k][i];
        after += out[k][i] * out[k][i];
      }
    const double c = p.lambda / r2;
    CHECK(after == doctest::Approx(c * c * c * c * before).epsilon(1e-12));
  }
}
