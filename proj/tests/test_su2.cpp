#include <array>
#include <cmath>
#include <complex>

#include "asdweld/rng.hpp"
#include "asdweld/su2.hpp"
#include "doctest.h"

using namespace asdweld;

namespace {

using C = std::complex<double>;
using Mat = std::array<C, 4>;  // row major 2x2

Mat mul(const Mat& a, const Mat& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}
Mat add(const Mat& a, const Mat& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
Mat smul(C s, const Mat& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }
Mat dagger(const Mat& a) {
  return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}
C trace(const Mat& a) { return a[0] + a[3]; }

// Generators T_a = -i sigma_a / sqrt(2).
Mat generator(int a) {
  const C i(0.0, 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  switch (a) {
    case 0: return {C(0), -i * s, -i * s, C(0)};
    case 1: return {C(0), -s, s, C(0)};
    default: return {-i * s, C(0), C(0), i * s};
  }
}

Mat alg_matrix(const Alg& v) {
  Mat m{C(0), C(0), C(0), C(0)};
  for (int a = 0; a < 3; ++a) m = add(m, smul(v.c[a], generator(a)));
  return m;
}

Mat group_matrix(const Group& g) {
  const double s2 = std::sqrt(2.0);
  Mat m{C(g.w), C(0), C(0), C(g.w)};
  m = add(m, smul(g.x * s2, generator(0)));
  m = add(m, smul(g.y * s2, generator(1)));
  m = add(m, smul(g.z * s2, generator(2)));
  return m;
}

Alg coefficients(const Mat& m) {
  Alg out{};
  for (int a = 0; a < 3; ++a) out.c[a] = -trace(mul(m, generator(a))).real();
  return out;
}

// Scaling-and-squaring series exponential, independent of exp_alg.
Mat mat_exp(const Mat& m) {
  Mat x = smul(1.0 / 1024.0, m);
  Mat acc{C(1), C(0), C(0), C(1)};
  Mat term{C(1), C(0), C(0), C(1)};
  for (int k = 1; k <= 16; ++k) {
    term = smul(1.0 / k, mul(term, x));
    acc = add(acc, term);
  }
  for (int k = 0; k < 10; ++k) acc = mul(acc, acc);
  return acc;
}

double frob(const Mat& a) {
  double s = 0.0;
  for (const C& e : a) s += std::norm(e);
  return std::sqrt(s);
}

Alg random_alg(Rng& r, double amp) {
  return {r.uniform(-amp, amp), r.uniform(-amp, amp), r.uniform(-amp, amp)};
}

}  // namespace

TEST_CASE("generators are orthonormal under minus trace") {
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double ip = -trace(mul(generator(a), generator(b))).real();
      CHECK(ip == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-14));
    }
}

TEST_CASE("bracket matches the matrix commutator") {
  Rng rng(11, "su2.bracket");
  for (int trial = 0; trial < 50; ++trial) {
    const Alg u = random_alg(rng, 2.0), v = random_alg(rng, 2.0);
    const Mat comm = add(mul(alg_matrix(u), alg_matrix(v)),
                         smul(-1.0, mul(alg_matrix(v), alg_matrix(u))));
    const Alg got = bracket(u, v);
    const Alg want = coefficients(comm);
    for (int a = 0; a < 3; ++a) CHECK(got.c[a] == doctest::Approx(want.c[a]).epsilon(1e-12));
  }
  const Alg u = random_alg(rng, 2.0), v = random_alg(rng, 2.0), w = random_alg(rng, 2.0);
  const double lhs = dot(bracket(u, v), w);
  const double rhs = dot(v, bracket(w, u));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("trace product is minus the dot pairing") {
  Rng rng(12, "su2.trace");
  const Alg u = random_alg(rng, 3.0), v = random_alg(rng, 3.0);
  const double tr = trace(mul(alg_matrix(u), alg_matrix(v))).real();
  CHECK(trace_product(u, v) == doctest::Approx(tr).epsilon(1e-13));
  CHECK(trace_product(u, v) == doctest::Approx(-dot(u, v)).epsilon(1e-13));
}

TEST_CASE("exp_alg matches the series exponential") {
  Rng rng(13, "su2.exp");
  for (int trial = 0; trial < 30; ++trial) {
    const double amp = trial < 5 ? 1e-9 : 3.0;  // exercise the small-angle branch
    const Alg v = random_alg(rng, amp);
    const Mat want = mat_exp(alg_matrix(v));
    const Mat got = group_matrix(exp_alg(v));
    CHECK(frob(add(got, smul(-1.0, want))) < 1e-12);
  }
}

TEST_CASE("log inverts exp inside the principal ball") {
  Rng rng(14, "su2.log");
  for (int trial = 0; trial < 40; ++trial) {
    Alg v = random_alg(rng, 1.5);
    const Alg back = log_group(exp_alg(v));
    for (int a = 0; a < 3; ++a) CHECK(back.c[a] == doctest::Approx(v.c[a]).epsilon(1e-11));
  }
}

TEST_CASE("adjoint action is matrix conjugation") {
  Rng rng(15, "su2.adjoint");
  for (int trial = 0; trial < 30; ++trial) {
    const Group g = rng.group();
    const Alg v = random_alg(rng, 2.0);
    const Mat u = group_matrix(g);
    const Mat conj = mul(mul(u, alg_matrix(v)), dagger(u));
    const Alg want = coefficients(conj);
    const Alg got = adjoint(g, v);
    for (int a = 0; a < 3; ++a) CHECK(got.c[a] == doctest::Approx(want.c[a]).epsilon(1e-12));
    CHECK(norm(got) == doctest::Approx(norm(v)).epsilon(1e-12));
  }
  // Center elements act trivially in the adjoint.
  const Alg v = random_alg(rng, 2.0);
  const Alg w = adjoint(center_element(-1), v);
  for (int a = 0; a < 3; ++a) CHECK(w.c[a] == doctest::Approx(v.c[a]).epsilon(1e-15));
}

TEST_CASE("group element matrices are special unitary") {
  Rng rng(16, "su2.unitary");
  const Group g = rng.group();
  const Mat u = group_matrix(g);
  const Mat uu = mul(u, dagger(u));
  CHECK(frob(add(uu, smul(-1.0, Mat{C(1), C(0), C(0), C(1)}))) < 1e-13);
  const C det = u[0] * u[3] - u[1] * u[2];
  CHECK(std::abs(det - C(1)) < 1e-13);
}

TEST_CASE("group distance is the Frobenius matrix distance") {
  Rng rng(17, "su2.dist");
  const Group a = rng.group(), b = rng.group();
  const double f = frob(add(group_matrix(a), smul(-1.0, group_matrix(b))));
  CHECK(group_distance(a, b) == doctest::Approx(f).epsilon(1e-12));
  CHECK(group_distance(a, a) == 0.0);
}

TEST_CASE("slerp interpolates along the geodesic") {
  Rng rng(18, "su2.slerp");
  const Group a = rng.group(), b = rng.group();
  CHECK(group_distance(slerp(a, b, 0.0), a) < 1e-14);
  CHECK(group_distance(slerp(a, b, 1.0), b) < 1e-12);
  const Group mid = slerp(a, b, 0.5);
  CHECK(mid.norm2() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geodesic_distance(a, mid) == doctest::Approx(geodesic_distance(mid, b)).epsilon(1e-9));
  const double total = geodesic_distance(a, b);
  CHECK(geodesic_distance(a, mid) == doctest::Approx(0.5 * total).epsilon(1e-9));
}
