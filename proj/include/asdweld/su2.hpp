#pragma once

#include <array>
#include <cmath>

namespace asdweld {

inline constexpr double kSqrt2 = 1.4142135623730950488;

/** su(2) element as coefficients over an orthonormal basis.
 *
 * The basis {T_1,T_2,T_3} is orthonormal for <X,Y> = -tr(XY) on
 * anti-Hermitian traceless 2x2 matrices (T_a = -i sigma_a / sqrt(2)),
 * so |v| below is the matrix norm and [T_a,T_b] = sqrt(2) eps_abc T_c.
 */
struct Alg {
  double c[3] = {0.0, 0.0, 0.0};

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }

  Alg& operator+=(const Alg& o) {
    c[0] += o.c[0];
    c[1] += o.c[1];
    c[2] += o.c[2];
    return *this;
  }
  Alg& operator-=(const Alg& o) {
    c[0] -= o.c[0];
    c[1] -= o.c[1];
    c[2] -= o.c[2];
    return *this;
  }
  Alg& operator*=(double s) {
    c[0] *= s;
    c[1] *= s;
    c[2] *= s;
    return *this;
  }
};

inline Alg operator+(Alg a, const Alg& b) { return a += b; }
inline Alg operator-(Alg a, const Alg& b) { return a -= b; }
inline Alg operator*(double s, Alg a) { return a *= s; }
inline Alg operator*(Alg a, double s) { return a *= s; }
inline Alg operator-(const Alg& a) { return {-a.c[0], -a.c[1], -a.c[2]}; }

inline double dot(const Alg& a, const Alg& b) {
  return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2];
}

inline double norm(const Alg& a) { return std::sqrt(dot(a, a)); }

/** Lie bracket in coefficients: [u,v] = sqrt(2) u x v. */
inline Alg bracket(const Alg& u, const Alg& v) {
  return {kSqrt2 * (u.c[1] * v.c[2] - u.c[2] * v.c[1]),
          kSqrt2 * (u.c[2] * v.c[0] - u.c[0] * v.c[2]),
          kSqrt2 * (u.c[0] * v.c[1] - u.c[1] * v.c[0])};
}

/** -tr(XY); reduces to -dot in this basis. */
inline double trace_product(const Alg& a, const Alg& b) { return -dot(a, b); }

/** SU(2) element as a unit quaternion w + x i + y j + z k.
 *
 * Quaternion units map to -i sigma_a, so conjugation acts on Alg
 * coefficients by the usual quaternion rotation matrix.
 */
struct Group {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  Group() = default;
  Group(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  Group conjugate() const { return {w, -x, -y, -z}; }
  double norm2() const { return w * w + x * x + y * y + z * z; }

  Group& normalize() {
    const double s = 1.0 / std::sqrt(norm2());
    w *= s;
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
};

inline Group operator*(const Group& a, const Group& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Group inverse(const Group& g) { return g.conjugate(); }

/** Frobenius distance between the 2x2 matrices: sqrt(2) |q - q'|. */
inline double group_distance(const Group& a, const Group& b) {
  const double dw = a.w - b.w, dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return kSqrt2 * std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
}

/** Geodesic (great-circle) distance on SU(2), in [0, pi]. */
inline double geodesic_distance(const Group& a, const Group& b) {
  double c = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return std::acos(c);
}

/** Rotation matrix of Ad_g acting on Alg coefficients. */
inline std::array<double, 9> adjoint_matrix(const Group& g) {
  const double w = g.w, x = g.x, y = g.y, z = g.z;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

/** g X g^-1 in coefficients. */
inline Alg adjoint(const Group& g, const Alg& v) {
  const auto m = adjoint_matrix(g);
  return {m[0] * v.c[0] + m[1] * v.c[1] + m[2] * v.c[2],
          m[3] * v.c[0] + m[4] * v.c[1] + m[5] * v.c[2],
          m[6] * v.c[0] + m[7] * v.c[1] + m[8] * v.c[2]};
}

/** exp of v.T; the quaternion angle is |v|/sqrt(2). */
inline Group exp_alg(const Alg& v) {
  const double n = norm(v);
  const double th = n / kSqrt2;
  if (n < 1e-300) return {1.0, 0.0, 0.0, 0.0};
  // sin(th)/n is stable through th -> 0.
  const double s = (th < 1e-6) ? (1.0 / kSqrt2) * (1.0 - th * th / 6.0) : std::sin(th) / n;
  return {std::cos(th), s * v.c[0], s * v.c[1], s * v.c[2]};
}

/** Principal log, inverse of exp_alg on the angle range [0, pi). */
inline Alg log_group(const Group& g) {
  const double vn = std::sqrt(g.x * g.x + g.y * g.y + g.z * g.z);
  if (vn < 1e-300) return {};
  const double th = std::atan2(vn, g.w);
  const double s = kSqrt2 * th / vn;
  return {s * g.x, s * g.y, s * g.z};
}

/** Constant-speed geodesic from a to b; t in [0,1]. Shorter arc on S^3. */
inline Group slerp(const Group& a, const Group& b, double t) {
  const Group rel = inverse(a) * b;
  Alg v = log_group(rel);
  return a * exp_alg(t * v);
}

inline Group identity_group() { return {1.0, 0.0, 0.0, 0.0}; }

/** Central elements of SU(2). */
inline Group center_element(int sign) { return {sign >= 0 ? 1.0 : -1.0, 0.0, 0.0, 0.0}; }

}  // namespace asdweld
