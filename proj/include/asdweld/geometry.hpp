#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace asdweld {

using Point = std::array<double, 4>;

/** Flat periodic box [0,L)^4 with two marked points. */
struct ChartSpec {
  double torus_size = 4.0;
  int resolution = 16;  // grid points per axis
  Point marked_left = {1.0, 2.0, 2.0, 2.0};
  Point marked_right = {3.0, 2.0, 2.0, 2.0};

  double spacing() const { return torus_size / resolution; }
};

/** Neck data: eta = lambda * reflect(xi) / |xi|^2 between paired balls. */
struct NeckParams {
  double k = 0.5;       // shell aspect, in (0, 0.925]
  double N = 2.0;       // conformal suppression parameter, > 1
  double lambda = 0.04; // neck scale
  int reflection_axis = 0;
  // Validation budget: lambda * N^q <= budget.
  int smallness_exponent = 4;
  double smallness_budget = 1.0;
};

/** r0 < r1 < r2 < r3; (r0,r1) inner shell, (r2,r3) outer shell. */
struct ShellRadii {
  double r0, r1, r2, r3;
};

inline ShellRadii shell_radii(const NeckParams& p) {
  const double s = std::sqrt(p.lambda);
  return {p.k / p.N * s, s / p.N, p.N * s, p.N / p.k * s};
}

/** Throws std::invalid_argument naming the violated precondition. */
void validate(const NeckParams& p);
void validate(const ChartSpec& c, const NeckParams& p);

/** Minimal-image difference a-b on the torus, each component in [-L/2, L/2). */
inline Point torus_delta(const Point& a, const Point& b, double L) {
  Point d;
  for (int i = 0; i < 4; ++i) {
    double t = a[i] - b[i];
    t -= L * std::floor(t / L + 0.5);
    d[i] = t;
  }
  return d;
}

inline double torus_distance(const Point& a, const Point& b, double L) {
  const Point d = torus_delta(a, b, L);
  return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
}

inline double norm4(const Point& d) {
  return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
}

/** Involution between paired neck annuli, in ball-centered offsets. */
inline Point neck_map(const Point& xi, const NeckParams& p) {
  const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2] + xi[3] * xi[3];
  const double s = p.lambda / r2;
  Point eta = {s * xi[0], s * xi[1], s * xi[2], s * xi[3]};
  eta[p.reflection_axis] = -eta[p.reflection_axis];
  return eta;
}

/** d(eta)/d(xi) = (lambda/|xi|^2) * R (I - 2 n n^T); conformal, det > 0. */
inline std::array<double, 16> neck_jacobian(const Point& xi, const NeckParams& p) {
  const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2] + xi[3] * xi[3];
  const double c = p.lambda / r2;
  std::array<double, 16> J;
  for (int a = 0; a < 4; ++a) {
    const double ra = (a == p.reflection_axis) ? -1.0 : 1.0;
    for (int b = 0; b < 4; ++b) {
      const double refl = (a == b) ? ra : 0.0;
      J[4 * a + b] = c * (refl - 2.0 * (ra * xi[a]) * xi[b] / r2);
    }
  }
  return J;
}

/** Operator norm of the neck Jacobian: lambda / |xi|^2. */
inline double neck_jacobian_norm(const Point& xi, const NeckParams& p) {
  const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2] + xi[3] * xi[3];
  return p.lambda / r2;
}

/** Cubic smoothstep ramp: 0 below r0, 1 above r1, max slope 1.5/(r1-r0). */
struct RadialCutoff {
  double r0 = 0.0, r1 = 1.0;

  double value(double r) const {
    if (r <= r0) return 0.0;
    if (r >= r1) return 1.0;
    const double t = (r - r0) / (r1 - r0);
    return t * t * (3.0 - 2.0 * t);
  }
  double slope(double r) const {
    if (r <= r0 || r >= r1) return 0.0;
    const double t = (r - r0) / (r1 - r0);
    return 6.0 * t * (1.0 - t) / (r1 - r0);
  }
};

/** Ramp of the partner cutoff seen through the neck: 1 inside r2, 0 outside r3. */
struct TransportedCutoff {
  double r0, r1, lambda;

  double value(double r) const {
    if (r <= 0.0) return 1.0;
    const RadialCutoff c{r0, r1};
    return c.value(lambda / r);
  }
};

enum class Zone : std::uint8_t { Core, InnerShell, Middle, OuterShell, Outside };

inline Zone classify_radius(double r, const ShellRadii& s) {
  if (r <= s.r0) return Zone::Core;
  if (r < s.r1) return Zone::InnerShell;
  if (r < s.r2) return Zone::Middle;
  if (r < s.r3) return Zone::OuterShell;
  return Zone::Outside;
}

/** Both neck systems of a chart at once. */
struct Region {
  Zone left;
  Zone right;
  bool in_U;  // outside both excised balls
};

inline Region classify_point(const Point& x, const ChartSpec& chart, const NeckParams& p) {
  const ShellRadii s = shell_radii(p);
  const double dl = torus_distance(x, chart.marked_left, chart.torus_size);
  const double dr = torus_distance(x, chart.marked_right, chart.torus_size);
  const Zone zl = classify_radius(dl, s);
  const Zone zr = classify_radius(dr, s);
  return {zl, zr, zl != Zone::Core && zr != Zone::Core};
}

std::string zone_name(Zone z);

}  // namespace asdweld
