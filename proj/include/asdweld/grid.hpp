#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "asdweld/geometry.hpp"
#include "asdweld/su2.hpp"

namespace asdweld {

/** Uniform periodic n^4 grid over [0,L)^4. */
struct Grid {
  int n = 0;
  double L = 0.0;
  double h = 0.0;
  std::int64_t nsites = 0;

  Grid() = default;
  Grid(int n_, double L_) : n(n_), L(L_), h(L_ / n_), nsites(std::int64_t(n_) * n_ * n_ * n_) {}

  std::int64_t site(int i, int j, int k, int l) const {
    return ((std::int64_t(i) * n + j) * n + k) * n + l;
  }
  int wrap(int i) const {
    i %= n;
    return i < 0 ? i + n : i;
  }
  Point point(int i, int j, int k, int l) const { return {h * i, h * j, h * k, h * l}; }

  Point point(std::int64_t s) const {
    int i, j, k, l;
    coords(s, i, j, k, l);
    return point(i, j, k, l);
  }

  void coords(std::int64_t s, int& i, int& j, int& k, int& l) const {
    l = int(s % n);
    s /= n;
    k = int(s % n);
    s /= n;
    j = int(s % n);
    i = int(s / n);
  }

  bool operator==(const Grid& o) const { return n == o.n && L == o.L; }
};

/** ncomp Alg-valued components per site; site-major layout. */
struct Field {
  int ncomp = 0;
  std::int64_t nsites = 0;
  std::vector<double> v;

  Field() = default;
  Field(int ncomp_, std::int64_t nsites_) : ncomp(ncomp_), nsites(nsites_) {
    v.assign(std::size_t(ncomp) * 3 * nsites, 0.0);
  }

  std::size_t stride() const { return std::size_t(ncomp) * 3; }
  double* at(std::int64_t s) { return v.data() + std::size_t(s) * stride(); }
  const double* at(std::int64_t s) const { return v.data() + std::size_t(s) * stride(); }

  Alg get(std::int64_t s, int c) const {
    const double* p = at(s) + 3 * c;
    return {p[0], p[1], p[2]};
  }
  void set(std::int64_t s, int c, const Alg& a) {
    double* p = at(s) + 3 * c;
    p[0] = a.c[0];
    p[1] = a.c[1];
    p[2] = a.c[2];
  }
  void add(std::int64_t s, int c, const Alg& a) {
    double* p = at(s) + 3 * c;
    p[0] += a.c[0];
    p[1] += a.c[1];
    p[2] += a.c[2];
  }

  void fill_zero() { std::fill(v.begin(), v.end(), 0.0); }
};

inline Field zero_like(const Field& f) { return Field(f.ncomp, f.nsites); }

// y += s*x
inline void axpy(double s, const Field& x, Field& y) {
  const std::size_t m = x.v.size();
  for (std::size_t i = 0; i < m; ++i) y.v[i] += s * x.v[i];
}

inline void scale(double s, Field& x) {
  for (double& t : x.v) t *= s;
}

/** Deterministic chunked sum; independent of any future threading. */
double chunked_sum(const std::vector<double>& partial);

}  // namespace asdweld
