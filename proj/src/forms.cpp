#include "asdweld/forms.hpp"

#include <cmath>
#include <stdexcept>

namespace asdweld {

namespace {

constexpr std::int64_t kChunk = 4096;

struct WrapTables {
  std::vector<int> up, dn;
  explicit WrapTables(int n) : up(n), dn(n) {
    for (int i = 0; i < n; ++i) {
      up[i] = (i + 1) % n;
      dn[i] = (i + n - 1) % n;
    }
  }
};

inline void check_comp(const Field& f, int ncomp, const char* what) {
  if (f.ncomp != ncomp) throw std::invalid_argument(std::string(what) + ": wrong component count");
}

}  // namespace

double chunked_sum(const std::vector<double>& partial) {
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

Field hodge_star(const Field& w) {
  check_comp(w, 6, "hodge_star");
  Field out(6, w.nsites);
  for (std::int64_t s = 0; s < w.nsites; ++s) {
    for (int c = 0; c < 6; ++c) out.set(s, c, kStarSign[c] * w.get(s, kStarPair[c]));
  }
  return out;
}

Field p_plus(const Field& w) {
  check_comp(w, 6, "p_plus");
  Field out(3, w.nsites);
  for (std::int64_t s = 0; s < w.nsites; ++s) {
    // (01+23)/2, (02-13)/2, (03+12)/2
    out.set(s, 0, 0.5 * (w.get(s, 0) + w.get(s, 5)));
    out.set(s, 1, 0.5 * (w.get(s, 1) - w.get(s, 4)));
    out.set(s, 2, 0.5 * (w.get(s, 2) + w.get(s, 3)));
  }
  return out;
}

Field p_minus(const Field& w) {
  check_comp(w, 6, "p_minus");
  Field out(3, w.nsites);
  for (std::int64_t s = 0; s < w.nsites; ++s) {
    out.set(s, 0, 0.5 * (w.get(s, 0) - w.get(s, 5)));
    out.set(s, 1, 0.5 * (w.get(s, 1) + w.get(s, 4)));
    out.set(s, 2, 0.5 * (w.get(s, 2) - w.get(s, 3)));
  }
  return out;
}

Field embed_sd(const Field& sd) {
  check_comp(sd, 3, "embed_sd");
  Field out(6, sd.nsites);
  for (std::int64_t s = 0; s < sd.nsites; ++s) {
    const Alg a = sd.get(s, 0), b = sd.get(s, 1), c = sd.get(s, 2);
    out.set(s, 0, a);
    out.set(s, 5, a);
    out.set(s, 1, b);
    out.set(s, 4, -b);
    out.set(s, 2, c);
    out.set(s, 3, c);
  }
  return out;
}

Field embed_asd(const Field& asd) {
  check_comp(asd, 3, "embed_asd");
  Field out(6, asd.nsites);
  for (std::int64_t s = 0; s < asd.nsites; ++s) {
    const Alg a = asd.get(s, 0), b = asd.get(s, 1), c = asd.get(s, 2);
    out.set(s, 0, a);
    out.set(s, 5, -a);
    out.set(s, 1, b);
    out.set(s, 4, b);
    out.set(s, 2, c);
    out.set(s, 3, -c);
  }
  return out;
}

Field bracket_wedge_11(const Field& a, const Field& b) {
  check_comp(a, 4, "bracket_wedge_11");
  check_comp(b, 4, "bracket_wedge_11");
  Field out(6, a.nsites);
  for (std::int64_t s = 0; s < a.nsites; ++s) {
    for (int c = 0; c < 6; ++c) {
      const int u = kPair[c][0], v = kPair[c][1];
      out.set(s, c, bracket(a.get(s, u), b.get(s, v)) - bracket(a.get(s, v), b.get(s, u)));
    }
  }
  return out;
}

Field quad_wedge(const Field& b) {
  check_comp(b, 4, "quad_wedge");
  Field out(6, b.nsites);
  for (std::int64_t s = 0; s < b.nsites; ++s) {
    for (int c = 0; c < 6; ++c) {
      const int u = kPair[c][0], v = kPair[c][1];
      out.set(s, c, bracket(b.get(s, u), b.get(s, v)));
    }
  }
  return out;
}

Field bracket_wedge_01(const Field& s0, const Field& a) {
  check_comp(s0, 1, "bracket_wedge_01");
  check_comp(a, 4, "bracket_wedge_01");
  Field out(4, a.nsites);
  for (std::int64_t s = 0; s < a.nsites; ++s) {
    const Alg v = s0.get(s, 0);
    for (int c = 0; c < 4; ++c) out.set(s, c, bracket(v, a.get(s, c)));
  }
  return out;
}

Field wedge_plus_11(const Field& a, const Field& b) {
  check_comp(a, 4, "wedge_plus_11");
  check_comp(b, 4, "wedge_plus_11");
  Field out(3, a.nsites);
  for (std::int64_t s = 0; s < a.nsites; ++s) {
    Alg w[6];
    for (int c = 0; c < 6; ++c) {
      const int u = kPair[c][0], v = kPair[c][1];
      w[c] = bracket(a.get(s, u), b.get(s, v)) - bracket(a.get(s, v), b.get(s, u));
    }
    out.set(s, 0, 0.5 * (w[0] + w[5]));
    out.set(s, 1, 0.5 * (w[1] - w[4]));
    out.set(s, 2, 0.5 * (w[2] + w[3]));
  }
  return out;
}

Field quad_wedge_plus(const Field& b) {
  check_comp(b, 4, "quad_wedge_plus");
  Field out(3, b.nsites);
  for (std::int64_t s = 0; s < b.nsites; ++s) {
    Alg w[6];
    for (int c = 0; c < 6; ++c) {
      const int u = kPair[c][0], v = kPair[c][1];
      w[c] = bracket(b.get(s, u), b.get(s, v));
    }
    out.set(s, 0, 0.5 * (w[0] + w[5]));
    out.set(s, 1, 0.5 * (w[1] - w[4]));
    out.set(s, 2, 0.5 * (w[2] + w[3]));
  }
  return out;
}

namespace {

/** Runs fn(site, np, nm) with the 4 up/down neighbor sites. */
template <class Fn>
void stencil_sweep(const Grid& g, Fn&& fn) {
  const int n = g.n;
  WrapTables t(n);
  const std::int64_t s0 = std::int64_t(n) * n * n, s1 = std::int64_t(n) * n, s2 = n;
  std::int64_t s = 0;
  for (int i = 0; i < n; ++i) {
    const std::int64_t di_up = (std::int64_t(t.up[i]) - i) * s0;
    const std::int64_t di_dn = (std::int64_t(t.dn[i]) - i) * s0;
    for (int j = 0; j < n; ++j) {
      const std::int64_t dj_up = (std::int64_t(t.up[j]) - j) * s1;
      const std::int64_t dj_dn = (std::int64_t(t.dn[j]) - j) * s1;
      for (int k = 0; k < n; ++k) {
        const std::int64_t dk_up = (std::int64_t(t.up[k]) - k) * s2;
        const std::int64_t dk_dn = (std::int64_t(t.dn[k]) - k) * s2;
        for (int l = 0; l < n; ++l, ++s) {
          const std::int64_t np[4] = {s + di_up, s + dj_up, s + dk_up,
                                      s + (std::int64_t(t.up[l]) - l)};
          const std::int64_t nm[4] = {s + di_dn, s + dj_dn, s + dk_dn,
                                      s + (std::int64_t(t.dn[l]) - l)};
          fn(s, np, nm);
        }
      }
    }
  }
}

}  // namespace

Field cov_d0(const Grid& g, const Field* B, const Field& f) {
  check_comp(f, 1, "cov_d0");
  Field out(4, f.nsites);
  const double inv2h = 1.0 / (2.0 * g.h);
  stencil_sweep(g, [&](std::int64_t s, const std::int64_t* np, const std::int64_t* nm) {
    for (int mu = 0; mu < 4; ++mu) {
      Alg d = inv2h * (f.get(np[mu], 0) - f.get(nm[mu], 0));
      if (B) d += bracket(B->get(s, mu), f.get(s, 0));
      out.set(s, mu, d);
    }
  });
  return out;
}

Field cov_d1(const Grid& g, const Field* B, const Field& b) {
  check_comp(b, 4, "cov_d1");
  Field out(6, b.nsites);
  const double inv2h = 1.0 / (2.0 * g.h);
  stencil_sweep(g, [&](std::int64_t s, const std::int64_t* np, const std::int64_t* nm) {
    Alg grad[4][4];  // grad[mu][nu] = D_mu b_nu (+ ad)
    for (int mu = 0; mu < 4; ++mu) {
      for (int nu = 0; nu < 4; ++nu) {
        grad[mu][nu] = inv2h * (b.get(np[mu], nu) - b.get(nm[mu], nu));
        if (B) grad[mu][nu] += bracket(B->get(s, mu), b.get(s, nu));
      }
    }
    for (int c = 0; c < 6; ++c) {
      const int u = kPair[c][0], v = kPair[c][1];
      out.set(s, c, grad[u][v] - grad[v][u]);
    }
  });
  return out;
}

Field cov_dplus(const Grid& g, const Field* B, const Field& b) {
  check_comp(b, 4, "cov_dplus");
  Field out(3, b.nsites);
  const double inv2h = 1.0 / (2.0 * g.h);
  stencil_sweep(g, [&](std::int64_t s, const std::int64_t* np, const std::int64_t* nm) {
    Alg grad[4][4];
    for (int mu = 0; mu < 4; ++mu) {
      for (int nu = 0; nu < 4; ++nu) {
        grad[mu][nu] = inv2h * (b.get(np[mu], nu) - b.get(nm[mu], nu));
        if (B) grad[mu][nu] += bracket(B->get(s, mu), b.get(s, nu));
      }
    }
    Alg w[6];
    for (int c = 0; c < 6; ++c) {
      const int u = kPair[c][0], v = kPair[c][1];
      w[c] = grad[u][v] - grad[v][u];
    }
    out.set(s, 0, 0.5 * (w[0] + w[5]));
    out.set(s, 1, 0.5 * (w[1] - w[4]));
    out.set(s, 2, 0.5 * (w[2] + w[3]));
  });
  return out;
}

Field cov_dstar1(const Grid& g, const Field* B, const Field& b) {
  check_comp(b, 4, "cov_dstar1");
  Field out(1, b.nsites);
  const double inv2h = 1.0 / (2.0 * g.h);
  stencil_sweep(g, [&](std::int64_t s, const std::int64_t* np, const std::int64_t* nm) {
    Alg acc{};
    for (int mu = 0; mu < 4; ++mu) {
      acc += inv2h * (b.get(np[mu], mu) - b.get(nm[mu], mu));
      if (B) acc += bracket(B->get(s, mu), b.get(s, mu));
    }
    out.set(s, 0, -acc);
  });
  return out;
}

Field dplus_transpose(const Grid& g, const Field* B, const Field& sd) {
  check_comp(sd, 3, "dplus_transpose");
  // w = embed_sd(sd); out_nu = -sum_mu (D_mu w_{mu nu} + [B_mu, w_{mu nu}]).
  const Field w = embed_sd(sd);
  Field out(4, sd.nsites);
  const double inv2h = 1.0 / (2.0 * g.h);
  // pair component for (mu,nu), with sign for orientation mu<nu storage
  static constexpr int pc[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  static constexpr double ps[4][4] = {
      {0, 1, 1, 1}, {-1, 0, 1, 1}, {-1, -1, 0, 1}, {-1, -1, -1, 0}};
  stencil_sweep(g, [&](std::int64_t s, const std::int64_t* np, const std::int64_t* nm) {
    for (int nu = 0; nu < 4; ++nu) {
      Alg acc{};
      for (int mu = 0; mu < 4; ++mu) {
        if (mu == nu) continue;
        const int c = pc[mu][nu];
        const double sg = ps[mu][nu];
        acc += (sg * inv2h) * (w.get(np[mu], c) - w.get(nm[mu], c));
        if (B) acc += bracket(B->get(s, mu), sg * w.get(s, c));
      }
      out.set(s, nu, -acc);
    }
  });
  return out;
}

Field cov_d2(const Grid& g, const Field* B, const Field& w) {
  check_comp(w, 6, "cov_d2");
  // Components 012, 013, 023, 123: (dw)_{abc} = grad_a w_bc - grad_b w_ac + grad_c w_ab.
  static constexpr int triples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  static constexpr int pc[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  static constexpr double ps[4][4] = {
      {0, 1, 1, 1}, {-1, 0, 1, 1}, {-1, -1, 0, 1}, {-1, -1, -1, 0}};
  Field out(4, w.nsites);
  const double inv2h = 1.0 / (2.0 * g.h);
  auto comp = [&](const Field& f, std::int64_t s, int a, int b) {
    return ps[a][b] * f.get(s, pc[a][b]);
  };
  stencil_sweep(g, [&](std::int64_t s, const std::int64_t* np, const std::int64_t* nm) {
    for (int t = 0; t < 4; ++t) {
      const int a = triples[t][0], b = triples[t][1], c = triples[t][2];
      Alg acc = inv2h * (comp(w, np[a], b, c) - comp(w, nm[a], b, c));
      acc -= inv2h * (comp(w, np[b], a, c) - comp(w, nm[b], a, c));
      acc += inv2h * (comp(w, np[c], a, b) - comp(w, nm[c], a, b));
      if (B) {
        acc += bracket(B->get(s, a), comp(w, s, b, c));
        acc -= bracket(B->get(s, b), comp(w, s, a, c));
        acc += bracket(B->get(s, c), comp(w, s, a, b));
      }
      out.set(s, t, acc);
    }
  });
  return out;
}

double pointwise_norm2(const Field& f, std::int64_t s, double comp_weight) {
  const double* p = f.at(s);
  double acc = 0.0;
  const int m = f.ncomp * 3;
  for (int i = 0; i < m; ++i) acc += p[i] * p[i];
  return comp_weight * acc;
}

double inner_product(const Grid& g, const Field& x, const Field& y, double comp_weight) {
  const std::size_t m = x.v.size();
  std::vector<double> partial;
  partial.reserve(m / (kChunk * x.stride()) + 1);
  const std::size_t step = std::size_t(kChunk) * x.stride();
  for (std::size_t base = 0; base < m; base += step) {
    const std::size_t end = std::min(m, base + step);
    double acc = 0.0;
    for (std::size_t i = base; i < end; ++i) acc += x.v[i] * y.v[i];
    partial.push_back(acc);
  }
  const double h4 = g.h * g.h * g.h * g.h;
  return comp_weight * h4 * chunked_sum(partial);
}

double norm_linf(const Field& f, double comp_weight) {
  double best = 0.0;
  for (std::int64_t s = 0; s < f.nsites; ++s) best = std::max(best, pointwise_norm2(f, s, comp_weight));
  return std::sqrt(best);
}

double norm_l2(const Grid& g, const Field& f, double comp_weight) {
  return std::sqrt(inner_product(g, f, f, comp_weight));
}

double norm_lp(const Grid& g, const Field& f, double p, double comp_weight) {
  if (!(p >= 1.0)) throw std::invalid_argument("norm_lp: p must be >= 1");
  std::vector<double> partial;
  double acc = 0.0;
  for (std::int64_t s = 0; s < f.nsites; ++s) {
    acc += std::pow(pointwise_norm2(f, s, comp_weight), 0.5 * p);
    if ((s + 1) % kChunk == 0) {
      partial.push_back(acc);
      acc = 0.0;
    }
  }
  partial.push_back(acc);
  const double h4 = g.h * g.h * g.h * g.h;
  return std::pow(h4 * chunked_sum(partial), 1.0 / p);
}

double norm_lp_masked(const Grid& g, const Field& f, double p, double comp_weight,
                      const std::vector<std::uint8_t>& mask) {
  return std::pow(mass_lp_masked(g, f, p, comp_weight, mask), 1.0 / p);
}

double mass_lp_masked(const Grid& g, const Field& f, double p, double comp_weight,
                      const std::vector<std::uint8_t>& mask) {
  if (!(p >= 1.0)) throw std::invalid_argument("mass_lp_masked: p must be >= 1");
  std::vector<double> partial;
  double acc = 0.0;
  for (std::int64_t s = 0; s < f.nsites; ++s) {
    if (mask[std::size_t(s)])
      acc += std::pow(pointwise_norm2(f, s, comp_weight), 0.5 * p);
    if ((s + 1) % kChunk == 0) {
      partial.push_back(acc);
      acc = 0.0;
    }
  }
  partial.push_back(acc);
  const double h4 = g.h * g.h * g.h * g.h;
  return h4 * chunked_sum(partial);
}

double norm_linf_masked(const Field& f, double comp_weight,
                        const std::vector<std::uint8_t>& mask) {
  double best = 0.0;
  for (std::int64_t s = 0; s < f.nsites; ++s) {
    if (mask[std::size_t(s)]) best = std::max(best, pointwise_norm2(f, s, comp_weight));
  }
  return std::sqrt(best);
}

double norm_lp1(const Grid& g, const Field* B, const Field& f, double p, double comp_weight) {
  if (!(p >= 1.0)) throw std::invalid_argument("norm_lp1: p must be >= 1");
  const double inv2h = 1.0 / (2.0 * g.h);
  std::vector<double> pf, pg;
  double af = 0.0, ag = 0.0;
  stencil_sweep(g, [&](std::int64_t s, const std::int64_t* np, const std::int64_t* nm) {
    double g2 = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
      for (int c = 0; c < f.ncomp; ++c) {
        Alg d = inv2h * (f.get(np[mu], c) - f.get(nm[mu], c));
        if (B) d += bracket(B->get(s, mu), f.get(s, c));
        g2 += dot(d, d);
      }
    }
    af += std::pow(pointwise_norm2(f, s, comp_weight), 0.5 * p);
    ag += std::pow(comp_weight * g2, 0.5 * p);
    if ((s + 1) % kChunk == 0) {
      pf.push_back(af);
      pg.push_back(ag);
      af = ag = 0.0;
    }
  });
  pf.push_back(af);
  pg.push_back(ag);
  const double h4 = g.h * g.h * g.h * g.h;
  return std::pow(h4 * chunked_sum(pf), 1.0 / p) + std::pow(h4 * chunked_sum(pg), 1.0 / p);
}

void pullback_1form_value(const std::array<double, 16>& jac, const Alg* in,
                          Alg* out) {
  for (int a = 0; a < 4; ++a) {
    Alg acc{};
    for (int m = 0; m < 4; ++m) acc += jac[4 * m + a] * in[m];
    out[a] = acc;
  }
}

void pullback_2form_value(const std::array<double, 16>& jac, const Alg* in,
                          Alg* out) {
  for (int p = 0; p < 6; ++p) {
    const int a = kPair[p][0], b = kPair[p][1];
    Alg acc{};
    for (int q = 0; q < 6; ++q) {
      const int m = kPair[q][0], n = kPair[q][1];
      const double c =
          jac[4 * m + a] * jac[4 * n + b] - jac[4 * m + b] * jac[4 * n + a];
      acc += c * in[q];
    }
    out[p] = acc;
  }
}

}  // namespace asdweld
