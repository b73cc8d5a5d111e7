#include "asdweld/moduli.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

#include "asdweld/forms.hpp"

namespace asdweld {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Scalar error recurrence
// ---------------------------------------------------------------------------

void validate(const RecurrenceInputs& in) {
  if (!(in.eps >= 0.0)) fail("recurrence eps must be nonnegative");
  if (!(in.eps <= 0.01)) fail("recurrence eps must not exceed 1/100");
  if (!(in.K > 0.0)) fail("recurrence K must be positive");
  if (!(in.alpha0 >= 0.0)) fail("recurrence alpha0 must be nonnegative");
  if (!(in.alpha0 <= in.eps * in.K))
    fail("recurrence alpha0 must not exceed eps*K");
  if (!(in.s0 >= 0.0)) fail("recurrence s0 must be nonnegative");
  if (!(in.s0 <= in.K)) fail("recurrence s0 must not exceed K");
}

RecurrenceResult recurrence_verify(const RecurrenceInputs& in, Rng* slack) {
  validate(in);
  RecurrenceResult res;
  res.bound = 10.0 * in.eps * in.K;
  double alpha = in.alpha0, s = in.s0, pw = 1.0;
  res.sup_alpha = alpha;
  const double scale = std::max({in.eps * in.K, in.alpha0, 1e-300});
  int quiet = 0;
  for (int n = 0; n < 500; ++n) {
    double ga = s, gb = pw * alpha, gc = pw * in.K;
    double ha = 0.5 * s, hb = pw * alpha, hc = 0.5 * pw * in.K;
    if (slack) {
      // Each gain term damped independently: the equality run is a pointwise
      // upper envelope of every admissible sequence, so any damping stays
      // admissible; sampling exercises the interior of that family.
      ga *= slack->uniform(0.0, 1.0);
      gb *= slack->uniform(0.0, 1.0);
      gc *= slack->uniform(0.0, 1.0);
      ha *= slack->uniform(0.0, 1.0);
      hb *= slack->uniform(0.0, 1.0);
      hc *= slack->uniform(0.0, 1.0);
    }
    const double inc = in.eps * (ga + gb + gc);
    alpha += inc;
    s = ha + hb + hc;
    pw *= 0.5;
    res.sup_alpha = std::max(res.sup_alpha, alpha);
    res.steps = n + 1;
    quiet = inc <= 1e-17 * std::max(alpha, scale) ? quiet + 1 : 0;
    if (quiet >= 3) break;
  }
  res.pass = res.sup_alpha <= res.bound;
  return res;
}

std::pair<double, double> worst_case_budget(double eps, double K) {
  return {eps * K * (6.0 + 60.0 * eps), 7.0 * eps * K};
}

// ---------------------------------------------------------------------------
// Geodesics in the gluing parameter
// ---------------------------------------------------------------------------

GluingParameter ParameterPath::at(double t) const {
  GluingParameter out = start;
  for (std::size_t i = 0; i < velocity.size(); ++i)
    out.rho[i] = start.rho[i] * exp_alg(t * velocity[i]);
  return out;
}

double ParameterPath::speed(int neck) const {
  return norm(velocity[static_cast<std::size_t>(neck)]);
}

ParameterPath geodesic_path(const GluingParameter& rho,
                            const GluingParameter& rho2) {
  if (rho.rho.size() != rho2.rho.size())
    fail("geodesic endpoints must carry the same neck count");
  ParameterPath path;
  path.start = rho;
  path.finish = rho2;
  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t i = 0; i < rho.rho.size(); ++i) {
    const Group rel = inverse(rho.rho[i]) * rho2.rho[i];
    const double vn = std::sqrt(rel.x * rel.x + rel.y * rel.y + rel.z * rel.z);
    Alg v;
    if (rel.w < 0.0 && vn < 1e-12) {
      // Antipodal pair: every half great circle is minimizing; take the
      // first-axis one so repeated runs agree.
      v = Alg{kSqrt2 * kPi, 0.0, 0.0};
    } else {
      v = log_group(rel);
    }
    path.velocity.push_back(v);
    path.K = std::max(path.K, group_distance(rho.rho[i], rho2.rho[i]));
  }
  return path;
}

// ---------------------------------------------------------------------------
// Parameter-to-weld continuity probe
// ---------------------------------------------------------------------------

namespace {

double block_lp_diff(const BlockState& x, const BlockState& y, double p) {
  Field d = x.a;
  axpy(-1.0, y.a, d);
  return std::pow(mass_lp_masked(x.grid, d, p, 1.0, x.own), 1.0 / p);
}

}  // namespace

LipschitzReport lipschitz_probe(const ChainConfig& c, const GluingParameter& rho,
                                const GluingParameter& rho2, int max_passes,
                                double target, int path_samples) {
  const ParameterPath path = geodesic_path(rho, rho2);
  LipschitzReport rep;
  rep.K = path.K;
  const double p = 2.0 * c.solver.p;

  auto [wa, ta] = alternate(c, rho, max_passes, target);
  rep.passes[0] = static_cast<int>(ta.records.size());
  if (rep.K == 0.0) {
    // Identical endpoints weld identically; nothing to measure.
    rep.passes[1] = rep.passes[0];
    rep.block_diff.assign(wa.blocks.size(), 0.0);
    rep.complete = ta.converged;
    return rep;
  }
  auto [wb, tb] = alternate(c, rho2, max_passes, target);
  rep.passes[1] = static_cast<int>(tb.records.size());
  rep.complete = ta.converged && tb.converged;

  for (std::size_t i = 0; i < wa.blocks.size(); ++i) {
    const double nd = block_lp_diff(wa.blocks[i], wb.blocks[i], p);
    rep.block_diff.push_back(nd);
    rep.sup_diff = std::max(rep.sup_diff, nd);
  }
  rep.ratio = rep.sup_diff / rep.K;

  if (path_samples > 0) {
    // Finite-difference speeds along the geodesic, endpoint to endpoint.
    const WeldedConnection* prev = &wa;
    WeldedConnection held = wa;  // keeps `prev` valid across iterations
    const double dt = 1.0 / (path_samples + 1);
    for (int k = 1; k <= path_samples + 1; ++k) {
      const WeldedConnection* cur = nullptr;
      WeldedConnection sample;
      if (k <= path_samples) {
        try {
          auto [ws, ts] = alternate(c, path.at(k * dt), max_passes, target);
          if (!ts.converged) rep.complete = false;
          sample = std::move(ws);
          cur = &sample;
        } catch (const WeldFailure&) {
          rep.complete = false;
          break;
        }
      } else {
        cur = &wb;
      }
      double sp = 0.0;
      for (std::size_t i = 0; i < cur->blocks.size(); ++i)
        sp = std::max(sp, block_lp_diff(cur->blocks[i], prev->blocks[i], p));
      rep.path_speed.push_back(sp / dt);
      if (cur == &sample) {
        held = std::move(sample);
        prev = &held;
      } else {
        prev = cur;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Center action and gauge fingerprints
// ---------------------------------------------------------------------------

CenterReport center_equivalence(const ChainConfig& c, const GluingParameter& rho,
                                const std::vector<int>& signs, int max_passes,
                                double target) {
  if (signs.size() != rho.rho.size())
    fail("center twist needs one sign per neck");
  GluingParameter twist = rho;
  for (std::size_t i = 0; i < signs.size(); ++i) {
    if (signs[i] >= 0) continue;
    Group& g = twist.rho[i];
    g.w = -g.w;
    g.x = -g.x;
    g.y = -g.y;
    g.z = -g.z;
  }
  auto [wa, ta] = alternate(c, rho, max_passes, target);
  auto [wb, tb] = alternate(c, twist, max_passes, target);

  CenterReport rep;
  rep.passes[0] = static_cast<int>(ta.records.size());
  rep.passes[1] = static_cast<int>(tb.records.size());
  rep.gamma.assign(static_cast<std::size_t>(c.window), 1);
  for (int i = 0; i + 1 < c.window; ++i)
    rep.gamma[static_cast<std::size_t>(i + 1)] =
        rep.gamma[static_cast<std::size_t>(i)] * (signs[static_cast<std::size_t>(i)] < 0 ? -1 : 1);
  for (std::size_t i = 0; i < wa.blocks.size(); ++i) {
    Field d = wa.blocks[i].a;
    axpy(-1.0, wb.blocks[i].a, d);
    rep.field_diff = std::max(rep.field_diff, norm_linf(d, 1.0));
  }
  rep.observable_diff = gauge_distinguish(wa, wb);
  return rep;
}

namespace {

// Ordered product of edge exponentials around an axis-aligned square loop.
// The connection is sampled at both edge ends; the trace of the result is
// invariant under constant frame changes, which is all a fingerprint needs.
double loop_trace(const Grid& g, const Field& total, int ci, int cj, int ck,
                  int cl, int u, int v, int side) {
  int pos[4] = {ci, cj, ck, cl};
  Group hol = identity_group();
  auto edge = [&](int axis, int dir) {
    int nxt[4] = {pos[0], pos[1], pos[2], pos[3]};
    nxt[axis] = g.wrap(nxt[axis] + dir);
    const int from[4] = {dir > 0 ? pos[0] : nxt[0], dir > 0 ? pos[1] : nxt[1],
                         dir > 0 ? pos[2] : nxt[2], dir > 0 ? pos[3] : nxt[3]};
    const int to[4] = {dir > 0 ? nxt[0] : pos[0], dir > 0 ? nxt[1] : pos[1],
                       dir > 0 ? nxt[2] : pos[2], dir > 0 ? nxt[3] : pos[3]};
    const std::int64_t sa = g.site(from[0], from[1], from[2], from[3]);
    const std::int64_t sb = g.site(to[0], to[1], to[2], to[3]);
    const Alg mid = 0.5 * (total.get(sa, axis) + total.get(sb, axis));
    Group step = exp_alg(-g.h * mid);
    if (dir < 0) step = inverse(step);
    hol = hol * step;
    pos[0] = nxt[0];
    pos[1] = nxt[1];
    pos[2] = nxt[2];
    pos[3] = nxt[3];
  };
  for (int k = 0; k < side; ++k) edge(u, +1);
  for (int k = 0; k < side; ++k) edge(v, +1);
  for (int k = 0; k < side; ++k) edge(u, -1);
  for (int k = 0; k < side; ++k) edge(v, -1);
  return 2.0 * hol.w;
}

void mark_site(const Grid& g, const Point& mark, int out[4]) {
  for (int i = 0; i < 4; ++i)
    out[i] = g.wrap(static_cast<int>(std::llround(mark[i] / g.h)));
}

}  // namespace

std::vector<double> fingerprint(const WeldedConnection& w) {
  std::vector<double> out;
  for (const BlockState& blk : w.blocks) {
    const Grid& g = blk.grid;
    const Field f = block_curvature(blk);
    const double cell = g.h * g.h * g.h * g.h;
    std::vector<double> bins(256, 0.0);
    for (std::int64_t s = 0; s < g.nsites; ++s) {
      if (!blk.live[static_cast<std::size_t>(s)]) continue;
      int i, j, k, l;
      g.coords(s, i, j, k, l);
      const int idx =
          ((4 * i / g.n * 4 + 4 * j / g.n) * 4 + 4 * k / g.n) * 4 + 4 * l / g.n;
      bins[static_cast<std::size_t>(idx)] += pointwise_norm2(f, s, 2.0) * cell;
    }
    out.insert(out.end(), bins.begin(), bins.end());
  }
  for (const BlockState& blk : w.blocks) {
    const Grid& g = blk.grid;
    Field total = blk.base;
    axpy(1.0, blk.a, total);
    int lm[4], rm[4];
    mark_site(g, blk.datum.chart.marked_left, lm);
    mark_site(g, blk.datum.chart.marked_right, rm);
    const int side = 8;
    out.push_back(loop_trace(g, total, g.wrap(lm[0] + 2), g.wrap(lm[1] + 2),
                             g.wrap(lm[2] + 2), g.wrap(lm[3] + 2), 0, 1, side));
    out.push_back(loop_trace(g, total, g.wrap(lm[0] + 2), g.wrap(lm[1] + 2),
                             g.wrap(lm[2] + 2), g.wrap(lm[3] + 2), 2, 3, side));
    out.push_back(loop_trace(g, total, g.wrap(rm[0] + 2), g.wrap(rm[1] + 2),
                             g.wrap(rm[2] + 2), g.wrap(rm[3] + 2), 0, 2, side));
  }
  return out;
}

double gauge_distinguish(const WeldedConnection& a, const WeldedConnection& b) {
  const ChainConfig& ca = a.config;
  const ChainConfig& cb = b.config;
  bool same = ca.window == cb.window && ca.periodic == cb.periodic &&
              ca.assignment == cb.assignment &&
              a.blocks.size() == b.blocks.size();
  if (same)
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
      same = same && a.blocks[i].grid == b.blocks[i].grid;
  if (!same) fail("fingerprint comparison needs matching chains");
  const std::vector<double> fa = fingerprint(a);
  const std::vector<double> fb = fingerprint(b);
  double d = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i)
    d = std::max(d, std::abs(fa[i] - fb[i]));
  return d;
}

}  // namespace asdweld
