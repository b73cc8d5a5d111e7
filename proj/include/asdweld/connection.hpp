#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "asdweld/forms.hpp"
#include "asdweld/geometry.hpp"
#include "asdweld/grid.hpp"
#include "asdweld/su2.hpp"

namespace asdweld {

// Backgrounds are analytic objects. They are evaluated through a per-site
// local trivialization: for a grid site x the offset u = minimage(x - center)
// is chosen once, and any stencil around x samples the closed-form expression
// at u + dx for the same image. Grid wrap-around therefore never differences
// the background across a torus seam; only perturbation fields, which vanish
// away from the necks, are differenced periodically.

struct Background {
  enum class Kind { Flat, Bpst } kind = Kind::Flat;
  Point center{0, 0, 0, 0};
  double scale = 1.0;  // BPST width rho

  /** Connection 1-form at offset u from the center (regular gauge). */
  void connection_at(const Point& u, Alg out[4]) const;
  /** Closed-form curvature at offset u; anti-self-dual for Bpst. */
  void curvature_at(const Point& u, Alg out[6]) const;
  /** Pointwise |F|^2 from the closed form. */
  double density_at(const Point& u) const;
};

/** Centered finite differences of the analytic connection, evaluated in the
    site's local image. This, not the closed form, defines the background
    curvature that enters energies and the convergence floor: it carries the
    same O(h^2) truncation as every other stencil in the calculus. */
void background_curvature_stencil(const Grid& g, const Background& bg,
                                  double torus_len, Field& out6);

/** Sample the analytic connection on the grid (one local image per site). */
void sample_background(const Grid& g, const Background& bg, double torus_len,
                       Field& out4);

// A connection is a background plus a periodic perturbation one-form. When
// `bg` is absent, `base` is an ordinary periodic grid field and curvature
// falls back to periodic stencils (used by generic field tests).
struct Connection {
  Grid grid;
  double torus_len = 0.0;
  std::shared_ptr<const Background> bg;  // analytic part, may be null
  Field base;  // sampled (possibly gauge-dressed) background, 4 comps
  Field fbase; // its curvature stencil, 6 comps, cached
  Field pert;  // perturbation a, 4 comps, periodic

  bool has_pert = false;
};

Connection make_grid_connection(const Grid& g, const Field& A);
Connection make_background_connection(const Grid& g, double torus_len,
                                      const Background& bg);

/** F(base + pert) = F(base) + d_base(pert) + pert^pert. */
Field curvature(const Connection& c);
Field curvature_plus(const Connection& c);

/** ||F||^2 over the whole grid or a site mask (h^4-weighted). */
double energy(const Connection& c);
double energy_masked(const Connection& c, const std::vector<std::uint8_t>& mask);

/** Second Chern number, (1/8pi^2) Int <F ^ F>; -1 for one Bpst background. */
double instanton_charge(const Connection& c);

/** A -> g A g^-1 - (dg) g^-1 with centered differences for dg. */
Field apply_gauge(const Grid& g, const std::vector<Group>& gauge,
                  const Field& A);
/** Pointwise frame rotation of any field's algebra values. */
Field rotate_field(const std::vector<Group>& gauge, const Field& f);

/** Connection values at an arbitrary point, by multilinear interpolation of
    a periodic grid field. */
void sample_field(const Grid& g, const Field& f, const Point& x,
                  Alg* out);  // out has f.ncomp entries

using ConnectionSampler = std::function<void(const Point&, Alg out[4])>;

/** Radial parallel transport gauge about `center`: inside `r_pure` the
    transported frame makes the radial component of the connection vanish;
    between r_pure and r_blend it is slerped back to the identity. */
std::vector<Group> exponential_gauge(const Grid& g, double torus_len,
                                     const ConnectionSampler& sample,
                                     const Point& center, double r_pure,
                                     double r_blend, int substeps_per_h);

/** Transport quaternion along the straight ray center -> center + u. */
Group ray_transport(const ConnectionSampler& sample, const Point& center,
                    const Point& u, int substeps);

/** One site's worth of exponential_gauge: the frame at offset u from the
    center, identity for |u| >= r_blend. `h` sets the transport step count. */
Group exponential_frame(const ConnectionSampler& sample, const Point& center,
                        const Point& u, double r_pure, double r_blend,
                        double h, int substeps_per_h);

}  // namespace asdweld
