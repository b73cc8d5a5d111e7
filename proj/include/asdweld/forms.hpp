#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "asdweld/grid.hpp"
#include "asdweld/su2.hpp"

namespace asdweld {

// Component conventions.
//   1-forms: 4 components dx^0..dx^3.
//   2-forms: 6 pair components in order 01, 02, 03, 12, 13, 23.
//   Self-dual forms: 3 components over e+_i = dx^0^dx^i + dual,
//   so |sd|^2 pointwise carries weight 2 per component.
inline constexpr int kPair[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
// Hodge star on pair components: (star w)[i] = kStarSign[i] * w[kStarPair[i]].
inline constexpr int kStarPair[6] = {5, 4, 3, 2, 1, 0};
inline constexpr double kStarSign[6] = {1.0, -1.0, 1.0, 1.0, -1.0, 1.0};

Field hodge_star(const Field& two_form);
/** P+ in the e+ basis: 3 components from 6. */
Field p_plus(const Field& two_form);
Field p_minus(const Field& two_form);
/** Embed an sd field back into pair components. */
Field embed_sd(const Field& sd);
Field embed_asd(const Field& asd);

/** Graded bracket wedge of two 1-forms: [a^b]_{uv} = [a_u,b_v] - [a_v,b_u]. */
Field bracket_wedge_11(const Field& a, const Field& b);
/** Quadratic convention (b^b)_{uv} = [b_u,b_v], so F = dA + (A^A). */
Field quad_wedge(const Field& b);
/** 0-form with 1-form: ([s^a])_u = [s, a_u]. */
Field bracket_wedge_01(const Field& s, const Field& a);

/** P+ of bracket_wedge_11, fused. */
Field wedge_plus_11(const Field& a, const Field& b);
/** P+ of quad_wedge, fused. */
Field quad_wedge_plus(const Field& b);

// Covariant calculus on periodic grid fields. B is an optional background
// 1-form entering pointwise; derivatives are centered differences, so d* and
// the d+ transpose below are exact discrete adjoints.
Field cov_d0(const Grid& g, const Field* B, const Field& s);
Field cov_d1(const Grid& g, const Field* B, const Field& b);
Field cov_dplus(const Grid& g, const Field* B, const Field& b);
Field cov_dstar1(const Grid& g, const Field* B, const Field& b);
/** Exact adjoint of cov_dplus: sd (3 comps, weight 2) to 1-form. */
Field dplus_transpose(const Grid& g, const Field* B, const Field& sd);
/** 2-form to 3-form (components 012,013,023,123); Bianchi diagnostics. */
Field cov_d2(const Grid& g, const Field* B, const Field& w);

// Value-level pullback of one point's form components through a linear map
// with jac[4*m + a] = d x_m / d y_a (the differential of x(y)).
/** (f* b)_a = sum_m b_m jac[4m+a]. */
void pullback_1form_value(const std::array<double, 16>& jac, const Alg* in,
                          Alg* out);
/** (f* w)_{ab} = sum_{m<n} w_{mn} (jac[4m+a] jac[4n+b] - jac[4m+b] jac[4n+a]). */
void pullback_2form_value(const std::array<double, 16>& jac, const Alg* in,
                          Alg* out);

/** Pointwise |value|^2 at a site, weight 2 for sd-stored fields. */
double pointwise_norm2(const Field& f, std::int64_t s, double comp_weight);

/** h^4-weighted inner product; deterministic summation order. */
double inner_product(const Grid& g, const Field& x, const Field& y, double comp_weight);

double norm_linf(const Field& f, double comp_weight);
double norm_l2(const Grid& g, const Field& f, double comp_weight);
double norm_lp(const Grid& g, const Field& f, double p, double comp_weight);
/** L^p restricted to sites with mask != 0. */
double norm_lp_masked(const Grid& g, const Field& f, double p, double comp_weight,
                      const std::vector<std::uint8_t>& mask);
double norm_linf_masked(const Field& f, double comp_weight,
                        const std::vector<std::uint8_t>& mask);
/** |f|^p mass over masked sites (no root). */
double mass_lp_masked(const Grid& g, const Field& f, double p, double comp_weight,
                      const std::vector<std::uint8_t>& mask);

/** ||f||_p + ||grad_B f||_p with the covariant gradient of each component. */
double norm_lp1(const Grid& g, const Field* B, const Field& f, double p, double comp_weight);

}  // namespace asdweld
