#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "asdweld/rng.hpp"
#include "asdweld/su2.hpp"
#include "asdweld/welding.hpp"

namespace asdweld {

// ---------------------------------------------------------------------------
// Scalar error recurrence
// ---------------------------------------------------------------------------

/** Inputs of the two-sequence error recurrence driven by parity passes.
    Admissible when eps <= 1/100, K > 0, alpha0 <= eps*K, s0 <= K. */
struct RecurrenceInputs {
  double eps = 0.01;
  double K = 1.0;
  double alpha0 = 0.01;
  double s0 = 1.0;
};

/** Throws std::invalid_argument naming the violated admissibility bound. */
void validate(const RecurrenceInputs& in);

struct RecurrenceResult {
  double sup_alpha = 0.0;
  double bound = 0.0;  // 10 * eps * K
  int steps = 0;
  bool pass = false;  // sup_alpha <= bound
};

/** Runs the accumulation/decay recurrence
        alpha' = alpha + eps * (s + 2^-n alpha + 2^-n K)
        s'     = s/2 + 2^-n alpha + 2^-(n+1) K
    to convergence. Without an rng the increments sit at equality (the worst
    admissible case); with one, every gain term is damped by an independent
    uniform slack in [0,1], which covers all admissible runs. */
RecurrenceResult recurrence_verify(const RecurrenceInputs& in,
                                   Rng* slack = nullptr);

/** Closed-form gain budget of the worst case: alpha rises by at most
    eps*K*(6 + 60*eps) in total, under the 7*eps*K ceiling whenever
    eps <= 1/60. Returned as {budget, ceiling}. */
std::pair<double, double> worst_case_budget(double eps, double K);

// ---------------------------------------------------------------------------
// Geodesics in the gluing parameter
// ---------------------------------------------------------------------------

/** Constant-speed geodesic between two gluing parameters, one great-circle
    arc per neck. Exactly antipodal entries have no unique arc; those take
    the lowest-index axis, deterministically. */
struct ParameterPath {
  GluingParameter start, finish;
  std::vector<Alg> velocity;  // per neck: initial velocity of the arc
  double K = 0.0;             // sup over necks of the endpoint distance

  GluingParameter at(double t) const;
  /** Path speed of one neck in the matrix (Frobenius) metric; equals the
      velocity norm and is constant in t. */
  double speed(int neck) const;
};

ParameterPath geodesic_path(const GluingParameter& rho,
                            const GluingParameter& rho2);

// ---------------------------------------------------------------------------
// Parameter-to-weld continuity probe
// ---------------------------------------------------------------------------

struct LipschitzReport {
  double K = 0.0;         // endpoint separation, sup over necks
  double sup_diff = 0.0;  // sup over blocks of |a(rho) - a(rho')|_{L^2p(own)}
  double ratio = 0.0;     // sup_diff / K (0 when K = 0)
  std::vector<double> block_diff;
  // Finite-difference speeds |a(t_k+1) - a(t_k)|_{L^2p} / dt along the
  // geodesic, sup over blocks, when path samples were requested.
  std::vector<double> path_speed;
  int passes[2] = {0, 0};
  bool complete = true;  // false when a sampled weld failed to converge
};

/** Welds both endpoints (and optionally interior geodesic samples) and
    measures how far the terminal perturbations move per unit of parameter
    distance. Symmetric in the endpoints. A failed interior weld flags the
    report instead of throwing. */
LipschitzReport lipschitz_probe(const ChainConfig& c, const GluingParameter& rho,
                                const GluingParameter& rho2, int max_passes,
                                double target, int path_samples = 0);

// ---------------------------------------------------------------------------
// Center action and gauge fingerprints
// ---------------------------------------------------------------------------

struct CenterReport {
  std::vector<int> gamma;      // explicit central gauge chain, one per block
  double field_diff = 0.0;     // sup over blocks of |a - a'|_inf
  double observable_diff = 0.0;  // fingerprint distance of the two welds
  int passes[2] = {0, 0};
};

/** Welds rho and its center twist (rho_i -> sign_i * rho_i), builds the
    central gauge chain realizing the twist, and compares the outputs. The
    adjoint action kills the center, so both the perturbation fields and all
    gauge-invariant observables must come back identical. */
CenterReport center_equivalence(const ChainConfig& c, const GluingParameter& rho,
                                const std::vector<int>& signs, int max_passes,
                                double target);

/** Gauge-invariant fingerprint of a welded chain: per block, curvature mass
    binned into a fixed 4x4x4x4 cell grid (hole sites excluded), followed by
    traces of holonomies around three fixed axis-aligned square loops of side
    8 steps anchored near the marked points. Fixed order, diffable. */
std::vector<double> fingerprint(const WeldedConnection& w);

/** Max absolute fingerprint mismatch; a pseudometric on welded outputs.
    Throws std::invalid_argument when the chains do not match. */
double gauge_distinguish(const WeldedConnection& a, const WeldedConnection& b);

}  // namespace asdweld
