#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "asdweld/forms.hpp"
#include "asdweld/grid.hpp"

namespace asdweld {

// Linearization of b -> F+(A + a + b) together with the gauge-fixing slot:
//   op(b) = d*_A b  (+)  d+_A b + [a ^ b]+.
// The d+ leg with multiplier equals d+ against the combined field A + a.
struct LinearizedOperator {
  const Grid* grid = nullptr;
  Field background;  // A, enters d* covariantly
  Field combined;    // A + a, enters the d+ leg
  double mu = 0.0;   // Tikhonov shift; > 0 whenever the discrete kernel is nonempty
  double cg_tol = 1e-6;
  // Equation-residual level accepted at stagnation; <= cg_tol means strict.
  double cg_accept = 0.0;
  int cg_maxit = 2000;

  void apply(const Field& b, Field& out0, Field& outsd) const;
  Field apply_transpose(const Field& s0, const Field& ssd) const;
  /** out = op^T(op b) + mu b. */
  Field normal_apply(const Field& b) const;
  /** Power-iteration estimate of |op^T op|; deterministic. */
  double spectral_estimate(int iters = 15) const;
};

LinearizedOperator make_operator(const Grid& g, const Field& A, const Field& a,
                                 double mu_rel, double cg_tol, int cg_maxit,
                                 double cg_accept = 0.0);

struct SolveFailure : std::runtime_error {
  std::vector<double> residual_history;
  SolveFailure(const std::string& what, std::vector<double> hist)
      : std::runtime_error(what), residual_history(std::move(hist)) {}
};

struct SolveReport {
  int cg_iterations = 0;
  int picard_sweeps = 0;
  double normal_residual = 0.0;    // relative normal residual, last sweep exit
  double equation_residual = 0.0;  // full Eq residual after the nonlinear solve
  double equation_residual_rel = 0.0;
  double dstar_norm = 0.0;
  double mu = 0.0;
  double spectral_estimate = 0.0;
  double b_linf = 0.0;
  double b_l2p = 0.0;
  double b_lp1 = 0.0;
  double sigma_lp = 0.0;
  double bound_ratio = 0.0;  // |b|_{L^p_1} / |sigma|_{L^p}
  std::vector<double> cg_history;  // relative normal residuals, last sweep
};

struct SolverParams {
  double p = 8.0;  // admissible exponent, > 6
  double mu_rel = 1e-8;
  double cg_tol = 1e-6;
  // Relative equation residual accepted when the normal residual stagnates;
  // backgrounds with deformation modes or a cokernel need this positive.
  double cg_accept = 0.0;
  int cg_maxit = 2000;
  // Relative change of b, sup norm. Must sit above the linear-solve
  // reproducibility floor (a few times cg_tol times the condition number).
  double picard_tol = 3e-5;
  int picard_maxit = 12;
  double kappa = 1.0;  // |sigma|_inf threshold, calibrated per scenario
  double eta = 1.0;    // |a|_{L^{2p}} threshold
};

/** Least-squares solve of op(b) = rhs by conjugate gradients on the normal
    equations from a zero start. Strict mode (cg_accept <= cg_tol) runs to the
    normal-residual tolerance. Accepting mode stops at the first stagnation of
    the normal residual, before the Krylov basis rotates into kernel
    directions of op, and accepts the best iterate when its equation residual
    is within cg_accept. Throws SolveFailure otherwise. */
Field linear_solve(const LinearizedOperator& op, const Field& rhs0,
                   const Field& rhssd, std::vector<double>* history);

/** Picard iteration for d*_A b = 0, d+_A b + [a^b]+ + (b^b)+ = -sigma. */
Field perturbation_solve(const Grid& g, const Field& A, const Field& a,
                         const Field& sigma, const SolverParams& prm,
                         SolveReport& report);

// Scalar cutoff data on the grid; values analytic, never differenced.
struct CutoffField {
  std::vector<double> psi;    // nsites
  std::vector<double> dpsi;   // 4 * nsites, layout site*4 + mu
  std::vector<double> defect; // psi*(psi-1), nsites
};

/** tau = (dpsi ^ b)+ + psi(psi-1)(b ^ b)+, evaluated pointwise. */
Field new_error(const Grid& g, const CutoffField& psi, const Field& b);

/** Precondition of the splice: sigma must vanish where psi < 1. */
double support_mismatch(const Grid& g, const CutoffField& psi, const Field& sigma);

struct EstimateReport {
  double delta = 0.0;      // |sigma|_inf driving the pass
  double K_N = 0.0;        // N/(N - 1/N)^3
  double tau_inf = 0.0;
  double c2_hat = 0.0;     // tau_inf / (K_N N^4 delta)
  double psib_lp1 = 0.0;
  double c3_hat = 0.0;     // psib_lp1 / (lambda^{2/p} delta)
  double f_change_l2 = 0.0;
  double c4_hat = 0.0;     // f_change_l2 / (lambda delta)
  double b_l2p = 0.0;
  double c1_hat = 0.0;     // b_l2p / (lambda^{(p+2)/2p} delta)
  double contraction_check = 0.0;  // c2_hat * K_N, selection rule wants <= 1/2
};

double k_constant(double N);

/** Measured Prop-style ratios for one completed solve + splice. */
EstimateReport estimate_report(const Grid& g, const Field& A, const Field& a,
                               const Field& sigma, const Field& b,
                               const CutoffField& psi, double lambda, double N,
                               double p);

}  // namespace asdweld
