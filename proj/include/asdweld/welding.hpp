#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asdweld/connection.hpp"
#include "asdweld/elliptic.hpp"
#include "asdweld/geometry.hpp"
#include "asdweld/grid.hpp"
#include "asdweld/rng.hpp"

namespace asdweld {

// One reusable block: a flat 4-torus chart with two marked points and an
// analytic background. Blocks are joined into a chain by identifying the
// annulus around one block's right marked point with the annulus around the
// next block's left marked point through the conformal neck map.
struct GluingDatum {
  ChartSpec chart;
  Background background;
  bool nonflat = false;
};

/** Block solves run over backgrounds with deformation modes (instanton
    moduli) and cokernels (flat-block constants), so the linear step must
    accept an equation-residual plateau; strict acceptance would abort on the
    first such block. */
inline SolverParams chain_solver_defaults() {
  SolverParams s;
  s.cg_accept = 0.25;
  return s;
}

struct ChainConfig {
  int window = 2;       // number of blocks in the modeled window
  bool periodic = true; // wrap block window-1 back to block 0; window then even
  std::vector<GluingDatum> catalog;
  std::vector<int> assignment;  // block index -> catalog entry
  NeckParams neck;
  // kappa and eta are recalibrated per weld
  SolverParams solver = chain_solver_defaults();
  int transport_substeps = 6;   // ray-transport substeps per grid spacing
  double frame_blend_margin = 1.2;  // gauge frame returns to identity at margin*r3
};

/** Necks in a chain: window for a periodic wrap, window-1 for free ends. */
int neck_count(const ChainConfig& c);

/** Throws std::invalid_argument naming the first violated invariant. */
void validate_chain(const ChainConfig& c);

// Fibre identifications over the necks. The center acts trivially: replacing
// any entry by its negative yields the identical welded connection.
struct GluingParameter {
  std::vector<Group> rho;  // one per neck
};

GluingParameter identity_parameter(const ChainConfig& c);
GluingParameter random_parameter(const ChainConfig& c, Rng& rng);

// Background in the exponential gauge about both marked points: inside
// frame radius r_blend the frame is the inverse radial transport, so the
// connection matrix vanishes at the marked points and grows at most linearly
// in the curvature. Evaluations take an (anchor, offset) pair; the anchor
// fixes every local torus image once, so rays and finite-difference lobes
// never straddle a wrap seam.
class BlockDressing {
 public:
  BlockDressing(const GluingDatum& datum, double r_pure, double r_blend,
                int substeps_per_h);

  /** Dressed connection 1-form at anchor + offset. */
  void connection(const Point& anchor, const Point& offset, Alg out[4]) const;
  /** Gauge frame at anchor + offset (identity beyond r_blend of both marks). */
  Group frame(const Point& anchor, const Point& offset) const;
  /** Frames at every grid site. */
  std::vector<Group> grid_frames(const Grid& g) const;

  const GluingDatum& datum() const { return datum_; }

 private:
  Group mark_frame(int m, const Point& d) const;

  GluingDatum datum_;
  double r_pure_ = 0.0, r_blend_ = 0.0, h_ = 0.0, eps_ = 0.0;
  int substeps_ = 1;
  Point mark_[2]{};
  Point mark_from_core_[2]{};  // each mark in the background center's image
};

// Geometry of one receiving site of a neck, precomputed: where it lands in
// the sending chart and how forms pull back there. Offsets whose radius
// falls inside the excised ball are capped to it and faded by `taper`; such
// sites are outside the glued manifold and carry an arbitrary smooth
// extension.
struct NeckTarget {
  std::int64_t site = 0;
  Point eta{};                   // receiving-chart offset from the neck mark
  Point xi{};                    // image offset in the sending chart
  std::array<double, 16> jac{};  // d(xi)/d(eta) at the receiving offset
  double r_eta = 0.0;            // receiving-chart radius
  double chi = 0.0;              // sending cutoff seen through the neck
  double taper = 1.0;            // extension fade inside the excised ball
  std::array<Alg, 4> delta{};    // pulled-back neighbor background minus own
};

struct NeckCoupling {
  int a = 0, b = 0;  // joins block a's right marked point to block b's left
  Group rho;         // fibre map, frame of a -> frame of b
  std::vector<NeckTarget> into_b;  // sites of block b around its left mark
  std::vector<NeckTarget> into_a;  // sites of block a around its right mark
};

struct BlockState {
  Grid grid;
  double torus_len = 0.0;
  GluingDatum datum;
  std::shared_ptr<BlockDressing> dressing;
  Field base;    // dressed background on the grid, 4 comps
  Field fbase;   // background curvature stencil rotated into the dressed frame
  Field a;       // current perturbation
  Field a0;      // initial approximation, kept for drift accounting
  Field sigma;   // tracked error term, self-dual comps
  Field b_last;  // most recent solve output on this block
  CutoffField cut;                     // own cutoff: psi, dpsi, psi(psi-1)
  std::vector<std::uint8_t> inner_band;  // either mark radius in (r0, r1)
  std::vector<std::uint8_t> outer_band;  // either mark radius in (r2, r3)
  std::vector<std::uint8_t> own;         // energy ownership: beyond sqrt(lambda)
  std::vector<std::uint8_t> live;        // in U: beyond r0 of both marks
  double floor_linf = 0.0;       // band |F+| of the background stencil
  double background_energy = 0;  // ownership-masked energy, splice-free
  SolveReport last_report;
};

struct PassRecord {
  int pass = 0;
  int parity = 0;
  double delta = 0.0;  // sup of |sigma|_inf over the receiving parity
  double ratio = 0.0;  // delta divided by the entering delta
  double support_violation = 0.0;  // relative sigma mass outside its shells
  std::vector<double> sigma_norms; // per block, after the pass
  std::vector<int> cg_iterations;  // per block, 0 where nothing was solved
  double energy_drift = 0.0;       // max block |F_new - F_old|_{L2(own)}
  double drift_max = 0.0;          // max block |a - a0|_{L2p}
  double a_norm_max = 0.0;         // max block |a|_{L2p}
};

struct DecayTrace {
  double delta0 = 0.0;
  double floor = 0.0;
  double target = 0.0;
  bool converged = false;
  std::vector<PassRecord> records;
};

struct WeldFailure : std::runtime_error {
  DecayTrace trace;
  WeldFailure(const std::string& what, DecayTrace t)
      : std::runtime_error(what), trace(std::move(t)) {}
};

struct WeldedConnection {
  ChainConfig config;
  GluingParameter rho;
  std::vector<BlockState> blocks;
  std::vector<NeckCoupling> necks;
  int pass = 0;
  double delta0 = 0.0;
  double floor = 0.0;    // 10x the band-restricted stencil |F+| of backgrounds
  double kappa = 0.0;    // error-term ceiling handed to the block solves
  double eta_cap = 0.0;  // perturbation-size ceiling handed to the block solves
};

/** Splice the backgrounds: even blocks cede the whole neck to their
    neighbors' pulled-back connection, odd blocks keep theirs down to the
    inner shell. The tracked error term is exact on the cutoff ramps. */
WeldedConnection initial_approximation(const ChainConfig& c,
                                       const GluingParameter& rho);

/** Solve every block of the given parity against its tracked error term,
    apply the cutoff update on the block and the conjugated pulled-back
    update on its neighbors, and move the tracked error to the opposite
    parity. Solves are independent; updates merge afterwards in block order. */
void half_pass(WeldedConnection& w, int parity, PassRecord* rec = nullptr);

/** Alternate parities until delta <= max(target*delta0, floor), a stall
    (ratio >= 1 three passes running, throws WeldFailure), or max_passes.
    The floor only raises the stop when it lies below delta0: on grids too
    coarse to resolve the neck bands it does not, and the tracked recursion,
    which is not stencil-limited, runs down to the caller's target. */
std::pair<WeldedConnection, DecayTrace> alternate(const ChainConfig& c,
                                                  const GluingParameter& rho,
                                                  int max_passes, double target);

struct EnergyLedger {
  std::vector<double> block_energy;       // ownership-masked |F|^2 per block
  std::vector<double> background_energy;  // same mask, splice-free reference
  double total = 0.0;
  double min_nonflat = 0.0;
  int nonflat_count = 0;
  double per_nonflat = 0.0;
};

EnergyLedger energy_ledger(const WeldedConnection& w);

/** Max gluing defect of the spliced background charts across necks, sampled
    in the middle zone of the overlap annulus; limited only by interpolation
    of the splice. Cut perturbation updates enter both charts as the same
    transported field, so they cannot contribute a defect and are omitted. */
double compatibility_check(const WeldedConnection& w, int samples_per_neck = 128,
                           Rng* rng = nullptr);

/** Composite curvature of one block: F(base) stencil + d_base a + a^a. */
Field block_curvature(const BlockState& blk);
Field block_curvature_plus(const BlockState& blk);

/** Max over blocks of |F+|_{Linf} of the direct stencil curvature, restricted
    to the ownership region; the honest terminal ASD residual. */
double terminal_residual(const WeldedConnection& w);

}  // namespace asdweld
