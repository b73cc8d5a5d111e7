#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "asdweld/forms.hpp"
#include "asdweld/rng.hpp"
#include "asdweld/welding.hpp"
#include "doctest.h"

using namespace asdweld;

namespace {

GluingDatum flat_block(int n) {
  GluingDatum d;
  d.chart.resolution = n;
  return d;
}

GluingDatum bpst_block(int n) {
  GluingDatum d = flat_block(n);
  d.background.kind = Background::Kind::Bpst;
  d.background.center = {2.0, 3.0, 2.0, 2.0};
  d.background.scale = 0.7;
  d.nonflat = true;
  return d;
}

// One instanton block glued periodically to one flat block.
ChainConfig pair_chain(int n) {
  ChainConfig c;
  c.window = 2;
  c.periodic = true;
  c.catalog = {bpst_block(n), flat_block(n)};
  c.assignment = {0, 1};
  return c;
}

std::string rejection(const ChainConfig& c) {
  try {
    validate_chain(c);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

bool mentions(const std::string& msg, const char* what) {
  return msg.find(what) != std::string::npos;
}

}  // namespace

TEST_CASE("chain validation names the violated constraint") {
  const ChainConfig good = pair_chain(8);
  CHECK(rejection(good).empty());

  ChainConfig c = good;
  c.window = 1;
  c.assignment = {0};
  CHECK(mentions(rejection(c), "at least 2"));

  c = good;
  c.window = 3;
  c.assignment = {0, 1, 0};
  CHECK(mentions(rejection(c), "even"));

  c = good;
  c.catalog.clear();
  CHECK(mentions(rejection(c), "catalog is empty"));

  c = good;
  c.assignment = {0};
  CHECK(mentions(rejection(c), "one catalog entry per block"));

  c = good;
  c.assignment = {0, 5};
  CHECK(mentions(rejection(c), "outside the catalog"));

  c = good;
  c.solver.p = 4.0;
  CHECK(mentions(rejection(c), "exceed 6"));

  c = good;
  c.catalog[0].chart.marked_right = {1.5, 2.0, 2.0, 2.0};
  CHECK(mentions(rejection(c), "too close"));

  // Separation clears the shells themselves but not the gauge frame blend.
  c = good;
  for (GluingDatum& d : c.catalog) d.chart.resolution = 16;
  c.catalog[0].chart.marked_right = {2.75, 2.0, 2.0, 2.0};
  CHECK(mentions(rejection(c), "frame blend radius"));

  c = good;
  c.catalog[1].nonflat = true;
  CHECK(mentions(rejection(c), "needs an instanton background"));

  c = good;
  c.catalog[0].nonflat = false;
  CHECK(mentions(rejection(c), "carries a non-flat background"));

  c = good;
  c.catalog[0].background.center = c.catalog[0].chart.marked_left;
  CHECK(mentions(rejection(c), "inside a neck frame ball"));
}

TEST_CASE("an all flat chain with identity gluing is already welded") {
  ChainConfig c;
  c.window = 2;
  c.periodic = true;
  c.catalog = {flat_block(10)};
  c.assignment = {0, 0};
  const GluingParameter rho = identity_parameter(c);
  auto [w, tr] = alternate(c, rho, 30, 1e-3);
  CHECK(tr.converged);
  CHECK(tr.records.empty());
  CHECK(w.delta0 == 0.0);
  CHECK(terminal_residual(w) == 0.0);
  CHECK(compatibility_check(w, 32) <= 1e-14);
  const EnergyLedger led = energy_ledger(w);
  CHECK(led.total <= 1e-14);
  CHECK(led.nonflat_count == 0);
}

TEST_CASE("the tracked error term matches the stencil curvature on its shells") {
  const ChainConfig c = pair_chain(12);
  validate_chain(c);
  Rng rng(2024, "weld.shells");
  const GluingParameter rho = random_parameter(c, rng);
  const WeldedConnection w = initial_approximation(c, rho);

  // The splice of the instanton far field across this neck geometry starts
  // the error term at 0.66; conjugation cannot move any of these norms.
  CHECK(w.delta0 > 0.4);
  CHECK(w.delta0 < 0.9);
  CHECK(w.kappa == doctest::Approx(2.0 * w.delta0).epsilon(1e-9));

  const BlockState& blk = w.blocks[0];
  CHECK(blk.floor_linf > 0.1);
  CHECK(blk.floor_linf < 0.6);

  // The closed-form error term reproduces the stencil curvature up to the
  // background's own stencil error (measured at parity, factor 2 headroom).
  Field gap = block_curvature_plus(blk);
  axpy(-1.0, blk.sigma, gap);
  CHECK(norm_linf_masked(gap, 2.0, blk.outer_band) <= 2.0 * blk.floor_linf);

  // Support law: nothing at all lands outside the designated shells.
  std::vector<std::uint8_t> outside(blk.outer_band.size());
  for (std::size_t s = 0; s < outside.size(); ++s)
    outside[s] =
        static_cast<std::uint8_t>(1 - (blk.outer_band[s] | blk.inner_band[s]));
  std::vector<std::uint8_t> all(outside.size(), 1);
  CHECK(mass_lp_masked(blk.grid, blk.sigma, 1.0, 2.0, outside) == 0.0);
  CHECK(mass_lp_masked(blk.grid, blk.sigma, 1.0, 2.0, all) > 0.0);

  // The flat side carries its share below grid resolution: nothing on-grid.
  CHECK(norm_linf(w.blocks[1].sigma, 2.0) == 0.0);
}

TEST_CASE("alternating passes contract the error term geometrically") {
  const ChainConfig c = pair_chain(12);
  Rng rng(7, "weld.decay");
  const GluingParameter rho = random_parameter(c, rng);
  auto [w, tr] = alternate(c, rho, 10, 2e-3);
  CHECK(tr.converged);
  REQUIRE(!tr.records.empty());
  CHECK(tr.records.size() <= 6);  // measured: 3 passes to reach 2e-3 relative

  double prev = tr.delta0;
  for (const PassRecord& r : tr.records) {
    CHECK(r.delta < prev);
    CHECK(r.delta / prev <= 0.5);  // measured worst per-pass ratio 0.25
    CHECK(r.support_violation <= 1e-6);
    CHECK(r.a_norm_max <= w.eta_cap);
    prev = r.delta;
  }

  // Gluing defect of the spliced charts: interpolation-limited, pass-stable.
  CHECK(compatibility_check(w, 64) <= 0.15);

  // The ASD defect of the welded field bottoms out at the stencil error of
  // the instanton core, measured at 1.6x the band floor (w.floor is 10x it).
  CHECK(terminal_residual(w) <= 0.25 * w.floor);

  const EnergyLedger led = energy_ledger(w);
  CHECK(led.nonflat_count == 1);
  CHECK(led.block_energy[0] ==
        doctest::Approx(led.background_energy[0]).epsilon(0.05));
  CHECK(led.block_energy[1] <= 1e-3);
  CHECK(led.min_nonflat >= 0.5 * led.background_energy[0]);
}

TEST_CASE("the compatibility probe reads interpolation noise until tampered") {
  const ChainConfig c = pair_chain(10);
  Rng rng(11, "weld.compat");
  const GluingParameter rho = random_parameter(c, rng);
  WeldedConnection w = initial_approximation(c, rho);
  const double base = compatibility_check(w, 64);
  CHECK(base > 0.0);
  CHECK(base <= 0.2);  // splice interpolation at h = 0.4

  Field& a0 = w.blocks[0].a0;
  for (std::int64_t s = 0; s < w.blocks[0].grid.nsites; ++s)
    a0.add(s, 0, Alg{0.3, 0.0, 0.0});
  CHECK(compatibility_check(w, 64) > 5.0 * base);
}

TEST_CASE("negating a gluing rotation changes nothing") {
  const ChainConfig c = pair_chain(10);
  Rng rng(5, "weld.center");
  const GluingParameter rho = random_parameter(c, rng);
  GluingParameter neg = rho;
  for (Group& g : neg.rho) {
    g.w = -g.w;
    g.x = -g.x;
    g.y = -g.y;
    g.z = -g.z;
  }
  WeldedConnection w1 = initial_approximation(c, rho);
  WeldedConnection w2 = initial_approximation(c, neg);
  for (int i = 0; i < c.window; ++i) {
    CHECK(w1.blocks[i].a.v == w2.blocks[i].a.v);
    CHECK(w1.blocks[i].sigma.v == w2.blocks[i].sigma.v);
  }
  half_pass(w1, 0);
  half_pass(w2, 0);
  for (int i = 0; i < c.window; ++i) {
    CHECK(w1.blocks[i].a.v == w2.blocks[i].a.v);
    CHECK(w1.blocks[i].sigma.v == w2.blocks[i].sigma.v);
  }
}

TEST_CASE("doubling the instanton blocks doubles the welded energy") {
  ChainConfig two = pair_chain(10);
  ChainConfig four = two;
  four.window = 4;
  four.assignment = {0, 1, 0, 1};
  const EnergyLedger led2 =
      energy_ledger(initial_approximation(two, identity_parameter(two)));
  const EnergyLedger led4 =
      energy_ledger(initial_approximation(four, identity_parameter(four)));
  CHECK(led4.nonflat_count == 2);
  CHECK(led4.total / led2.total == doctest::Approx(2.0).epsilon(0.05));
  CHECK(led4.min_nonflat >= 0.9 * led2.min_nonflat);
}
