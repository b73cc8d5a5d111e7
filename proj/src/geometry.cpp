#include "asdweld/geometry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace asdweld {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("precondition violated: " + what);
}

}  // namespace

void validate(const NeckParams& p) {
  if (!(p.lambda > 0.0)) fail("neck lambda must be positive");
  if (!(p.N > 1.0)) fail("neck N must exceed 1");
  // k <= 0.925 keeps the cutoff slope 1.5/(1-k) * N/sqrt(lambda) within
  // the contract bound 20 N / sqrt(lambda).
  if (!(p.k > 0.0 && p.k <= 0.925)) fail("neck k must lie in (0, 0.925]");
  if (p.reflection_axis < 0 || p.reflection_axis > 3) fail("reflection axis must be 0..3");
  if (p.smallness_exponent < 1) fail("smallness exponent must be >= 1");
  const double budget_used = p.lambda * std::pow(p.N, p.smallness_exponent);
  if (!(budget_used <= p.smallness_budget)) {
    std::ostringstream os;
    os << "neck smallness: lambda*N^" << p.smallness_exponent << " = " << budget_used
       << " exceeds configured budget " << p.smallness_budget;
    fail(os.str());
  }
}

void validate(const ChartSpec& c, const NeckParams& p) {
  validate(p);
  if (!(c.torus_size > 0.0)) fail("chart torus_size must be positive");
  if (c.resolution < 8) fail("chart resolution must be >= 8");
  for (int i = 0; i < 4; ++i) {
    if (!(c.marked_left[i] >= 0.0 && c.marked_left[i] < c.torus_size))
      fail("marked_left must lie inside [0, torus_size)^4");
    if (!(c.marked_right[i] >= 0.0 && c.marked_right[i] < c.torus_size))
      fail("marked_right must lie inside [0, torus_size)^4");
  }
  const ShellRadii s = shell_radii(p);
  if (!(s.r3 < 0.5 * c.torus_size)) fail("outer shell radius must be below half the torus size");
  const double d = torus_distance(c.marked_left, c.marked_right, c.torus_size);
  if (!(d > 2.0 * s.r3)) {
    std::ostringstream os;
    os << "marked points too close: distance " << d << " must exceed twice the outer shell radius "
       << 2.0 * s.r3;
    fail(os.str());
  }
}

std::string zone_name(Zone z) {
  switch (z) {
    case Zone::Core: return "core";
    case Zone::InnerShell: return "inner_shell";
    case Zone::Middle: return "middle";
    case Zone::OuterShell: return "outer_shell";
    case Zone::Outside: return "outside";
  }
  return "?";
}

}  // namespace asdweld
