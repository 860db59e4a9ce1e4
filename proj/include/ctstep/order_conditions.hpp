#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ctstep/errors.hpp"
#include "ctstep/jets.hpp"
#include "ctstep/scheme.hpp"

namespace ctstep {

/// Jet of y_end - y_0 obtained by executing the scheme symbolically over one
/// macro step h.  Implicit substeps are resolved by Picard iteration on jets.
/// Real projection is NOT applied here (a jet has no real part to take);
/// order_report accounts for it via relaxed residuals.  1 <= P <= 6.
Jet scheme_jet(const SchemeDescriptor& s, int P);

struct MonomialResidual {
  int h_power = 0;
  Monomial monomial;
  Cplx exact{};    // exact-flow coefficient
  Cplx scheme{};   // scheme coefficient
  Cplx residual{}; // exact - scheme
};

struct OrderReport {
  int P = 0;
  double tol = 0.0;
  JetRestriction restriction = JetRestriction::Full;
  bool real_projection = false;
  std::vector<MonomialResidual> rows; // ordered by (h_power, monomial)
  // Largest p with every |residual| < tol at h-powers 1..p.
  int achieved_order = 0;
  // Same with |Re(residual)| only: the purely imaginary local error removed
  // by per-step projection onto the real axis.  Equals achieved_order when
  // the scheme does not project.
  int achieved_order_relaxed = 0;
};

/// Monomial-wise comparison of scheme_jet against exact_flow_jet after
/// applying the restriction to both.  2 <= P <= 6, tol > 0.
OrderReport order_report(const SchemeDescriptor& s, int P, double tol,
                         JetRestriction restriction = JetRestriction::Full);

/// CSV columns: monomial, h_power, residual_re, residual_im.
void write_order_report_csv(const OrderReport& report, std::ostream& os);

struct CompositeSolveOptions {
  std::uint64_t seed = 0;
  int restarts = 10000;
  double accept_residual_inf = 1e-10;
  double start_lo = -1.5; // uniform start box per real coordinate
  double start_hi = 1.5;
  bool real_restricted = false; // pin all imaginary parts to zero
};

struct CompositeSolveError : NumericError {
  CompositeSolveError(const std::string& msg, double best, int starts)
      : NumericError(msg), best_residual(best), starts_used(starts) {}
  double best_residual;
  int starts_used;
};

/// Finds composite-rk23 coefficients whose projected scheme matches the
/// autonomous exact flow through h^P: the conditions at orders 1-2 are
/// enforced exactly (real and imaginary) and at orders >= 3 in real part
/// only.  b23 is eliminated by the return-to-real-axis constraint
/// sum(b) = 1, which also settles the order-1 condition, leaving 12 real
/// equations at P=5.  Levenberg-Marquardt multistart, first start reaching
/// the acceptance residual wins; budget exhaustion throws
/// CompositeSolveError carrying the best residual seen.
SchemeDescriptor solve_composite_rk23(int P = 5, const CompositeSolveOptions& opts = {});

} // namespace ctstep
