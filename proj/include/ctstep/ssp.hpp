#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctstep/integrators.hpp"
#include "ctstep/paths.hpp"

namespace ctstep {

// Strong-stability experiments on scalar autonomous problems u' = f(u): the
// analytic forward-Euler and per-substep bounds, and the empirical largest
// monotone step |u_{n+1}| <= |u_n| per method.

using ScalarRhs = std::function<Cplx(Cplx)>;

struct FeSspBound {
  double value = 0.0;
  bool unbounded = false; // u = 0 or f(u) = 0: every step is monotone
};

/// Largest forward-Euler step with |u + h f(u)| <= |u| for a decaying scalar
/// mode: 2 / |f(u)/u|.
FeSspBound fe_ssp_bound(const ScalarRhs& f, double u);

/// The per-substep monotonicity bound min_i max(0, -2 Re(w_i r_i) /
/// (|w_i|^2 |r_i|^2)) with r_i = f(u_states[i]) / u_states[i], evaluated at
/// the supplied pre-substep states (one per path weight).  Zero whenever any
/// w_i r_i is purely imaginary.  Throws ArgumentError on a zero state or a
/// state-count mismatch.
double strict_substep_bound(const ComplexPath& path, const ScalarRhs& f,
                            const std::vector<Cplx>& u_states);

struct SspOptions {
  double cap = 100.0;      // scan ceiling for the empirical search
  int scan_points = 10000; // coarse grid resolution: step = cap / scan_points
  double bisect_tol = 1e-8; // bracket width target, scaled by max(1, h)
};

struct SspResult {
  double max_step = 0.0;
  bool capped = false;            // monotone all the way up to the cap
  bool violated_at_floor = false; // already non-monotone at the first scanned step
};

/// Largest h such that one macro step of `method` from u_n keeps
/// |u_{n+1}| <= |u_n| for every scanned h' <= h (prefix definition: the
/// feasible set need not be an interval, the scan stops at the first
/// violation and bisects into the bracketing interval).  Methods whose
/// scheme projects apply Re() before the magnitude test.  Explicit methods
/// only; u_n must be nonzero.
SspResult max_ssp_step(const MethodSpec& method, double u_n, const ScalarRhs& f,
                       const SspOptions& opts = {});

struct SspCurve {
  std::vector<double> u; // strictly increasing sample grid
  std::vector<std::string> methods;
  std::vector<std::vector<SspResult>> values; // values[m][k]: methods[m] at u[k]
};

/// The standard four-column comparison on a log-spaced grid: explicit
/// midpoint, SSPRK2, and the projected conjugate-pair 2-step path in both
/// substep orders.  Each sample's scan ceiling adapts to the local
/// forward-Euler scale (cap_factor * fe bound, at least base.cap) so the
/// large-u region is not clipped; the scan step scales along with it.
SspCurve ssp_curve(const ScalarRhs& f, int samples = 200, double u_lo = 0.1,
                   double u_hi = 10.0, const SspOptions& base = {},
                   double cap_factor = 4.0);

/// Header "u_n,<method>..." then one row per sample, 17 significant digits.
void write_ssp_csv(const SspCurve& curve, std::ostream& os);

} // namespace ctstep
