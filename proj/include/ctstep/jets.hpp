#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ctstep/common.hpp"

namespace ctstep {

// Symbolic truncated power series ("jets") in the step size h, with
// coefficients that are polynomials over the derivative indeterminates
//
//   F_{a,b} = d^{a+b} f / (dt^a dy^b)   evaluated at the expansion point,
//
// for a scalar non-autonomous right-hand side y' = f(t, y).  Expanding a
// one-step scheme as a jet and comparing against the exact-flow jet turns
// order verification into exact coefficient matching.

/// Largest supported a+b for an indeterminate.  Enough for jets up to h^6.
inline constexpr int kMaxDerivTotal = 5;

/// Packed code for F_{a,b}; codes order lexicographically by (a, b).
int deriv_code(int a, int b);
int deriv_a(int code);
int deriv_b(int code);
std::string deriv_name(int code); // "F12" = d^3 f / (dt dy^2)

/// A monomial is a multiset of indeterminate factors, kept sorted ascending.
/// The empty monomial is the constant 1.
using Monomial = std::vector<int>;

std::string monomial_name(const Monomial& m); // "F00*F01^2"; "1" when empty

/// Elementary-differential order: 1 + sum of (a+b) over the factors.
/// A term of the local error at h^k always has order <= k.
int monomial_order(const Monomial& m);

/// Polynomial over the indeterminates.  Coefficients that become exactly
/// zero are erased, so operator== is a meaningful structural equality.
using Poly = std::map<Monomial, Cplx>;

void poly_add_term(Poly& p, const Monomial& m, Cplx coeff);
Poly poly_scale(const Poly& p, Cplx s);
Poly poly_mul(const Poly& p, const Poly& q);

/// Total time derivative D = d/dt + F00 d/dy acting on the indeterminates:
/// D F_{a,b} = F_{a+1,b} + F00 F_{a,b+1}, extended by Leibniz.
Poly d_total(const Poly& p);

/// Series sum_{k=0}^{P} c[k] h^k.  State jets (expansions of y - y0) have an
/// empty c[0].
struct Jet {
  int P = 0;
  std::vector<Poly> c; // size P + 1

  explicit Jet(int truncation);
};

/// Multiplicative identity: 1 + 0 h + ...
Jet jet_one(int P);

bool jet_equal(const Jet& x, const Jet& y); // exact coefficient equality
Jet jet_add(const Jet& x, const Jet& y);
Jet jet_sub(const Jet& x, const Jet& y);
Jet jet_scale(const Jet& x, Cplx s);
Jet jet_mul(const Jet& x, const Jet& y); // truncated at h^P
Jet jet_truncate(const Jet& x, int new_p);

/// x * s * h: shift one power up, dropping the old top coefficient.
Jet jet_mul_h(const Jet& x, Cplx s);

enum class JetRestriction {
  Full,       // all indeterminates
  Autonomous, // F_{a,b} with a > 0 set to zero
  Linear,     // only monomials F00 * F01^j survive (f linear in y, autonomous)
};

Jet restrict_jet(const Jet& x, JetRestriction r);

/// Taylor expansion of y(t0+h) - y0 through h^P via y^(k+1) = D y^(k),
/// y^(1) = F00.  2 <= P <= 6.
Jet exact_flow_jet(int P, bool autonomous_only);

/// f evaluated at (t0 + tau h, y0 + dy) as a jet:
///   sum_{a,b} F_{a,b} tau^a h^a dy^b / (a! b!).
/// dy must be a state jet (no h^0 term).  Terms needing a+b > P-1 are
/// dropped; schemes always consume f-jets through a multiplication by h,
/// so the truncated product is exact through h^P.
Jet f_eval_jet(Cplx tau, const Jet& dy);

/// Fixed point of y = step(y) starting from `start`.  Each application is
/// exact one order deeper, so iterates stabilize bitwise within P+1 steps;
/// failure to stabilize indicates an arithmetic bug (InternalError).
/// When `iterates` is given, every application's result is appended to it.
Jet picard_fixed_point(const std::function<Jet(const Jet&)>& step, const Jet& start,
                       std::vector<Jet>* iterates = nullptr);

std::string jet_to_string(const Jet& x); // diagnostics

} // namespace ctstep
