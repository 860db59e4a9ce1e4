#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctstep/common.hpp"
#include "ctstep/errors.hpp"

namespace ctstep {

/// What kind of order claim the weights carry.
///
///  - LinearOnly:      order_claim holds for linear problems (e_k = 1/k!).
///  - Nonlinear:       order_claim holds for general scalar non-autonomous
///                     problems (for order 3 the relaxed conditions need a
///                     real-part projection, see requires_real_projection).
///  - ImplicitMidpoint: weights drive implicit-midpoint substeps; an n-substep
///                     path matches the (n,n) Pade approximant of exp.
///  - BackwardEuler:   weights drive backward-Euler substeps; order_claim
///                     holds for linear problems ((0,n) Pade).
///  - ProblemSpecific: tuned to one right-hand side; not generically verifiable.
enum class PathClass {
  LinearOnly,
  Nonlinear,
  ImplicitMidpoint,
  BackwardEuler,
  ProblemSpecific,
};

std::string to_string(PathClass c);
PathClass path_class_from_string(const std::string& s);

/// A time-step path: complex substep weights that sum to 1, so that a macro
/// step of size dt returns to the real time axis after substeps w_i * dt.
struct ComplexPath {
  std::string name;
  std::vector<Cplx> weights;
  int order_claim = 1;
  PathClass validity_class = PathClass::LinearOnly;
  bool requires_real_projection = false;

  int steps() const { return static_cast<int>(weights.size()); }
};

struct PathResidualReport {
  std::vector<std::string> condition_labels;
  std::vector<Cplx> residuals; // one per condition, same order as labels
  double max_abs = 0.0;
  bool relaxed = false;
};

/// e_k(w): sum over all k-subsets of the product of their elements.
/// e_0 = 1.  Throws ArgumentError unless 0 <= k <= w.size().
Cplx elementary_symmetric(std::span<const Cplx> w, int k);

/// The condition value w1^2 w2 + w1^2 w3 + 2 w1 w2 w3 + w2^2 w3 appearing in
/// the third-order expansion of a 3-substep explicit path (target 1/3: it is
/// twice the h^3 f^2 f_yy coefficient of the scheme, matched against 1/6).
Cplx third_order_coupling(std::span<const Cplx> w);

/// Weight multiset of the n-substep path with e_k = 1/k! for k = 1..n,
/// canonically sorted by (Re, Im).  Roots of the degree-n truncated-exponential
/// polynomial, found by companion-matrix eigenvalues and polished by Newton.
/// 1 <= n <= 12.
std::vector<Cplx> solve_linear_weights(int n);

/// All distinct orderings of solve_linear_weights(n) as paths (n! for distinct
/// weights), in lexicographic order of the weight sequence.  Beware: the count
/// grows factorially; n <= 12 is accepted but large n is enormous.
std::vector<ComplexPath> solve_linear_path(int n);

/// Residuals of the order conditions the path claims.
///
/// relaxed == false:
///   LinearOnly / BackwardEuler: e_k - 1/k! for k = 1..order.
///   Nonlinear: order <= 2 -> e_k - 1/k!; order == 3 (3 substeps) -> the four
///     scalar non-autonomous conditions (e_1, e_2, e_3, coupling).
///   ImplicitMidpoint: order must equal 2n; e_k - 2^k p_k with p the (n,n)
///     Pade numerator coefficients.
/// relaxed == true (3 substeps, order 3 only): e_1, e_2 exact plus
///   Re(e_3) = 1/6 and Re(coupling) = 1/3.
/// Unsupported combinations throw CapabilityError.
PathResidualReport verify_path(const ComplexPath& path, int order, bool relaxed);

struct PathSolveOptions {
  std::uint64_t seed = 0;
  int restarts = 100;      // random Newton starts
  double box_lo = -2.0;    // start box, per real coordinate
  double box_hi = 2.0;
  double dedupe_tol = 1e-6;
};

/// 3-substep paths satisfying the relaxed third-order conditions: the two
/// qualifying orderings of the linear weights plus whatever a multistart
/// damped Newton search finds.  Deduplicated, canonically sorted.
std::vector<ComplexPath> solve_relaxed_path3(const PathSolveOptions& opts = {});

/// 2-substep paths matching a problem-specific cubic expansion.  Targets are
/// the normalized conditions  w1 + w2 = c1,  2 w1 w2 = c2,  w1^2 w2 = c3
/// (e.g. c = (1,1,1) reproduces the third-order path for dy/dt = -y^2).
/// relaxed == true matches only the real parts of the order-2 and order-3
/// conditions (order 1 stays exact via elimination w2 = c1 - w1).
/// Throws NumericError if no solution reaches residual 1e-10 in the budget.
std::vector<ComplexPath> solve_problem_specific_path(const std::array<Cplx, 3>& expansion_coeffs,
                                                     bool relaxed,
                                                     const PathSolveOptions& opts = {});

/// Named catalog of the paths used throughout the project.  Rebuilt from the
/// solvers / closed forms on first use.
const std::map<std::string, ComplexPath>& path_library();

/// Lookup helper; throws NotFoundError with the list of known names.
const ComplexPath& library_path(const std::string& name);

nlohmann::json path_to_json(const ComplexPath& path);
ComplexPath path_from_json(const nlohmann::json& j);

/// Lexicographic (Re, Im) comparison, the canonical weight/path ordering.
bool cplx_less(const Cplx& a, const Cplx& b);
bool weights_less(const std::vector<Cplx>& a, const std::vector<Cplx>& b);

} // namespace ctstep
