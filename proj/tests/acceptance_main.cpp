// Acceptance harness: exercises the end-to-end claims of the library on the
// catalog problems and prints one PASS/FAIL line per criterion.  Exit status
// is the number of failed criteria.  Tolerances are pinned here, next to the
// measurement that justifies them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "ctstep/errors.hpp"
#include "ctstep/experiments.hpp"
#include "ctstep/integrators.hpp"
#include "ctstep/jets.hpp"
#include "ctstep/order_conditions.hpp"
#include "ctstep/paths.hpp"
#include "ctstep/problems.hpp"
#include "ctstep/scheme.hpp"
#include "ctstep/ssp.hpp"
#include "ctstep/stability.hpp"

using namespace ctstep;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %2d [%s] %s — %s\n", id, ok ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Final states of the problems without a closed form, integrated once with
// rk4 at dt = 1e-6 and cached across criteria.
const StateVec& reference_final(const OdeProblem& p) {
  static std::map<std::string, StateVec> cache;
  auto it = cache.find(p.name);
  if (it == cache.end()) {
    const IntegrationResult r = integrate(p, method_named("rk4"), 1e-6, p.t_end);
    it = cache.emplace(p.name, r.final_state()).first;
  }
  return it->second;
}

double final_error(const OdeProblem& p, const MethodSpec& m, double dt) {
  const StateVec ref = p.exact ? p.exact(p.t_end) : reference_final(p);
  const IntegrationResult r = integrate(p, m, dt, p.t_end);
  return (r.final_state() - ref).cwiseAbs().maxCoeff();
}

// Ladder slopes are shared between criteria (1, 2, and 10 reuse pairs).
double ladder_slope(const OdeProblem& p, const MethodSpec& m, double base, int count) {
  static std::map<std::tuple<std::string, std::string, double, int>, double> cache;
  const auto key = std::make_tuple(p.name, m.name, base, count);
  auto it = cache.find(key);
  if (it == cache.end()) {
    std::vector<double> dts, errs;
    double dt = base;
    for (int r = 0; r < count; ++r, dt /= 2) {
      dts.push_back(dt);
      errs.push_back(final_error(p, m, dt));
    }
    it = cache.emplace(key, estimate_order(dts, errs)).first;
  }
  return it->second;
}

struct SlopeCheck {
  std::string problem;
  std::string method;
  double base;
  int count;
  double target;
  double tol;
};

// Worst deviation across a batch of slope fits; all must land in band.
bool run_slope_batch(const std::vector<SlopeCheck>& checks, std::string& detail) {
  bool ok = true;
  double worst = -1.0;
  std::string worst_label;
  for (const auto& c : checks) {
    const double slope =
        ladder_slope(catalog_problem(c.problem), method_named(c.method), c.base, c.count);
    const double dev = std::abs(slope - c.target);
    if (dev > worst) {
      worst = dev;
      worst_label = c.problem + "/" + c.method + " slope " + fmt(slope);
    }
    ok = ok && dev <= c.tol;
  }
  detail = std::to_string(checks.size()) + " ladders, worst " + worst_label + " (dev " +
           fmt(worst) + ")";
  return ok;
}

void criterion_1_convergence() {
  const std::vector<SlopeCheck> checks = {
      {"dahlquist", "euler-1", 0.25, 7, 1.0, 0.15},
      {"dahlquist", "complex-2-linear", 0.25, 7, 2.0, 0.15},
      {"dahlquist", "complex-3-linear", 0.25, 7, 3.0, 0.15},
      {"shm", "euler-1", 0.25, 7, 1.0, 0.15},
      {"shm", "complex-2-linear", 0.25, 7, 2.0, 0.15},
      {"shm", "complex-3-linear", 0.25, 7, 3.0, 0.15},
      {"square", "complex-3-nonlinear", 0.25, 7, 3.0, 0.25},
      {"exp", "complex-3-nonlinear", 0.125, 7, 3.0, 0.25},
      {"nlsin", "complex-3-nonlinear", 0.125, 7, 3.0, 0.25},
      {"vdp", "complex-3-nonlinear", 0.125, 7, 3.0, 0.25},
      {"burgers", "complex-3-nonlinear", 0.0125, 7, 3.0, 0.25},
      {"wave", "complex-3-linear", 0.025, 7, 3.0, 0.2},
  };
  std::string detail;
  const bool ok = run_slope_batch(checks, detail);
  report(1, "convergence orders across the catalog", ok, detail);
}

void criterion_2_problem_specific_path() {
  const double slope =
      ladder_slope(catalog_problem("square"), method_named("problem-y2-2step"), 0.25, 7);
  report(2, "2-step path tuned to the quadratic decay problem", std::abs(slope - 3.0) <= 0.2,
         "slope " + fmt(slope) + " (target 3.0 +- 0.2)");
}

void criterion_3_implicit() {
  const OdeProblem heat10k = make_heat_problem(10000);
  const double mid_heat =
      ladder_slope(heat10k, method_named("implicit-midpoint-2"), 0.05, 7);
  const double mid_vdp =
      ladder_slope(catalog_problem("vdp-mu10"), method_named("implicit-midpoint-2"), 0.125, 4);
  const double be_heat =
      ladder_slope(heat10k, method_named("backward-euler-3"), 0.025, 5);
  const bool ok = std::abs(mid_heat - 4.0) <= 0.25 && std::abs(mid_vdp - 4.0) <= 0.25 &&
                  std::abs(be_heat - 3.0) <= 0.2;
  report(3, "implicit paths on stiff problems", ok,
         "midpoint heat-10k " + fmt(mid_heat) + ", midpoint vdp-mu10 " + fmt(mid_vdp) +
             ", backward-euler heat-10k " + fmt(be_heat));
}

void criterion_4_order_barrier() {
  const SchemeDescriptor scheme = solve_composite_rk23(5);
  const OrderReport rep = order_report(scheme, 5, 1e-8, JetRestriction::Autonomous);
  double residual = 0.0;
  for (const auto& row : rep.rows) {
    if (row.h_power > 5) continue;
    residual = std::max(residual, std::abs(row.residual.real()));
  }
  const bool residual_ok = residual < 1e-10;

  const MethodSpec m = method_from_scheme(scheme, "composite-rk23");
  const double s_square = ladder_slope(catalog_problem("square"), m, 0.2, 7);
  const double s_exp = ladder_slope(catalog_problem("exp"), m, 0.2, 7);
  const bool slopes_ok = std::abs(s_square - 5.0) <= 0.25 && std::abs(s_exp - 5.0) <= 0.25;

  const IntegrationResult run = integrate(catalog_problem("square"), m, 0.2, 1.0);
  const bool evals_ok = evals_per_step(m) == 5 && run.function_evaluations == 5 * 5;

  bool negative_ok = false;
  double best_real = 0.0;
  try {
    CompositeSolveOptions opt;
    opt.seed = 7;
    opt.restarts = 50;
    opt.accept_residual_inf = 1e-6;
    opt.real_restricted = true;
    (void)solve_composite_rk23(5, opt);
  } catch (const CompositeSolveError& e) {
    negative_ok = e.best_residual > 1e-6;
    best_real = e.best_residual;
  }

  report(4, "fifth order from five evaluations needs complex weights",
         residual_ok && slopes_ok && evals_ok && negative_ok,
         "residual " + fmt(residual) + ", slopes " + fmt(s_square) + "/" + fmt(s_exp) +
             ", 5 evals/step, real-restricted best " + fmt(best_real));
}

void criterion_5_jet_imaginary_error() {
  const OrderReport rep =
      order_report(make_path_scheme(library_path("implicit-midpoint-2")), 4, 1e-10);
  double max_re = 0.0, max_im = 0.0;
  for (const auto& row : rep.rows) {
    if (row.h_power != 4) continue;
    max_re = std::max(max_re, std::abs(row.residual.real()));
    max_im = std::max(max_im, std::abs(row.residual.imag()));
  }
  report(5, "midpoint pair's h^4 truncation error is purely imaginary",
         max_re < 1e-12 && max_im > 1e-3,
         "max |Re| " + fmt(max_re) + ", max |Im| " + fmt(max_im));
}

void criterion_6_real_weights_bound() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int violations = 0;
  double max_e2 = -1e300;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 2 + trial % 5;
    std::vector<double> w(static_cast<size_t>(n));
    double sum = 0.0;
    do {
      sum = 0.0;
      for (double& x : w) {
        x = unit(rng);
        sum += x;
      }
    } while (std::abs(sum) < 1e-6);
    double sq = 0.0;
    for (double& x : w) {
      x /= sum;
      sq += x * x;
    }
    const double e2 = (1.0 - sq) / 2.0;
    max_e2 = std::max(max_e2, e2);
    if (!(e2 < 0.5)) ++violations;
  }
  report(6, "no real weight vector reaches e_2 = 1/2", violations == 0,
         "10000 samples, largest e_2 " + fmt(max_e2));
}

void criterion_7_stability_extents() {
  const Cplx kRay(-1.0, -2.0);
  const auto cubic = [](Cplx c3) {
    return StabilityPolynomial{StabilityPolynomial::Kind::ExplicitPolynomial,
                               {Cplx(1.0), Cplx(1.0), Cplx(0.5), c3},
                               {},
                               {}};
  };

  const double euler_extent =
      ray_extent(stability_function(library_path("euler-1"), StabilityVariant::Explicit),
                 Cplx(-1.0, 0.0))
          .value;
  const bool euler_ok = std::abs(euler_extent - 2.0) <= 1e-8;

  const double classical_extent = ray_extent(cubic(Cplx(1.0 / 6.0)), Cplx(-1.0, 0.0)).value;
  const bool classical_ok = std::abs(classical_extent - 2.5127) <= 1e-3;

  StabilityOptimizeOptions oo;
  oo.seed = 11;
  oo.nm_starts = 8;
  const OptimizedPolynomial ray_real = optimize_free_coefficients(3, 2, kRay, false, oo);
  const bool k_ok = std::abs(ray_real.poly.coeff[3].real() - 0.1134) < 5e-3;

  const double p1 = optimize_free_coefficients(3, 1, Cplx(-1.0, 0.0), false, oo).extent;
  const double p2 = optimize_free_coefficients(3, 2, Cplx(-1.0, 0.0), false, oo).extent;
  const double ratio = p1 / p2;
  const bool ratio_ok = ratio >= 2.5 && ratio <= 3.5;

  const double real_k_extent = ray_extent(cubic(Cplx(0.1134)), kRay).value;
  const double cplx_k_extent = ray_extent(cubic(Cplx(0.1134, -0.06)), kRay).value;
  const bool ray_ok = cplx_k_extent > real_k_extent;

  report(7, "stability extents and the complex coefficient advantage",
         euler_ok && classical_ok && k_ok && ratio_ok && ray_ok,
         "euler " + fmt(euler_extent) + ", cubic " + fmt(classical_extent) + ", k " +
             fmt(ray_real.poly.coeff[3].real()) + ", p1/p2 " + fmt(ratio) + ", ray " +
             fmt(cplx_k_extent) + ">" + fmt(real_k_extent));
}

void criterion_8_schrodinger() {
  const OdeProblem& p = catalog_problem("schrodinger");
  const MethodSpec rk3 = method_named("ralston-rk3");
  const MethodSpec c3 = method_named("complex-3-linear");
  bool evals_ok = true, ratio_ok = true;
  double finest_rk3 = 0.0, finest_c3 = 0.0, finest_ratio = 0.0;
  double dt = 1.2e-3;
  for (int r = 0; r < 4; ++r, dt /= 2) {
    const StateVec ref = p.exact(p.t_end);
    const IntegrationResult a = integrate(p, rk3, dt, p.t_end);
    const IntegrationResult b = integrate(p, c3, dt, p.t_end);
    evals_ok = evals_ok && a.function_evaluations == b.function_evaluations;
    finest_rk3 = (a.final_state() - ref).cwiseAbs().maxCoeff();
    finest_c3 = (b.final_state() - ref).cwiseAbs().maxCoeff();
    finest_ratio = finest_c3 / finest_rk3;
    ratio_ok = ratio_ok && finest_ratio >= 0.2 && finest_ratio <= 5.0;
  }
  const bool err_ok = finest_rk3 <= 1e-8 && finest_c3 <= 1e-8;
  report(8, "matched-budget dispersive comparison", evals_ok && ratio_ok && err_ok,
         "finest errors " + fmt(finest_rk3) + "/" + fmt(finest_c3) + ", ratio " +
             fmt(finest_ratio) + ", eval counts equal: " + (evals_ok ? "yes" : "no"));
}

void criterion_9_ssp() {
  const SspCurve curve =
      ssp_curve([](Cplx y) { return -y * std::exp(-y); }, 200, 0.1, 20.0);
  const auto index_of = [&](const std::string& name) {
    return static_cast<size_t>(std::find(curve.methods.begin(), curve.methods.end(), name) -
                               curve.methods.begin());
  };
  const size_t c2 = index_of("complex-2"), ssp = index_of("ssprk2");
  size_t wins = 0, total = 0;
  double min_ratio = 1e300;
  for (size_t k = 150; k < curve.u.size(); ++k) {
    ++total;
    const double a = curve.values[c2][k].max_step, b = curve.values[ssp][k].max_step;
    if (a > b) ++wins;
    if (b > 0.0) min_ratio = std::min(min_ratio, a / b);
  }
  report(9, "complex pair holds the larger monotone step at large u", wins == total,
         std::to_string(wins) + "/" + std::to_string(total) +
             " upper-quartile samples, min advantage " + fmt(min_ratio) + "x");
}

// --- criterion 10 ------------------------------------------------------------

// Jet residual of a scheme specialized to y' = -y^2 at y0 = 1 by substituting
// the numeric derivative values F00 = -1, F01 = -2, F02 = -2, higher = 0.
int substituted_jet_order(const SchemeDescriptor& scheme, int P) {
  const auto fval = [](int a, int b) -> Cplx {
    if (a > 0) return 0.0;
    if (b == 0) return -1.0;
    if (b == 1) return -2.0;
    if (b == 2) return -2.0;
    return 0.0;
  };
  const OrderReport rep = order_report(scheme, P, 1e-10, JetRestriction::Full);
  std::vector<Cplx> residual(static_cast<size_t>(P) + 1, Cplx(0.0));
  for (const auto& row : rep.rows) {
    Cplx value = row.residual;
    for (const int code : row.monomial) value *= fval(deriv_a(code), deriv_b(code));
    residual[static_cast<size_t>(row.h_power)] += value;
  }
  int order = 0;
  for (int k = 1; k <= P; ++k) {
    const double r = scheme.real_projection ? std::abs(residual[static_cast<size_t>(k)].real())
                                            : std::abs(residual[static_cast<size_t>(k)]);
    if (r >= 1e-9) break;
    order = k;
  }
  return order;
}

void criterion_10_oracle_equivalences() {
  // (a) one integrator step on y' = lambda*y equals the amplification factor
  std::mt19937_64 rng(902);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst_phi = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<Cplx> w(static_cast<size_t>(n));
    Cplx sum = 0.0;
    for (Cplx& x : w) {
      x = Cplx(unit(rng), unit(rng));
      sum += x;
    }
    for (Cplx& x : w) x /= sum;
    ComplexPath path;
    path.name = "random";
    path.weights = w;
    path.validity_class = PathClass::Nonlinear;
    const Cplx lambda(unit(rng), unit(rng));
    const double dt = 0.4;
    const OdeProblem p = make_dahlquist(lambda);
    const IntegrationResult r = integrate(p, method_from_path(path), dt, dt);
    const Cplx phi =
        evaluate(stability_function(path, StabilityVariant::Explicit), lambda * dt);
    worst_phi = std::max(worst_phi, std::abs(r.final_state()[0] - phi) / std::abs(phi));
  }
  const bool phi_ok = worst_phi <= 1e-13;

  // (b) weights recovered from the stability polynomial, as multisets
  double worst_roundtrip = 0.0;
  for (const auto& [name, path] : path_library()) {
    const ComplexPath back =
        weights_from_polynomial(stability_function(path, StabilityVariant::Explicit));
    std::vector<Cplx> a = path.weights, b = back.weights;
    std::sort(a.begin(), a.end(), cplx_less);
    std::sort(b.begin(), b.end(), cplx_less);
    for (size_t i = 0; i < a.size(); ++i)
      worst_roundtrip = std::max(worst_roundtrip, std::abs(a[i] - b[i]));
  }
  const bool roundtrip_ok = worst_roundtrip <= 1e-10;

  // (c) jet-certified order vs measured slope for every library path on its
  // compatible problems
  struct Pair {
    std::string path, problem;
    double base;
    int count;
  };
  const std::vector<Pair> pairs = {
      {"euler-1", "dahlquist", 0.25, 7},
      {"euler-1", "square", 0.25, 7},
      {"complex-2-linear", "dahlquist", 0.25, 7},
      {"complex-2-linear", "shm", 0.25, 7},
      {"complex-3-linear", "dahlquist", 0.25, 7},
      {"complex-3-linear", "shm", 0.25, 7},
      {"complex-3-linear", "wave", 0.025, 7},
      {"complex-3-linear", "schrodinger", 1.2e-3, 4},
      {"complex-3-nonlinear", "square", 0.25, 7},
      {"complex-3-nonlinear", "exp", 0.125, 7},
      {"complex-3-nonlinear", "nlsin", 0.125, 7},
      {"complex-3-nonlinear", "vdp", 0.125, 7},
      {"complex-3-nonlinear", "burgers", 0.0125, 7},
      {"complex-3-nonlinear-alt", "square", 0.25, 7},
      {"complex-3-nonlinear-alt", "exp", 0.125, 7},
      {"implicit-midpoint-2", "dahlquist", 0.25, 7},
      {"implicit-midpoint-2", "heat", 0.05, 4},
      {"implicit-midpoint-2", "vdp-mu10", 0.125, 4},
      {"backward-euler-3", "dahlquist", 0.25, 7},
      {"backward-euler-3", "heat", 0.0025, 4},
      {"problem-y2-2step", "square", 0.25, 7},
  };
  const auto restriction_for = [](const std::string& problem) {
    if (problem == "dahlquist" || problem == "shm" || problem == "wave" ||
        problem == "schrodinger" || problem == "heat")
      return JetRestriction::Linear;
    return JetRestriction::Autonomous;
  };
  bool jets_ok = true;
  double worst_dev = -1.0;
  std::string worst_label;
  for (const auto& pr : pairs) {
    const ComplexPath path = library_path(pr.path);
    const SchemeDescriptor scheme = make_path_scheme(path);
    const int jet_order =
        pr.path == "problem-y2-2step"
            ? substituted_jet_order(scheme, 4)
            : order_report(scheme, 5, 1e-10, restriction_for(pr.problem)).achieved_order_relaxed;
    const double slope =
        ladder_slope(catalog_problem(pr.problem), method_named(pr.path), pr.base, pr.count);
    const double dev = std::abs(slope - jet_order);
    if (dev > worst_dev) {
      worst_dev = dev;
      worst_label = pr.path + " on " + pr.problem + ": jet " + std::to_string(jet_order) +
                    " vs slope " + fmt(slope);
    }
    jets_ok = jets_ok && dev <= 0.25;
  }

  report(10, "independent oracles agree with the integrator", phi_ok && roundtrip_ok && jets_ok,
         "phi dev " + fmt(worst_phi) + ", weight round trip " + fmt(worst_roundtrip) + ", " +
             std::to_string(pairs.size()) + " jet/slope pairs, worst " + worst_label + " (dev " +
             fmt(worst_dev) + ")");
}

} // namespace

int main() {
  criterion_1_convergence();
  criterion_2_problem_specific_path();
  criterion_3_implicit();
  criterion_4_order_barrier();
  criterion_5_jet_imaginary_error();
  criterion_6_real_weights_bound();
  criterion_7_stability_extents();
  criterion_8_schrodinger();
  criterion_9_ssp();
  criterion_10_oracle_equivalences();
  if (g_failures == 0) {
    std::printf("all 10 acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  }
  return g_failures;
}
