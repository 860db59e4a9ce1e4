#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "ctstep/errors.hpp"
#include "ctstep/integrators.hpp"
#include "ctstep/order_conditions.hpp"
#include "ctstep/problems.hpp"
#include "ctstep/rng.hpp"
#include "ctstep/stability.hpp"

using namespace ctstep;

namespace {

double final_error(const IntegrationResult& r, const OdeProblem& p, double t_end) {
  return (r.final_state() - p.exact(t_end)).cwiseAbs().maxCoeff();
}

// Least-squares slope of log(err) against log(dt).
double fit_slope(const std::vector<double>& dts, const std::vector<double>& errs) {
  const int n = static_cast<int>(dts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(dts[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double ladder_slope(const OdeProblem& p, const MethodSpec& m, double base, int rungs) {
  std::vector<double> dts, errs;
  double dt = base;
  for (int r = 0; r < rungs; ++r, dt /= 2) {
    dts.push_back(dt);
    errs.push_back(final_error(integrate(p, m, dt, p.t_end), p, p.t_end));
  }
  return fit_slope(dts, errs);
}

// y' = g(t) with g independent of y; integrating it exercises only the
// substep time-offset conventions.
OdeProblem quadrature_problem() {
  OdeProblem q;
  q.name = "quadrature";
  q.dimension = 1;
  q.y0 = StateVec::Zero(1);
  q.t_end = 0.5;
  q.rhs = [](Cplx t, const StateVec&) {
    StateVec out(1);
    out[0] = 2.0 * t;
    return out;
  };
  return q;
}

} // namespace

TEST_CASE("one explicit step on y'=y reproduces the path polynomial exactly") {
  const OdeProblem p = catalog_problem("dahlquist");
  const double z = 0.3;

  // n=2 conjugate pair: (1+w z)(1+conj(w) z) = 1 + z + z^2/2 with no rounding.
  const IntegrationResult r2 = integrate(p, method_named("complex-2-linear"), z, z);
  CHECK(std::abs(r2.final_state()[0] - Cplx(1.0 + z + z * z / 2.0)) <= 1e-16);
  CHECK(std::abs(r2.final_state()[0].imag()) <= 1e-16);
  CHECK(r2.function_evaluations == 2);

  // Property: for random paths and complex lambda, one step equals the
  // stability polynomial evaluated at lambda*dt.
  Rng rng(902);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
    ComplexPath path;
    path.name = "random";
    Cplx sum = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      path.weights.emplace_back(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7));
      sum += path.weights.back();
    }
    path.weights.push_back(Cplx(1.0) - sum);
    const Cplx lambda(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    const double dt = rng.uniform(0.05, 0.4);
    OdeProblem dq = make_dahlquist(lambda);
    const StateVec y1 = euler_path_step(dq.rhs, Cplx(0.0), dq.y0, dt, path);
    const Cplx phi = evaluate(stability_function(path, StabilityVariant::Explicit), lambda * dt);
    CAPTURE(trial);
    CHECK(std::abs(y1[0] - phi) <= 1e-13 * std::max(1.0, std::abs(phi)));
  }
}

TEST_CASE("implicit one-step maps match their rational stability functions") {
  const OdeProblem p = catalog_problem("dahlquist");
  const double z = 0.3;

  const IntegrationResult rm = integrate(p, method_named("implicit-midpoint-2"), z, z);
  const Cplx pade22 = (1.0 + z / 2 + z * z / 12.0) / (1.0 - z / 2 + z * z / 12.0);
  CHECK(std::abs(rm.final_state()[0] - pade22) <= 1e-15);

  const MethodSpec be = method_named("backward-euler-3");
  const IntegrationResult rb = integrate(p, be, z, z);
  Cplx prod = 1.0;
  for (const Cplx w : be.scheme.weights) prod /= (1.0 - w * z);
  CHECK(std::abs(rb.final_state()[0] - prod) <= 1e-14);

  // single-weight midpoint = (1+z/2)/(1-z/2)
  SchemeDescriptor s;
  s.kind = SchemeKind::ImplicitMidpointPath;
  s.weights = {Cplx(1.0)};
  const IntegrationResult r1 = integrate(p, method_from_scheme(s, "mid-1"), z, z);
  CHECK(std::abs(r1.final_state()[0] - (1.0 + z / 2) / (1.0 - z / 2)) <= 1e-15);
}

TEST_CASE("substep time offsets follow the accumulated-weight convention") {
  // On y' = 2t every stepper reduces to a quadrature rule whose nodes expose
  // the time arguments passed to f.
  const OdeProblem q = quadrature_problem();
  const double dt = 0.5;

  // Euler path (w1, w2): y1 = 2*dt^2*(w2*w1) = dt^2 for the 2-step pair.
  const IntegrationResult rc = integrate(q, method_named("complex-2-linear"), dt, dt);
  CHECK(std::abs(rc.final_state()[0] - dt * dt) <= 1e-16);

  // Implicit midpoint, single weight: node at dt/2, weight dt -> exact dt^2.
  SchemeDescriptor sm;
  sm.kind = SchemeKind::ImplicitMidpointPath;
  sm.weights = {Cplx(1.0)};
  const IntegrationResult rmq = integrate(q, method_from_scheme(sm, "mid-1"), dt, dt);
  CHECK(std::abs(rmq.final_state()[0] - dt * dt) <= 1e-16);

  // Backward Euler, single weight: node at dt -> 2*dt^2.
  SchemeDescriptor sb;
  sb.kind = SchemeKind::BackwardEulerPath;
  sb.weights = {Cplx(1.0)};
  const IntegrationResult rbq = integrate(q, method_from_scheme(sb, "be-1"), dt, dt);
  CHECK(std::abs(rbq.final_state()[0] - 2.0 * dt * dt) <= 1e-16);
}

TEST_CASE("rhs with no state dependence needs exactly one Newton correction") {
  const OdeProblem q = quadrature_problem();
  SchemeDescriptor sm;
  sm.kind = SchemeKind::ImplicitMidpointPath;
  sm.weights = {Cplx(1.0)};
  const IntegrationResult r = integrate(q, method_from_scheme(sm, "mid-1"), 0.5, 0.5);
  CHECK(r.newton_iterations_total == 1);

  // f identically zero: the initial iterate already satisfies the equation.
  OdeProblem zero = q;
  zero.rhs = [](Cplx, const StateVec& y) { return StateVec(StateVec::Zero(y.size())); };
  const IntegrationResult rz =
      integrate(zero, method_named("implicit-midpoint-2"), 0.25, 0.5);
  CHECK(rz.newton_iterations_total == 0);
  CHECK((rz.final_state() - zero.y0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reference one-step maps on y'=y match their Taylor truncations") {
  const OdeProblem p = catalog_problem("dahlquist");
  const double z = 0.3;
  const Cplx t2 = 1.0 + z + z * z / 2.0;
  const Cplx t3 = t2 + z * z * z / 6.0;
  const Cplx t4 = t3 + z * z * z * z / 24.0;

  auto one = [&](const char* name) { return integrate(p, method_named(name), z, z); };

  const IntegrationResult ral = one("ralston-rk3");
  CHECK(std::abs(ral.final_state()[0] - t3) <= 1e-16);
  CHECK(ral.function_evaluations == 3);

  const IntegrationResult mp = one("midpoint-rk2");
  CHECK(std::abs(mp.final_state()[0] - t2) <= 1e-16);
  CHECK(mp.function_evaluations == 2);

  const IntegrationResult ssp = one("ssprk2");
  CHECK(std::abs(ssp.final_state()[0] - t2) <= 1e-16);
  CHECK(ssp.function_evaluations == 2);

  const IntegrationResult r4 = one("rk4");
  CHECK(std::abs(r4.final_state()[0] - t4) <= 1e-16);
  CHECK(r4.function_evaluations == 4);

  // Tableau sanity: Ralston's nodes and the classical weights.
  const ButcherTableau& tab = method_named("ralston-rk3").tableau;
  REQUIRE(tab.stages() == 3);
  CHECK(tab.c == std::vector<double>{0.0, 0.5, 0.75});
  CHECK(tab.b == std::vector<double>{2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0});
  CHECK(tab.order == 3);
}

TEST_CASE("function evaluations are counted exactly") {
  const OdeProblem p = catalog_problem("shm");
  for (const auto& [name, expected] :
       std::vector<std::pair<const char*, long long>>{{"euler-1", 1},
                                                      {"complex-3-linear", 3},
                                                      {"ralston-rk3", 3},
                                                      {"rk4", 4}}) {
    CAPTURE(name);
    const IntegrationResult r = integrate(p, method_named(name), 0.1, 1.0);
    CHECK(r.function_evaluations == 10 * expected);
    CHECK(evals_per_step(method_named(name)) == expected);
  }
  CHECK_THROWS_AS(evals_per_step(method_named("implicit-midpoint-2")), CapabilityError);
  CHECK_THROWS_AS(evals_per_step(method_named("backward-euler-3")), CapabilityError);
}

TEST_CASE("conjugate-pair paths return real states without projection") {
  const OdeProblem p = catalog_problem("dahlquist");
  const MethodSpec m = method_named("complex-2-linear");
  CHECK(!m.wants_projection());
  const IntegrationResult r = integrate(p, m, 0.1, 1.0);
  CHECK(!r.projected);
  CHECK(std::abs(r.final_state()[0].imag()) < 1e-14);
}

TEST_CASE("projection-requiring methods refuse genuinely complex problems") {
  const OdeProblem sch = catalog_problem("schrodinger");
  CHECK_THROWS_AS(integrate(sch, method_named("complex-3-nonlinear"), 0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(integrate(sch, method_named("problem-y2-2step"), 0.1, 1.0), ConfigError);
  // the linear path does not project and is fine
  const IntegrationResult r = integrate(sch, method_named("complex-3-linear"), 0.01, 0.05);
  CHECK(!r.projected);
}

TEST_CASE("integrate validates its grid") {
  const OdeProblem p = catalog_problem("dahlquist");
  const MethodSpec m = method_named("euler-1");
  CHECK_THROWS_AS(integrate(p, m, 0.0, 1.0), ArgumentError);
  CHECK_THROWS_AS(integrate(p, m, -0.1, 1.0), ArgumentError);
  CHECK_THROWS_AS(integrate(p, m, 0.3, 1.0), ArgumentError);  // 0.3 does not divide 1
  CHECK_THROWS_AS(integrate(p, m, 0.1, -0.5), ArgumentError); // ends before t0

  const IntegrationResult r = integrate(p, m, 0.1, 0.0); // zero-length span
  CHECK(r.function_evaluations == 0);
  CHECK(r.times.back() == 0.0);
  CHECK((r.final_state() - p.y0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("divergent trajectories raise a blow-up error with location") {
  OdeProblem p = make_dahlquist(Cplx(30.0, 0.0));
  p.t_end = 50.0;
  try {
    integrate(p, method_named("euler-1"), 1.0, p.t_end);
    FAIL("expected BlowUpError");
  } catch (const BlowUpError& e) {
    CHECK(e.substep_index == 0);
    CHECK(e.t == 8.0); // |y| first exceeds 1e12 during the step that starts at t=8
  }
}

TEST_CASE("Newton failure surfaces as NumericError, not a silent result") {
  const OdeProblem p = catalog_problem("square");
  IntegrateOptions opts;
  opts.newton.max_iterations = 1; // one correction cannot finish a nonlinear solve
  CHECK_THROWS_AS(integrate(p, method_named("implicit-midpoint-2"), 0.1, 1.0, opts),
                  NumericError);
  CHECK_THROWS_AS([&] {
    IntegrateOptions bad;
    bad.newton.max_iterations = 0;
    integrate(p, method_named("implicit-midpoint-2"), 0.1, 1.0, bad);
  }(), ArgumentError);
}

TEST_CASE("stiff grids converge even when rounding noise exceeds the residual target") {
  // 400-cell heat operator: the rhs carries ~1e5 amplification of rounding
  // noise, so the Newton residual stalls slightly above tol. The stall must
  // be accepted, not reported as divergence.
  const OdeProblem heat = catalog_problem("heat");
  const MethodSpec mid = method_named("implicit-midpoint-2");
  std::vector<double> dts, errs;
  double dt = 0.05;
  long long newton_total = 0;
  for (int r = 0; r < 3; ++r, dt /= 2) {
    const IntegrationResult res = integrate(heat, mid, dt, heat.t_end);
    dts.push_back(dt);
    errs.push_back(final_error(res, heat, heat.t_end));
    newton_total += res.newton_iterations_total;
  }
  CHECK(errs[0] == doctest::Approx(3.0738e-05).epsilon(1e-3));
  const double slope = fit_slope(dts, errs);
  CHECK(slope > 3.9);
  CHECK(slope < 4.1);
  // linear problem with cached factorization: a couple of iterations per substep
  CHECK(newton_total <= 60);
}

TEST_CASE("convergence ladders reproduce the claimed orders") {
  const OdeProblem dq = catalog_problem("dahlquist");
  const double e1 = ladder_slope(dq, method_named("euler-1"), 0.25, 4);
  CHECK(e1 > 0.85);
  CHECK(e1 < 1.00);
  const double c2 = ladder_slope(dq, method_named("complex-2-linear"), 0.25, 4);
  CHECK(c2 > 1.85);
  CHECK(c2 < 2.00);
  const double c3 = ladder_slope(dq, method_named("complex-3-linear"), 0.25, 4);
  CHECK(c3 > 2.80);
  CHECK(c3 < 3.00);

  const OdeProblem shm = catalog_problem("shm");
  const double s2 = ladder_slope(shm, method_named("complex-2-linear"), 0.25, 4);
  CHECK(s2 > 1.85);
  CHECK(s2 < 2.00);
}

TEST_CASE("the problem-specific 2-step path gains an order on y'=-y^2") {
  const OdeProblem p = catalog_problem("square");
  const MethodSpec m = method_named("problem-y2-2step");
  CHECK(m.wants_projection());
  // local error after a single step decays like dt^4
  std::vector<double> errs;
  for (const double dt : {0.1, 0.05, 0.025}) {
    errs.push_back(final_error(integrate(p, m, dt, dt), p, dt));
  }
  CHECK(errs[0] / errs[1] > 14.0);
  CHECK(errs[0] / errs[1] < 17.0);
  CHECK(errs[1] / errs[2] > 14.0);
  CHECK(errs[1] / errs[2] < 17.0);
}

TEST_CASE("composite RK2->RK3 scheme: five evaluations and fifth-order decay") {
  const SchemeDescriptor comp = solve_composite_rk23();
  const MethodSpec m = method_from_scheme(comp, "composite-rk23");

  // identity on f = 0
  OdeProblem zero = quadrature_problem();
  zero.rhs = [](Cplx, const StateVec& y) { return StateVec(StateVec::Zero(y.size())); };
  const IntegrationResult rz = integrate(zero, m, 0.25, 0.5);
  CHECK((rz.final_state() - zero.y0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rz.function_evaluations == 10);

  const OdeProblem p = catalog_problem("square");
  std::vector<double> dts, errs;
  double dt = 0.2;
  for (int r = 0; r < 4; ++r, dt /= 2) {
    const IntegrationResult res = integrate(p, m, dt, p.t_end);
    CHECK(res.function_evaluations == 5 * std::llround(p.t_end / dt));
    dts.push_back(dt);
    errs.push_back(final_error(res, p, p.t_end));
  }
  const double slope = fit_slope(dts, errs);
  CHECK(slope > 5.0);
  CHECK(slope < 5.4);
}

TEST_CASE("method lookup covers references and library paths") {
  CHECK_THROWS_AS(method_named("nope"), NotFoundError);
  CHECK(method_named("rk4").is_reference);
  CHECK(method_named("ssprk2").tableau.stages() == 2);
  CHECK(!method_named("euler-1").is_reference);
  CHECK(method_named("complex-3-nonlinear").wants_projection());
  CHECK(method_named("backward-euler-3").scheme.kind == SchemeKind::BackwardEulerPath);
  CHECK(method_named("implicit-midpoint-2").scheme.kind == SchemeKind::ImplicitMidpointPath);
  CHECK(reference_methods().size() == 4);
}

TEST_CASE("trajectories record the full grid and serialize as CSV") {
  const OdeProblem p = catalog_problem("shm");
  IntegrateOptions opts;
  opts.record_trajectory = true;
  const IntegrationResult r = integrate(p, method_named("complex-2-linear"), 0.25, 1.0, opts);
  REQUIRE(r.times.size() == 5);
  CHECK(r.times.front() == 0.0);
  CHECK(r.times.back() == 1.0);
  REQUIRE(r.states.size() == 5);
  CHECK((r.states.front() - p.y0).cwiseAbs().maxCoeff() == 0.0);

  std::ostringstream os;
  write_trajectory_csv(r, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,re_0,im_0,re_1,im_1");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 5);

  // without recording, only the endpoints are kept
  const IntegrationResult rf = integrate(p, method_named("complex-2-linear"), 0.25, 1.0);
  REQUIRE(rf.times.size() == 2);
  CHECK(rf.times.back() == 1.0);
  CHECK((rf.final_state() - r.final_state()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical runs produce bitwise-identical states") {
  const OdeProblem p = catalog_problem("vdp");
  const IntegrationResult a = integrate(p, method_named("complex-3-nonlinear"), 0.05, 1.0);
  const IntegrationResult b = integrate(p, method_named("complex-3-nonlinear"), 0.05, 1.0);
  CHECK(a.function_evaluations == b.function_evaluations);
  for (Eigen::Index i = 0; i < a.final_state().size(); ++i) {
    CHECK(a.final_state()[i] == b.final_state()[i]);
  }
}
