#include "ctstep/ssp.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "ctstep/errors.hpp"

namespace ctstep {

namespace {

// One macro step of an explicit method as a scalar map h -> u_{n+1},
// specialized away from the vector integrators because the monotonicity scan
// evaluates it millions of times.
std::function<Cplx(double)> one_step_map(const MethodSpec& method, const ScalarRhs& f,
                                         Cplx u0) {
  if (method.is_reference) {
    const ButcherTableau tab = method.tableau;
    return [tab, &f, u0](double h) {
      std::vector<Cplx> k(tab.stages());
      for (int i = 0; i < tab.stages(); ++i) {
        Cplx yi = u0;
        for (int j = 0; j < i; ++j) yi += h * tab.a[i][j] * k[j];
        k[i] = f(yi);
      }
      Cplx out = u0;
      for (int i = 0; i < tab.stages(); ++i) out += h * tab.b[i] * k[i];
      return out;
    };
  }
  const SchemeDescriptor scheme = method.scheme;
  const bool project = method.wants_projection();
  switch (scheme.kind) {
    case SchemeKind::EulerPath: {
      return [scheme, &f, u0, project](double h) {
        Cplx u = u0;
        for (const Cplx w : scheme.weights) u += w * h * f(u);
        return project ? Cplx(u.real(), 0.0) : u;
      };
    }
    case SchemeKind::CompositeRk23: {
      const CompositeRk23 q = scheme.rk23;
      return [q, &f, u0, project](double h) {
        const Cplx k11 = f(u0);
        const Cplx k12 = f(u0 + h * q.a121 * k11);
        const Cplx ym = u0 + h * (q.b11 * k11 + q.b12 * k12);
        const Cplx k21 = f(ym);
        const Cplx k22 = f(ym + h * q.a221 * k21);
        const Cplx k23 = f(ym + h * (q.a231 * k21 + q.a232 * k22));
        const Cplx out = ym + h * (q.b21 * k21 + q.b22 * k22 + q.b23 * k23);
        return project ? Cplx(out.real(), 0.0) : out;
      };
    }
    default:
      throw CapabilityError("max_ssp_step: explicit methods only, '" + method.name +
                            "' is implicit");
  }
}

} // namespace

FeSspBound fe_ssp_bound(const ScalarRhs& f, double u) {
  if (u == 0.0) return {0.0, true};
  const Cplx fu = f(Cplx(u, 0.0));
  if (fu == Cplx(0.0)) return {0.0, true};
  return {2.0 / std::abs(fu / u), false};
}

double strict_substep_bound(const ComplexPath& path, const ScalarRhs& f,
                            const std::vector<Cplx>& u_states) {
  if (u_states.size() != path.weights.size()) {
    throw ArgumentError("strict_substep_bound: need one state per substep");
  }
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.weights.size(); ++i) {
    const Cplx u = u_states[i];
    if (u == Cplx(0.0)) throw ArgumentError("strict_substep_bound: zero intermediate state");
    const Cplx r = f(u) / u;
    const Cplx wr = path.weights[i] * r;
    const double denom = std::norm(path.weights[i]) * std::norm(r);
    const double numer = -2.0 * wr.real();
    bound = std::min(bound, std::max(0.0, numer / denom));
  }
  return bound;
}

SspResult max_ssp_step(const MethodSpec& method, double u_n, const ScalarRhs& f,
                       const SspOptions& opts) {
  if (u_n == 0.0) throw ArgumentError("max_ssp_step: u_n must be nonzero");
  if (opts.cap <= 0.0 || opts.scan_points < 2) {
    throw ArgumentError("max_ssp_step: cap must be positive, scan_points >= 2");
  }
  const auto step = one_step_map(method, f, Cplx(u_n, 0.0));
  const double base = std::abs(u_n);
  const auto violates = [&](double h) { return std::abs(step(h)) > base; };

  const double dh = opts.cap / opts.scan_points;
  for (int k = 1; k <= opts.scan_points; ++k) {
    if (!violates(k * dh)) continue;
    if (k == 1) return {0.0, false, true};
    double lo = (k - 1) * dh, hi = k * dh;
    // tolerance scales with the bracket so the loop terminates even when the
    // cap (and hence h) is far above 1, where ulp(h) > bisect_tol
    while (hi - lo > opts.bisect_tol * std::max(1.0, lo)) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (violates(mid) ? hi : lo) = mid;
    }
    return {lo, false, false};
  }
  return {opts.cap, true, false};
}

SspCurve ssp_curve(const ScalarRhs& f, int samples, double u_lo, double u_hi,
                   const SspOptions& base, double cap_factor) {
  if (samples < 2 || u_lo <= 0.0 || u_hi <= u_lo) {
    throw ArgumentError("ssp_curve: need samples >= 2 and 0 < u_lo < u_hi");
  }

  const auto& lib = path_library();
  const std::vector<Cplx> pair = lib.at("complex-2-linear").weights;
  SchemeDescriptor fwd;
  fwd.kind = SchemeKind::EulerPath;
  fwd.weights = pair;
  fwd.real_projection = true;
  SchemeDescriptor rev = fwd;
  rev.weights = {pair[1], pair[0]};

  const std::vector<MethodSpec> methods = {
      method_named("midpoint-rk2"),
      method_named("ssprk2"),
      method_from_scheme(fwd, "complex-2"),
      method_from_scheme(rev, "complex-2-swapped"),
  };

  SspCurve curve;
  for (const MethodSpec& m : methods) curve.methods.push_back(m.name);
  curve.values.resize(methods.size());
  const double ratio = u_hi / u_lo;
  for (int k = 0; k < samples; ++k) {
    const double u = u_lo * std::pow(ratio, double(k) / (samples - 1));
    curve.u.push_back(u);
    SspOptions opts = base;
    const FeSspBound fe = fe_ssp_bound(f, u);
    if (!fe.unbounded) opts.cap = std::max(base.cap, cap_factor * fe.value);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      curve.values[m].push_back(max_ssp_step(methods[m], u, f, opts));
    }
  }
  return curve;
}

void write_ssp_csv(const SspCurve& curve, std::ostream& os) {
  os << "u_n";
  for (const std::string& name : curve.methods) os << "," << name;
  os << "\n";
  for (std::size_t k = 0; k < curve.u.size(); ++k) {
    os << fmt17(curve.u[k]);
    for (std::size_t m = 0; m < curve.values.size(); ++m) {
      os << "," << fmt17(curve.values[m][k].max_step);
    }
    os << "\n";
  }
}

} // namespace ctstep
