#include "ctstep/order_conditions.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "ctstep/csv.hpp"
#include "ctstep/rng.hpp"
#include "ctstep/solvers.hpp"

namespace ctstep {

namespace {

Jet euler_path_jet(const std::vector<Cplx>& w, int P) {
  Jet y(P);
  Cplx c(0.0);
  for (Cplx wi : w) {
    y = jet_add(y, jet_mul_h(f_eval_jet(c, y), wi));
    c += wi;
  }
  return y;
}

Jet implicit_midpoint_path_jet(const std::vector<Cplx>& w, int P) {
  Jet y(P);
  Cplx c(0.0);
  for (Cplx wi : w) {
    const Jet base = y;
    auto step = [&](const Jet& ym) {
      Jet mid = jet_scale(jet_add(base, ym), Cplx(0.5));
      return jet_add(base, jet_mul_h(f_eval_jet(c + 0.5 * wi, mid), wi));
    };
    y = picard_fixed_point(step, base);
    c += wi;
  }
  return y;
}

Jet backward_euler_path_jet(const std::vector<Cplx>& w, int P) {
  Jet y(P);
  Cplx c(0.0);
  for (Cplx wi : w) {
    const Jet base = y;
    auto step = [&](const Jet& ym) {
      return jet_add(base, jet_mul_h(f_eval_jet(c + wi, ym), wi));
    };
    y = picard_fixed_point(step, base);
    c += wi;
  }
  return y;
}

Jet composite_rk23_jet(const CompositeRk23& q, int P) {
  const Jet y0(P); // state jet of y_n relative to itself: zero
  Jet k11 = f_eval_jet(Cplx(0.0), y0);
  Jet k12 = f_eval_jet(q.a121, jet_mul_h(k11, q.a121));
  Jet ym = jet_add(jet_mul_h(k11, q.b11), jet_mul_h(k12, q.b12));

  const Cplx tm = q.b11 + q.b12; // RK3 stage starts at the RK2 effective time
  Jet k21 = f_eval_jet(tm, ym);
  Jet k22 = f_eval_jet(tm + q.a221, jet_add(ym, jet_mul_h(k21, q.a221)));
  Jet k23 = f_eval_jet(tm + q.a231 + q.a232,
                       jet_add(ym, jet_add(jet_mul_h(k21, q.a231), jet_mul_h(k22, q.a232))));
  Jet out = jet_add(ym, jet_mul_h(k21, q.b21));
  out = jet_add(out, jet_mul_h(k22, q.b22));
  return jet_add(out, jet_mul_h(k23, q.b23));
}

} // namespace

Jet scheme_jet(const SchemeDescriptor& s, int P) {
  if (P < 1 || P > 6) throw ArgumentError("scheme_jet: P must be in [1, 6]");
  validate_scheme(s);
  switch (s.kind) {
    case SchemeKind::EulerPath: return euler_path_jet(s.weights, P);
    case SchemeKind::ImplicitMidpointPath: return implicit_midpoint_path_jet(s.weights, P);
    case SchemeKind::BackwardEulerPath: return backward_euler_path_jet(s.weights, P);
    case SchemeKind::CompositeRk23: return composite_rk23_jet(s.rk23, P);
  }
  throw ArgumentError("scheme_jet: unknown scheme kind");
}

OrderReport order_report(const SchemeDescriptor& s, int P, double tol,
                         JetRestriction restriction) {
  if (tol <= 0.0) throw ArgumentError("order_report: tol must be positive");
  const Jet exact = restrict_jet(exact_flow_jet(P, false), restriction);
  const Jet scheme = restrict_jet(scheme_jet(s, P), restriction);

  OrderReport rep;
  rep.P = P;
  rep.tol = tol;
  rep.restriction = restriction;
  rep.real_projection = s.real_projection;

  for (int k = 1; k <= P; ++k) {
    std::set<Monomial> monomials;
    for (const auto& [m, c] : exact.c[k]) monomials.insert(m);
    for (const auto& [m, c] : scheme.c[k]) monomials.insert(m);
    for (const Monomial& m : monomials) {
      MonomialResidual row;
      row.h_power = k;
      row.monomial = m;
      auto ie = exact.c[k].find(m);
      auto is = scheme.c[k].find(m);
      row.exact = ie == exact.c[k].end() ? Cplx(0.0) : ie->second;
      row.scheme = is == scheme.c[k].end() ? Cplx(0.0) : is->second;
      row.residual = row.exact - row.scheme;
      rep.rows.push_back(std::move(row));
    }
  }

  auto order_with = [&](auto&& magnitude) {
    int achieved = 0;
    for (int k = 1; k <= P; ++k) {
      bool ok = true;
      for (const auto& row : rep.rows) {
        if (row.h_power == k && magnitude(row.residual) >= tol) { ok = false; break; }
      }
      if (!ok) break;
      achieved = k;
    }
    return achieved;
  };
  rep.achieved_order = order_with([](Cplx r) { return std::abs(r); });
  rep.achieved_order_relaxed =
      s.real_projection ? order_with([](Cplx r) { return std::abs(r.real()); })
                        : rep.achieved_order;
  return rep;
}

void write_order_report_csv(const OrderReport& report, std::ostream& os) {
  os << "monomial,h_power,residual_re,residual_im\n";
  for (const auto& row : report.rows) {
    os << csv_escape(monomial_name(row.monomial)) << "," << row.h_power << ","
       << fmt17(row.residual.real()) << "," << fmt17(row.residual.imag()) << "\n";
  }
}

namespace {

// Unknown packing for the composite solve: the 8 coefficients other than b23
// as (Re, Im) pairs, or Re only in the real-restricted variant.
CompositeRk23 unpack_composite(const RealVec& x, bool real_restricted) {
  CompositeRk23 q;
  Cplx* slots[] = {&q.a121, &q.b11, &q.b12, &q.a221, &q.a231, &q.a232, &q.b21, &q.b22};
  for (int i = 0; i < 8; ++i) {
    *slots[i] = real_restricted ? Cplx(x[i], 0.0) : Cplx(x[2 * i], x[2 * i + 1]);
  }
  q.b23 = Cplx(1.0) - (q.b11 + q.b12 + q.b21 + q.b22); // return-to-real-axis closure
  return q;
}

} // namespace

SchemeDescriptor solve_composite_rk23(int P, const CompositeSolveOptions& opts) {
  if (P < 2 || P > 6) throw ArgumentError("solve_composite_rk23: P must be in [2, 6]");
  if (opts.restarts < 1) throw ArgumentError("solve_composite_rk23: needs at least one start");

  const Jet exact = exact_flow_jet(P, true);
  const int dim = opts.real_restricted ? 8 : 16;

  auto residual = [&](const RealVec& x) {
    const CompositeRk23 q = unpack_composite(x, opts.real_restricted);
    const Jet jet = restrict_jet(composite_rk23_jet(q, P), JetRestriction::Autonomous);
    std::vector<double> rows;
    for (int k = 2; k <= P; ++k) { // order 1 is settled by the b23 closure
      std::set<Monomial> monomials;
      for (const auto& [m, c] : exact.c[k]) monomials.insert(m);
      for (const auto& [m, c] : jet.c[k]) monomials.insert(m);
      for (const Monomial& m : monomials) {
        auto ie = exact.c[k].find(m);
        auto is = jet.c[k].find(m);
        const Cplx r = (ie == exact.c[k].end() ? Cplx(0.0) : ie->second) -
                       (is == jet.c[k].end() ? Cplx(0.0) : is->second);
        rows.push_back(r.real());
        if (k <= 2) rows.push_back(r.imag()); // exact below order 3, Re-only above
      }
    }
    RealVec f(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) f[static_cast<Eigen::Index>(i)] = rows[i];
    return f;
  };

  LmOptions lm;
  lm.target_residual_inf = 1e-13; // polish past the acceptance bar when possible
  Rng rng(opts.seed);
  double best = std::numeric_limits<double>::infinity();
  for (int start = 0; start < opts.restarts; ++start) {
    RealVec x0(dim);
    for (int i = 0; i < dim; ++i) x0[i] = rng.uniform(opts.start_lo, opts.start_hi);
    const LmResult res = levenberg_marquardt(residual, x0, lm);
    best = std::min(best, res.residual_inf);
    if (res.residual_inf < opts.accept_residual_inf) {
      return make_composite_scheme(unpack_composite(res.x, opts.real_restricted));
    }
  }
  throw CompositeSolveError("solve_composite_rk23: no start reached residual " +
                                fmt17(opts.accept_residual_inf) + " within " +
                                std::to_string(opts.restarts) + " starts (best " +
                                fmt17(best) + ")",
                            best, opts.restarts);
}

} // namespace ctstep
