#include "ctstep/integrators.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace ctstep {

namespace {

constexpr double kBlowUpNorm = 1e12;

void check_finite(const StateVec& y, int substep_index, double t) {
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() > kBlowUpNorm) {
    throw BlowUpError("solution magnitude exceeded " + std::to_string(kBlowUpNorm) +
                          " at substep " + std::to_string(substep_index) + ", t = " +
                          fmt17(t),
                      substep_index, t);
  }
}

StateMat fd_jacobian(const Rhs& f, Cplx t, const StateVec& u, const StateVec& fu,
                     double fd_step) {
  const auto n = u.size();
  const double h = fd_step * (1.0 + u.cwiseAbs().maxCoeff());
  StateMat j(n, n);
  StateVec up = u;
  for (Eigen::Index col = 0; col < n; ++col) {
    up[col] += h;
    j.col(col) = (f(t, up) - fu) / h;
    up[col] = u[col];
  }
  return j;
}

SparseMatC sparse_identity(Eigen::Index n) {
  SparseMatC id(n, n);
  id.setIdentity();
  return id;
}

/// Solves one implicit substep equation x = y + wdt f(t_arg, u(x)) where
/// u(x) = (y+x)/2 (midpoint, du/dx = 1/2) or x (backward Euler, du/dx = 1).
StateVec solve_substep(const Rhs& f, Cplx t_arg, const StateVec& y, Cplx wdt,
                       ImplicitVariant variant, const NewtonConfig& cfg,
                       const JacobianSource& jac, ImplicitWorkspace* workspace,
                       long long* newton_iterations, int substep_index, double t_real) {
  const double du_dx = variant == ImplicitVariant::Midpoint ? 0.5 : 1.0;
  const Cplx c = wdt * du_dx;
  const double tol = cfg.tolerance * (y.cwiseAbs().maxCoeff() + 1.0);
  const auto key = std::make_pair(c.real(), c.imag());
  const bool use_sparse = bool(jac.sparse);

  StateVec x = y;
  double residual_norm = 0.0;
  double prev_residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= cfg.max_iterations; ++iter) {
    const StateVec u = variant == ImplicitVariant::Midpoint ? StateVec((y + x) / 2.0) : x;
    const StateVec fu = f(t_arg, u);
    const StateVec r = x - y - wdt * fu;
    residual_norm = r.cwiseAbs().maxCoeff();
    if (residual_norm <= tol) return x;
    // Stagnation at the rhs evaluation-noise floor: on fine PDE grids the
    // stencil cancellation noise in f can exceed the nominal tolerance, and
    // no iterate can beat it.  Accept a non-improving residual that is still
    // far below scheme-error scales; reject genuine non-convergence.
    if (residual_norm >= 0.5 * prev_residual && residual_norm <= 1e4 * tol) return x;
    prev_residual = residual_norm;
    if (iter == cfg.max_iterations) break;

    if (use_sparse) {
      std::shared_ptr<Eigen::SparseLU<SparseMatC>> solver;
      if (jac.constant && workspace) {
        auto& slot = workspace->sparse_cache[key];
        if (!slot) {
          slot = std::make_shared<Eigen::SparseLU<SparseMatC>>();
          SparseMatC m = sparse_identity(y.size());
          m -= c * jac.sparse(t_arg, u);
          slot->compute(m);
          if (slot->info() != Eigen::Success) {
            throw NumericError("implicit step: sparse factorization failed");
          }
        }
        solver = slot;
      } else {
        solver = std::make_shared<Eigen::SparseLU<SparseMatC>>();
        SparseMatC m = sparse_identity(y.size());
        m -= c * jac.sparse(t_arg, u);
        solver->compute(m);
        if (solver->info() != Eigen::Success) {
          throw NumericError("implicit step: sparse factorization failed");
        }
      }
      x -= solver->solve(r).eval();
    } else {
      std::shared_ptr<Eigen::PartialPivLU<StateMat>> solver;
      if (jac.constant && workspace) {
        auto& slot = workspace->dense_cache[key];
        if (!slot) {
          const StateMat jf = jac.dense ? jac.dense(t_arg, u)
                                        : fd_jacobian(f, t_arg, u, fu, cfg.fd_step);
          slot = std::make_shared<Eigen::PartialPivLU<StateMat>>(
              StateMat(StateMat::Identity(y.size(), y.size()) - c * jf));
        }
        solver = slot;
      } else {
        const StateMat jf = jac.dense ? jac.dense(t_arg, u)
                                      : fd_jacobian(f, t_arg, u, fu, cfg.fd_step);
        solver = std::make_shared<Eigen::PartialPivLU<StateMat>>(
            StateMat(StateMat::Identity(y.size(), y.size()) - c * jf));
      }
      x -= solver->solve(r).eval();
    }
    if (newton_iterations) ++*newton_iterations;
    check_finite(x, substep_index, t_real);
  }
  throw NumericError("implicit substep Newton did not converge in " +
                     std::to_string(cfg.max_iterations) + " iterations (residual " +
                     fmt17(residual_norm) + ", tolerance " + fmt17(tol) + ")");
}

} // namespace

JacobianSource jacobian_of(const OdeProblem& problem) {
  return JacobianSource{problem.dense_jacobian, problem.sparse_jacobian,
                        problem.constant_jacobian};
}

void ImplicitWorkspace::clear() {
  dense_cache.clear();
  sparse_cache.clear();
}

StateVec euler_path_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                         const ComplexPath& path) {
  StateVec cur = y;
  Cplx prior(0.0);
  for (std::size_t i = 0; i < path.weights.size(); ++i) {
    const Cplx w = path.weights[i];
    cur += (w * dt) * f(t + prior * dt, cur);
    prior += w;
    check_finite(cur, static_cast<int>(i), t.real());
  }
  return cur;
}

StateVec implicit_path_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                            const ComplexPath& path, ImplicitVariant variant,
                            const NewtonConfig& cfg, const JacobianSource& jac,
                            ImplicitWorkspace* workspace, long long* newton_iterations) {
  if (cfg.tolerance <= 0.0 || cfg.max_iterations < 1) {
    throw ArgumentError("newton config: tolerance must be positive, max_iterations >= 1");
  }
  StateVec cur = y;
  Cplx prior(0.0);
  for (std::size_t i = 0; i < path.weights.size(); ++i) {
    const Cplx w = path.weights[i];
    const Cplx offset = variant == ImplicitVariant::Midpoint ? prior + w / 2.0 : prior + w;
    cur = solve_substep(f, t + offset * dt, cur, w * dt, variant, cfg, jac, workspace,
                        newton_iterations, static_cast<int>(i), t.real());
    prior += w;
    check_finite(cur, static_cast<int>(i), t.real());
  }
  return cur;
}

StateVec composite_rk23_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                             const SchemeDescriptor& scheme) {
  if (scheme.kind != SchemeKind::CompositeRk23) {
    throw ArgumentError("composite_rk23_step needs a composite-rk23 scheme");
  }
  const CompositeRk23& q = scheme.rk23;
  const StateVec k11 = f(t, y);
  const StateVec k12 = f(t + q.a121 * dt, StateVec(y + (q.a121 * dt) * k11));
  StateVec ym = y + (q.b11 * dt) * k11 + (q.b12 * dt) * k12;
  check_finite(ym, 0, t.real());

  const Cplx tm = t + (q.b11 + q.b12) * dt;
  const StateVec k21 = f(tm, ym);
  const StateVec k22 = f(tm + q.a221 * dt, StateVec(ym + (q.a221 * dt) * k21));
  const StateVec k23 = f(tm + (q.a231 + q.a232) * dt,
                         StateVec(ym + (q.a231 * dt) * k21 + (q.a232 * dt) * k22));
  StateVec out = ym + (q.b21 * dt) * k21 + (q.b22 * dt) * k22 + (q.b23 * dt) * k23;
  if (scheme.real_projection) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = Cplx(out[i].real(), 0.0);
  }
  check_finite(out, 1, t.real());
  return out;
}

StateVec rk_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                 const ButcherTableau& tableau) {
  const int s = tableau.stages();
  std::vector<StateVec> k(s);
  for (int i = 0; i < s; ++i) {
    StateVec u = y;
    for (int j = 0; j < i; ++j) {
      if (tableau.a[i][j] != 0.0) u += (tableau.a[i][j] * dt) * k[j];
    }
    k[i] = f(t + tableau.c[i] * dt, u);
  }
  StateVec out = y;
  for (int i = 0; i < s; ++i) {
    if (tableau.b[i] != 0.0) out += (tableau.b[i] * dt) * k[i];
  }
  check_finite(out, 0, t.real());
  return out;
}

const std::map<std::string, ButcherTableau>& reference_methods() {
  static const std::map<std::string, ButcherTableau> methods = [] {
    std::map<std::string, ButcherTableau> m;
    m["ralston-rk3"] = ButcherTableau{
        "ralston-rk3", {{}, {0.5}, {0.0, 0.75}}, {2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0},
        {0.0, 0.5, 0.75}, 3};
    m["midpoint-rk2"] =
        ButcherTableau{"midpoint-rk2", {{}, {0.5}}, {0.0, 1.0}, {0.0, 0.5}, 2};
    // Shu-Osher form u1 = u + dt f(u); u+ = (u + u1 + dt f(u1))/2 written as a tableau.
    m["ssprk2"] = ButcherTableau{"ssprk2", {{}, {1.0}}, {0.5, 0.5}, {0.0, 1.0}, 2};
    m["rk4"] = ButcherTableau{
        "rk4", {{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}},
        {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0}, {0.0, 0.5, 0.5, 1.0}, 4};
    return m;
  }();
  return methods;
}

MethodSpec method_from_path(const ComplexPath& path) {
  MethodSpec m;
  m.name = path.name;
  m.scheme = make_path_scheme(path);
  return m;
}

MethodSpec method_from_scheme(const SchemeDescriptor& scheme, const std::string& name) {
  validate_scheme(scheme);
  MethodSpec m;
  m.name = name;
  m.scheme = scheme;
  return m;
}

MethodSpec method_named(const std::string& name) {
  const auto& refs = reference_methods();
  if (const auto it = refs.find(name); it != refs.end()) {
    MethodSpec m;
    m.name = name;
    m.is_reference = true;
    m.tableau = it->second;
    return m;
  }
  if (path_library().count(name)) return method_from_path(library_path(name));
  std::string known;
  for (const auto& [k, v] : refs) known += k + ", ";
  for (const auto& [k, v] : path_library()) known += k + ", ";
  throw NotFoundError("unknown method '" + name + "' (known: " +
                      known.substr(0, known.size() - 2) + ")");
}

int evals_per_step(const MethodSpec& method) {
  if (method.is_reference) return method.tableau.stages();
  switch (method.scheme.kind) {
    case SchemeKind::EulerPath:
      return static_cast<int>(method.scheme.weights.size());
    case SchemeKind::CompositeRk23:
      return 5;
    default:
      throw CapabilityError("evals_per_step: implicit methods have data-dependent counts");
  }
}

IntegrationResult integrate(const OdeProblem& problem, const MethodSpec& method,
                            double dt, double t_end, const IntegrateOptions& options) {
  if (dt <= 0.0) throw ArgumentError("integrate: dt must be positive");
  const double span = t_end - problem.t0;
  if (span < 0.0) throw ArgumentError("integrate: t_end precedes the problem's t0");
  const long long steps = std::llround(span / dt);
  if (std::abs(steps * dt - span) > 1e-9 * std::max(1.0, std::abs(span))) {
    throw ArgumentError("integrate: dt = " + fmt17(dt) + " does not divide the span " +
                        fmt17(span));
  }

  const bool project = method.wants_projection();
  if (project && !problem.real_solution) {
    throw ConfigError("method '" + method.name + "' requires real projection, but '" +
                      problem.name + "' does not have a real solution");
  }

  IntegrationResult result;
  result.projected = project && steps > 0;
  Rhs counted = [&result, &problem](Cplx t, const StateVec& u) {
    ++result.function_evaluations;
    return problem.rhs(t, u);
  };
  // Finite-differenced Jacobians go through the counted rhs, so their
  // evaluations show up in the totals too.
  const JacobianSource jac = jacobian_of(problem);
  ImplicitWorkspace workspace;

  StateVec y = problem.y0;
  result.times.push_back(problem.t0);
  result.states.push_back(y);
  if (steps == 0) return result;

  ComplexPath path;
  if (!method.is_reference && method.scheme.kind != SchemeKind::CompositeRk23) {
    path.name = method.name;
    path.weights = method.scheme.weights;
  }

  for (long long k = 0; k < steps; ++k) {
    const Cplx t(problem.t0 + k * dt, 0.0);
    if (method.is_reference) {
      y = rk_step(counted, t, y, dt, method.tableau);
    } else {
      switch (method.scheme.kind) {
        case SchemeKind::EulerPath:
          y = euler_path_step(counted, t, y, dt, path);
          break;
        case SchemeKind::ImplicitMidpointPath:
          y = implicit_path_step(counted, t, y, dt, path, ImplicitVariant::Midpoint,
                                 options.newton, jac, &workspace,
                                 &result.newton_iterations_total);
          break;
        case SchemeKind::BackwardEulerPath:
          y = implicit_path_step(counted, t, y, dt, path, ImplicitVariant::BackwardEuler,
                                 options.newton, jac, &workspace,
                                 &result.newton_iterations_total);
          break;
        case SchemeKind::CompositeRk23:
          y = composite_rk23_step(counted, t, y, dt, method.scheme);
          break;
      }
    }
    if (project) {
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = Cplx(y[i].real(), 0.0);
    }
    const bool last = k + 1 == steps;
    if (options.record_trajectory || last) {
      result.times.push_back(last ? t_end : problem.t0 + (k + 1) * dt);
      result.states.push_back(y);
    }
  }
  return result;
}

void write_trajectory_csv(const IntegrationResult& result, std::ostream& os) {
  const auto n = result.states.empty() ? 0 : result.states.front().size();
  os << "t";
  for (Eigen::Index j = 0; j < n; ++j) os << ",re_" << j << ",im_" << j;
  os << "\n";
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    os << fmt17(result.times[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      os << "," << fmt17(result.states[i][j].real()) << ","
         << fmt17(result.states[i][j].imag());
    }
    os << "\n";
  }
}

} // namespace ctstep
