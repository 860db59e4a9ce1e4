#include "ctstep/paths.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ctstep/rng.hpp"
#include "ctstep/solvers.hpp"

namespace ctstep {

bool cplx_less(const Cplx& a, const Cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

bool weights_less(const std::vector<Cplx>& a, const std::vector<Cplx>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), cplx_less);
}

std::string to_string(PathClass c) {
  switch (c) {
    case PathClass::LinearOnly: return "linear-only";
    case PathClass::Nonlinear: return "nonlinear";
    case PathClass::ImplicitMidpoint: return "implicit-midpoint";
    case PathClass::BackwardEuler: return "backward-euler";
    case PathClass::ProblemSpecific: return "problem-specific";
  }
  throw ArgumentError("unknown PathClass value");
}

PathClass path_class_from_string(const std::string& s) {
  if (s == "linear-only") return PathClass::LinearOnly;
  if (s == "nonlinear") return PathClass::Nonlinear;
  if (s == "implicit-midpoint") return PathClass::ImplicitMidpoint;
  if (s == "backward-euler") return PathClass::BackwardEuler;
  if (s == "problem-specific") return PathClass::ProblemSpecific;
  throw ArgumentError("unknown path class '" + s + "'");
}

Cplx elementary_symmetric(std::span<const Cplx> w, int k) {
  const int n = static_cast<int>(w.size());
  if (k < 0 || k > n) {
    throw ArgumentError("elementary_symmetric: k must be in [0, n], got k=" + std::to_string(k) +
                        " n=" + std::to_string(n));
  }
  // e[j] after processing i elements = e_j of the prefix.
  std::vector<Cplx> e(static_cast<size_t>(k) + 1, Cplx(0.0));
  e[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = std::min(k, i + 1); j >= 1; --j) {
      e[j] += w[i] * e[j - 1];
    }
  }
  return e[k];
}

Cplx third_order_coupling(std::span<const Cplx> w) {
  if (w.size() != 3) {
    throw ArgumentError("third_order_coupling needs exactly 3 weights");
  }
  const Cplx w1 = w[0], w2 = w[1], w3 = w[2];
  return w1 * w1 * w2 + w1 * w1 * w3 + 2.0 * w1 * w2 * w3 + w2 * w2 * w3;
}

namespace {

// Coefficients of the monic polynomial whose roots are the linear-path
// weights: prod(z - w_i) = sum_k (-1)^k z^{n-k} / k!.
// Stored as c[i] = coefficient of z^i, c[n] = 1.
std::vector<double> truncated_exp_poly(int n) {
  std::vector<double> c(static_cast<size_t>(n) + 1);
  double kfact = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) kfact *= k;
    c[n - k] = ((k % 2) ? -1.0 : 1.0) / kfact;
  }
  return c;
}

Cplx poly_eval(const std::vector<double>& c, Cplx z) {
  Cplx r(0.0);
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) r = r * z + c[i];
  return r;
}

Cplx poly_eval_deriv(const std::vector<double>& c, Cplx z) {
  Cplx r(0.0);
  for (int i = static_cast<int>(c.size()) - 1; i >= 1; --i) r = r * z + c[i] * static_cast<double>(i);
  return r;
}

// Eigenvalues of the companion matrix of a monic polynomial, Newton-polished.
std::vector<Cplx> poly_roots_monic(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) comp(i + 1, i) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
  std::vector<Cplx> roots(n);
  for (int i = 0; i < n; ++i) roots[i] = es.eigenvalues()[i];
  for (auto& z : roots) {
    for (int it = 0; it < 8; ++it) {
      Cplx p = poly_eval(c, z);
      Cplx dp = poly_eval_deriv(c, z);
      if (std::abs(dp) == 0.0) break;
      Cplx step = p / dp;
      z -= step;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(z))) break;
    }
    double scale = std::pow(std::max(1.0, std::abs(z)), n);
    if (!(std::abs(poly_eval(c, z)) < 1e-10 * scale)) {
      throw NumericError("polynomial root polish failed to converge");
    }
  }
  return roots;
}

// Real coefficients imply a conjugate-symmetric root set; enforce it exactly
// so downstream conjugate-closure checks are not tolerance games.
void canonicalize_conjugate_pairs(std::vector<Cplx>& roots) {
  const double snap = 1e-12;
  std::vector<int> pos, neg;
  for (int i = 0; i < static_cast<int>(roots.size()); ++i) {
    if (std::abs(roots[i].imag()) < snap * (1.0 + std::abs(roots[i]))) {
      roots[i] = Cplx(roots[i].real(), 0.0);
    } else if (roots[i].imag() > 0) {
      pos.push_back(i);
    } else {
      neg.push_back(i);
    }
  }
  if (pos.size() != neg.size()) return; // not pairable; leave as computed
  std::vector<bool> used(neg.size(), false);
  for (int ip : pos) {
    int best = -1;
    double bestd = 0.0;
    for (size_t j = 0; j < neg.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(roots[ip] - std::conj(roots[neg[j]]));
      if (best < 0 || d < bestd) {
        best = static_cast<int>(j);
        bestd = d;
      }
    }
    if (best < 0) return;
    used[best] = true;
    Cplx m = 0.5 * (roots[ip] + std::conj(roots[neg[best]]));
    roots[ip] = m;
    roots[neg[best]] = std::conj(m);
  }
}

} // namespace

std::vector<Cplx> solve_linear_weights(int n) {
  if (n < 1 || n > 12) {
    throw ArgumentError("solve_linear_weights: n must be in [1, 12], got " + std::to_string(n));
  }
  if (n == 1) return {Cplx(1.0)};
  auto roots = poly_roots_monic(truncated_exp_poly(n));
  canonicalize_conjugate_pairs(roots);
  std::sort(roots.begin(), roots.end(), cplx_less);
  return roots;
}

std::vector<ComplexPath> solve_linear_path(int n) {
  std::vector<Cplx> w = solve_linear_weights(n);
  std::vector<ComplexPath> out;
  // next_permutation over the sorted multiset enumerates every distinct
  // ordering exactly once, in lexicographic order.
  int idx = 0;
  do {
    ComplexPath p;
    p.name = "linear-" + std::to_string(n) + "-p" + std::to_string(idx++);
    p.weights = w;
    p.order_claim = n;
    p.validity_class = PathClass::LinearOnly;
    p.requires_real_projection = false;
    out.push_back(std::move(p));
  } while (std::next_permutation(w.begin(), w.end(), cplx_less));
  return out;
}

namespace {

double pade_numerator_coeff(int n, int j) {
  // (n,n) Pade numerator of exp(z): p_j = (2n-j)! n! / ((2n)! j! (n-j)!).
  auto fact = [](int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
  };
  return fact(2 * n - j) * fact(n) / (fact(2 * n) * fact(j) * fact(n - j));
}

double inv_factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return 1.0 / f;
}

} // namespace

PathResidualReport verify_path(const ComplexPath& path, int order, bool relaxed) {
  const auto& w = path.weights;
  const int n = path.steps();
  if (n == 0) throw ArgumentError("verify_path: empty path");
  if (order < 1) throw ArgumentError("verify_path: order must be >= 1");

  PathResidualReport rep;
  rep.relaxed = relaxed;
  auto add = [&rep](const std::string& label, Cplx r) {
    rep.condition_labels.push_back(label);
    rep.residuals.push_back(r);
    rep.max_abs = std::max(rep.max_abs, std::abs(r));
  };

  if (relaxed) {
    if (n != 3 || order != 3) {
      throw CapabilityError("relaxed verification is defined for 3-substep paths at order 3");
    }
    add("e1-1", elementary_symmetric(w, 1) - 1.0);
    add("e2-1/2", elementary_symmetric(w, 2) - 0.5);
    add("Re(e3)-1/6", Cplx(elementary_symmetric(w, 3).real() - 1.0 / 6.0, 0.0));
    add("Re(coupling)-1/3", Cplx(third_order_coupling(w).real() - 1.0 / 3.0, 0.0));
    return rep;
  }

  switch (path.validity_class) {
    case PathClass::LinearOnly:
    case PathClass::BackwardEuler: {
      for (int k = 1; k <= order; ++k) {
        Cplx ek = (k <= n) ? elementary_symmetric(w, k) : Cplx(0.0);
        add("e" + std::to_string(k) + "-1/" + std::to_string(k) + "!", ek - inv_factorial(k));
      }
      return rep;
    }
    case PathClass::Nonlinear: {
      if (order <= 2) {
        for (int k = 1; k <= order; ++k) {
          Cplx ek = (k <= n) ? elementary_symmetric(w, k) : Cplx(0.0);
          add("e" + std::to_string(k) + "-1/" + std::to_string(k) + "!", ek - inv_factorial(k));
        }
        return rep;
      }
      if (order == 3 && n == 3) {
        add("e1-1", elementary_symmetric(w, 1) - 1.0);
        add("e2-1/2", elementary_symmetric(w, 2) - 0.5);
        add("e3-1/6", elementary_symmetric(w, 3) - 1.0 / 6.0);
        add("coupling-1/3", third_order_coupling(w) - 1.0 / 3.0);
        return rep;
      }
      throw CapabilityError("nonlinear conditions above order 2 are only available for 3-substep paths at order 3");
    }
    case PathClass::ImplicitMidpoint: {
      if (order != 2 * n) {
        throw CapabilityError("implicit-midpoint paths are verified at their full order 2n");
      }
      for (int k = 1; k <= n; ++k) {
        double target = std::ldexp(pade_numerator_coeff(n, k), k); // 2^k p_k
        add("e" + std::to_string(k) + "-pade", elementary_symmetric(w, k) - target);
      }
      return rep;
    }
    case PathClass::ProblemSpecific:
      throw CapabilityError("problem-specific paths carry no generic order conditions to verify");
  }
  throw ArgumentError("verify_path: unknown validity class");
}

namespace {

// Real 6-dimensional system for the relaxed third-order conditions of a
// 3-substep path, unknowns (Re w1, Im w1, Re w2, Im w2, Re w3, Im w3).
RealVec relaxed3_residual(const RealVec& x) {
  std::array<Cplx, 3> w{Cplx(x[0], x[1]), Cplx(x[2], x[3]), Cplx(x[4], x[5])};
  Cplx e1 = elementary_symmetric(w, 1);
  Cplx e2 = elementary_symmetric(w, 2);
  Cplx e3 = elementary_symmetric(w, 3);
  Cplx cp = third_order_coupling(w);
  RealVec f(6);
  f << e1.real() - 1.0, e1.imag(), e2.real() - 0.5, e2.imag(), e3.real() - 1.0 / 6.0,
      cp.real() - 1.0 / 3.0;
  return f;
}

RealMat relaxed3_jacobian(const RealVec& x) {
  const Cplx w1(x[0], x[1]), w2(x[2], x[3]), w3(x[4], x[5]);
  const Cplx e1 = w1 + w2 + w3;
  // Holomorphic partials of the condition functions.
  std::array<Cplx, 3> d_e1{Cplx(1.0), Cplx(1.0), Cplx(1.0)};
  std::array<Cplx, 3> d_e2{e1 - w1, e1 - w2, e1 - w3};
  std::array<Cplx, 3> d_e3{w2 * w3, w1 * w3, w1 * w2};
  std::array<Cplx, 3> d_cp{2.0 * w1 * w2 + 2.0 * w1 * w3 + 2.0 * w2 * w3,
                           w1 * w1 + 2.0 * w1 * w3 + 2.0 * w2 * w3,
                           w1 * w1 + 2.0 * w1 * w2 + w2 * w2};
  RealMat jac(6, 6);
  for (int j = 0; j < 3; ++j) {
    // Row layout: Re e1, Im e1, Re e2, Im e2, Re e3, Re coupling.
    jac(0, 2 * j) = d_e1[j].real();
    jac(0, 2 * j + 1) = -d_e1[j].imag();
    jac(1, 2 * j) = d_e1[j].imag();
    jac(1, 2 * j + 1) = d_e1[j].real();
    jac(2, 2 * j) = d_e2[j].real();
    jac(2, 2 * j + 1) = -d_e2[j].imag();
    jac(3, 2 * j) = d_e2[j].imag();
    jac(3, 2 * j + 1) = d_e2[j].real();
    jac(4, 2 * j) = d_e3[j].real();
    jac(4, 2 * j + 1) = -d_e3[j].imag();
    jac(5, 2 * j) = d_cp[j].real();
    jac(5, 2 * j + 1) = -d_cp[j].imag();
  }
  return jac;
}

bool weights_close(const std::vector<Cplx>& a, const std::vector<Cplx>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

} // namespace

std::vector<ComplexPath> solve_relaxed_path3(const PathSolveOptions& opts) {
  std::vector<std::vector<Cplx>> found;
  auto insert_unique = [&](const std::vector<Cplx>& w) {
    for (const auto& g : found) {
      if (weights_close(g, w, opts.dedupe_tol)) return;
    }
    found.push_back(w);
  };

  // The orderings of the linear weights that already satisfy the relaxed
  // conditions are solutions by construction.
  for (const auto& perm : solve_linear_path(3)) {
    PathResidualReport rep = verify_path(perm, 3, /*relaxed=*/true);
    if (rep.max_abs < 1e-8) insert_unique(perm.weights);
  }

  Rng rng(opts.seed);
  NewtonOptions nopts;
  nopts.tol_inf = 1e-12;
  for (int s = 0; s < opts.restarts; ++s) {
    RealVec x0(6);
    for (int i = 0; i < 6; ++i) x0[i] = rng.uniform(opts.box_lo, opts.box_hi);
    NewtonResult nr = damped_newton(relaxed3_residual, relaxed3_jacobian, x0, nopts);
    if (!nr.converged) continue;
    std::vector<Cplx> w{Cplx(nr.x[0], nr.x[1]), Cplx(nr.x[2], nr.x[3]), Cplx(nr.x[4], nr.x[5])};
    insert_unique(w);
  }

  std::sort(found.begin(), found.end(), weights_less);
  std::vector<ComplexPath> out;
  int idx = 0;
  for (auto& w : found) {
    ComplexPath p;
    p.name = "relaxed-3-s" + std::to_string(idx++);
    p.weights = std::move(w);
    p.order_claim = 3;
    p.validity_class = PathClass::Nonlinear;
    p.requires_real_projection = true;
    if (verify_path(p, 3, /*relaxed=*/true).max_abs < 1e-8) out.push_back(std::move(p));
  }
  return out;
}

std::vector<ComplexPath> solve_problem_specific_path(const std::array<Cplx, 3>& c, bool relaxed,
                                                     const PathSolveOptions& opts) {
  // Eliminate w2 = c1 - w1 so the first-order condition holds exactly;
  // unknowns are (Re w1, Im w1).
  const Cplx c1 = c[0], c2 = c[1], c3 = c[2];
  auto conditions = [&](Cplx w1) {
    Cplx w2 = c1 - w1;
    return std::array<Cplx, 2>{2.0 * w1 * w2 - c2, w1 * w1 * w2 - c3};
  };
  auto derivs = [&](Cplx w1) {
    return std::array<Cplx, 2>{2.0 * c1 - 4.0 * w1, 2.0 * w1 * c1 - 3.0 * w1 * w1};
  };

  std::vector<std::vector<Cplx>> found;
  auto insert_unique = [&](const std::vector<Cplx>& w) {
    for (const auto& g : found) {
      if (weights_close(g, w, opts.dedupe_tol)) return;
    }
    found.push_back(w);
  };

  Rng rng(opts.seed);
  double best_residual = std::numeric_limits<double>::infinity();

  if (relaxed) {
    auto F = [&](const RealVec& x) {
      auto g = conditions(Cplx(x[0], x[1]));
      RealVec f(2);
      f << g[0].real(), g[1].real();
      return f;
    };
    auto J = [&](const RealVec& x) {
      auto d = derivs(Cplx(x[0], x[1]));
      RealMat jac(2, 2);
      jac << d[0].real(), -d[0].imag(), d[1].real(), -d[1].imag();
      return jac;
    };
    for (int s = 0; s < opts.restarts; ++s) {
      RealVec x0(2);
      x0 << rng.uniform(opts.box_lo, opts.box_hi), rng.uniform(opts.box_lo, opts.box_hi);
      NewtonResult nr = damped_newton(F, J, x0);
      best_residual = std::min(best_residual, nr.residual_inf);
      if (!nr.converged) continue;
      Cplx w1(nr.x[0], nr.x[1]);
      insert_unique({w1, c1 - w1});
    }
  } else {
    // All three conditions exact: generally overdetermined (4 real equations,
    // 2 unknowns); least squares either finds an exact match or reports the
    // best residual in the error.
    auto F = [&](const RealVec& x) {
      auto g = conditions(Cplx(x[0], x[1]));
      RealVec f(4);
      f << g[0].real(), g[0].imag(), g[1].real(), g[1].imag();
      return f;
    };
    LmOptions lopts;
    lopts.target_residual_inf = 1e-12;
    for (int s = 0; s < opts.restarts; ++s) {
      RealVec x0(2);
      x0 << rng.uniform(opts.box_lo, opts.box_hi), rng.uniform(opts.box_lo, opts.box_hi);
      LmResult lr = levenberg_marquardt(F, x0, lopts);
      best_residual = std::min(best_residual, lr.residual_inf);
      if (lr.residual_inf > 1e-10) continue;
      Cplx w1(lr.x[0], lr.x[1]);
      insert_unique({w1, c1 - w1});
    }
  }

  if (found.empty()) {
    std::ostringstream msg;
    msg << "solve_problem_specific_path: no solution in " << opts.restarts
        << " restarts (best residual " << best_residual << ")";
    throw NumericError(msg.str());
  }

  std::sort(found.begin(), found.end(), weights_less);
  std::vector<ComplexPath> out;
  int idx = 0;
  for (auto& w : found) {
    ComplexPath p;
    p.name = "problem-specific-s" + std::to_string(idx++);
    p.weights = std::move(w);
    p.order_claim = 3;
    p.validity_class = PathClass::ProblemSpecific;
    p.requires_real_projection = relaxed;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::map<std::string, ComplexPath> build_library() {
  std::map<std::string, ComplexPath> lib;
  auto put = [&lib](std::string name, std::vector<Cplx> w, int order, PathClass cls, bool proj) {
    ComplexPath p;
    p.name = name;
    p.weights = std::move(w);
    p.order_claim = order;
    p.validity_class = cls;
    p.requires_real_projection = proj;
    lib.emplace(std::move(name), std::move(p));
  };

  put("euler-1", {Cplx(1.0)}, 1, PathClass::Nonlinear, false);
  put("complex-2-linear", {Cplx(0.5, 0.5), Cplx(0.5, -0.5)}, 2, PathClass::LinearOnly, false);

  const std::vector<Cplx> w3 = solve_linear_weights(3);
  put("complex-3-linear", w3, 3, PathClass::LinearOnly, false);
  put("backward-euler-3", w3, 3, PathClass::BackwardEuler, false);

  // The two orderings of the linear weights that satisfy the relaxed
  // third-order conditions for nonlinear problems.
  std::vector<std::vector<Cplx>> nl;
  for (const auto& perm : solve_linear_path(3)) {
    if (verify_path(perm, 3, /*relaxed=*/true).max_abs < 1e-8) nl.push_back(perm.weights);
  }
  if (nl.size() != 2) throw NumericError("path library: expected exactly 2 relaxed orderings");
  put("complex-3-nonlinear", nl[0], 3, PathClass::Nonlinear, true);
  put("complex-3-nonlinear-alt", nl[1], 3, PathClass::Nonlinear, true);

  const double s3 = 0.5 * std::sqrt(1.0 / 3.0); // 1/(2 sqrt 3)
  put("implicit-midpoint-2", {Cplx(0.5, s3), Cplx(0.5, -s3)}, 4, PathClass::ImplicitMidpoint, true);

  const double s2 = std::sqrt(0.5); // 1/sqrt 2
  put("problem-y2-2step", {Cplx(1.0, -s2), Cplx(0.0, s2)}, 3, PathClass::ProblemSpecific, true);

  return lib;
}

} // namespace

const std::map<std::string, ComplexPath>& path_library() {
  static const std::map<std::string, ComplexPath> lib = build_library();
  return lib;
}

const ComplexPath& library_path(const std::string& name) {
  const auto& lib = path_library();
  auto it = lib.find(name);
  if (it == lib.end()) {
    std::string names;
    for (const auto& [k, v] : lib) {
      if (!names.empty()) names += ", ";
      names += k;
    }
    throw NotFoundError("unknown path '" + name + "' (have: " + names + ")");
  }
  return it->second;
}

nlohmann::json path_to_json(const ComplexPath& path) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& z : path.weights) w.push_back({z.real(), z.imag()});
  return nlohmann::json{{"name", path.name},
                        {"order_claim", path.order_claim},
                        {"validity_class", to_string(path.validity_class)},
                        {"requires_real_projection", path.requires_real_projection},
                        {"weights", std::move(w)}};
}

ComplexPath path_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> keys{"name", "order_claim", "validity_class",
                                             "requires_real_projection", "weights"};
  if (!j.is_object()) throw ArgumentError("path JSON must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      throw ArgumentError("path JSON has unknown field '" + it.key() + "'");
    }
  }
  for (const auto& k : keys) {
    if (!j.contains(k)) throw ArgumentError("path JSON missing field '" + k + "'");
  }
  ComplexPath p;
  p.name = j.at("name").get<std::string>();
  p.order_claim = j.at("order_claim").get<int>();
  p.validity_class = path_class_from_string(j.at("validity_class").get<std::string>());
  p.requires_real_projection = j.at("requires_real_projection").get<bool>();
  for (const auto& e : j.at("weights")) {
    if (!e.is_array() || e.size() != 2) throw ArgumentError("path weight must be [re, im]");
    p.weights.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  if (p.weights.empty()) throw ArgumentError("path JSON has no weights");
  Cplx sum = elementary_symmetric(p.weights, 1);
  if (std::abs(sum - Cplx(1.0)) > 1e-12) {
    throw ArgumentError("path weights must sum to 1 (closure on the real axis)");
  }
  return p;
}

} // namespace ctstep
