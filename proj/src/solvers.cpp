#include "ctstep/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace ctstep {

NewtonResult damped_newton(const VecFn& F, const JacFn& J, RealVec x0,
                           const NewtonOptions& opts) {
  NewtonResult res;
  RealVec x = std::move(x0);
  RealVec f = F(x);
  double fn = f.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it;
    if (fn < opts.tol_inf) {
      res.x = x;
      res.residual_inf = fn;
      res.converged = true;
      return res;
    }
    if (x.lpNorm<Eigen::Infinity>() > opts.divergence_norm) break;
    RealMat jac = J(x);
    Eigen::FullPivLU<RealMat> lu(jac);
    if (!lu.isInvertible()) break;
    RealVec dx = lu.solve(-f);
    // Halve the step until the residual decreases (or give up on this start).
    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      RealVec xt = x + alpha * dx;
      RealVec ft = F(xt);
      double ftn = ft.lpNorm<Eigen::Infinity>();
      if (std::isfinite(ftn) && ftn < fn) {
        x = std::move(xt);
        f = std::move(ft);
        fn = ftn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (fn < opts.tol_inf) {
    res.converged = true;
  }
  res.x = x;
  res.residual_inf = fn;
  return res;
}

namespace {

RealMat fd_jacobian(const VecFn& F, const RealVec& x, const RealVec& f0, double step) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(f0.size());
  RealMat jac(m, n);
  RealVec xp = x;
  for (int j = 0; j < n; ++j) {
    const double h = step * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    jac.col(j) = (F(xp) - f0) / h;
    xp[j] = x[j];
  }
  return jac;
}

} // namespace

LmResult levenberg_marquardt(const VecFn& F, RealVec x0, const LmOptions& opts) {
  LmResult res;
  RealVec x = std::move(x0);
  RealVec f = F(x);
  double cost = f.squaredNorm();
  double lambda = opts.lambda_init;
  const int n = static_cast<int>(x.size());
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it;
    if (f.lpNorm<Eigen::Infinity>() < opts.target_residual_inf) break;
    if (lambda > opts.lambda_max) break;
    RealMat jac = fd_jacobian(F, x, f, opts.fd_step);
    RealMat jtj = jac.transpose() * jac;
    RealVec jtf = jac.transpose() * f;
    RealMat a = jtj + lambda * RealMat::Identity(n, n);
    RealVec dx = a.ldlt().solve(-jtf);
    RealVec xt = x + dx;
    RealVec ft = F(xt);
    double ct = ft.squaredNorm();
    if (std::isfinite(ct) && ct < cost) {
      x = std::move(xt);
      f = std::move(ft);
      cost = ct;
      lambda = std::max(opts.lambda_down * lambda, 1e-14);
    } else {
      lambda *= opts.lambda_up;
    }
  }
  res.x = x;
  res.residual_inf = f.lpNorm<Eigen::Infinity>();
  res.converged = res.residual_inf < opts.target_residual_inf;
  return res;
}

NelderMeadResult nelder_mead_minimize(const std::function<double(const RealVec&)>& f,
                                      RealVec x0, const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  std::vector<RealVec> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  for (int i = 1; i <= n; ++i) pts[i][i - 1] += opts.init_step;
  for (int i = 0; i <= n; ++i) val[i] = f(pts[i]);

  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
    std::vector<RealVec> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (int i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = val[idx[i]];
    }
    pts.swap(p2);
    val.swap(v2);
  };

  NelderMeadResult res;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    order();
    double spread = val[n] - val[0];
    double diam = 0.0;
    for (int i = 1; i <= n; ++i) diam = std::max(diam, (pts[i] - pts[0]).lpNorm<Eigen::Infinity>());
    if (spread < opts.tol && diam < opts.tol) break;

    RealVec centroid = RealVec::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    RealVec xr = centroid + (centroid - pts[n]);
    double vr = f(xr);
    if (vr < val[0]) {
      RealVec xe = centroid + 2.0 * (centroid - pts[n]);
      double ve = f(xe);
      if (ve < vr) {
        pts[n] = xe;
        val[n] = ve;
      } else {
        pts[n] = xr;
        val[n] = vr;
      }
    } else if (vr < val[n - 1]) {
      pts[n] = xr;
      val[n] = vr;
    } else {
      RealVec xc = centroid + 0.5 * (pts[n] - centroid);
      double vc = f(xc);
      if (vc < val[n]) {
        pts[n] = xc;
        val[n] = vc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          val[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  res.x = pts[0];
  res.value = val[0];
  res.iterations = it;
  return res;
}

} // namespace ctstep
