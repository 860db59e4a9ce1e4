#pragma once

#include <functional>

#include <Eigen/Dense>

namespace ctstep {

using RealVec = Eigen::VectorXd;
using RealMat = Eigen::MatrixXd;

using VecFn = std::function<RealVec(const RealVec&)>;
using JacFn = std::function<RealMat(const RealVec&)>;

struct NewtonOptions {
  int max_iterations = 100;
  double tol_inf = 1e-12;       // converged when ||F||_inf drops below this
  double divergence_norm = 1e3; // iterate norm beyond which the start is abandoned
  int max_halvings = 20;        // damping: step is halved until the residual shrinks
};

struct NewtonResult {
  RealVec x;
  double residual_inf = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Damped Newton for square systems with analytic Jacobian.
NewtonResult damped_newton(const VecFn& F, const JacFn& J, RealVec x0,
                           const NewtonOptions& opts = {});

struct LmOptions {
  int max_iterations = 500;
  double target_residual_inf = 1e-10;
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double lambda_max = 1e14; // treated as a stall
  double fd_step = 1e-7;    // forward-difference step scale for the Jacobian
};

struct LmResult {
  RealVec x;
  double residual_inf = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Levenberg-Marquardt for (possibly non-square) least-squares systems.
/// The Jacobian is formed by forward differences.
LmResult levenberg_marquardt(const VecFn& F, RealVec x0, const LmOptions& opts = {});

struct NelderMeadOptions {
  int max_iterations = 500;
  double init_step = 0.1; // initial simplex edge length
  double tol = 1e-10;     // simplex diameter + value spread stopping size
};

struct NelderMeadResult {
  RealVec x;
  double value = 0.0;
  int iterations = 0;
};

/// Classic Nelder-Mead simplex minimization (derivative-free, deterministic).
NelderMeadResult nelder_mead_minimize(const std::function<double(const RealVec&)>& f,
                                      RealVec x0, const NelderMeadOptions& opts = {});

} // namespace ctstep
