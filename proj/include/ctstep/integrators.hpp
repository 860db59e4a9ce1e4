#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctstep/paths.hpp"
#include "ctstep/problems.hpp"
#include "ctstep/scheme.hpp"

namespace ctstep {

struct NewtonConfig {
  double tolerance = 1e-12; // residual inf-norm target, scaled by (|y|_inf + 1)
  int max_iterations = 50;
  double fd_step = 1e-7;    // forward-difference Jacobian step, scaled by (1 + |u|_inf)
};

/// Where implicit substeps get Jacobians of f.  Sparse wins over dense wins
/// over forward differences; `constant` permits factorization reuse.
struct JacobianSource {
  std::function<StateMat(Cplx, const StateVec&)> dense;
  std::function<SparseMatC(Cplx, const StateVec&)> sparse;
  bool constant = false;
};

JacobianSource jacobian_of(const OdeProblem& problem);

/// Caches LU factorizations of (I - c J_f) keyed by the complex coefficient c.
/// Only populated when the Jacobian is constant; owned by the caller so a
/// single integration reuses factorizations across all its steps.
struct ImplicitWorkspace {
  void clear();

  std::map<std::pair<double, double>, std::shared_ptr<Eigen::PartialPivLU<StateMat>>>
      dense_cache;
  std::map<std::pair<double, double>, std::shared_ptr<Eigen::SparseLU<SparseMatC>>>
      sparse_cache;
};

/// One macro step of forward-Euler substeps w_i dt.  Substep i evaluates f at
/// t + (w_0 + ... + w_{i-1}) dt.  Exactly path.steps() evaluations of f.
StateVec euler_path_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                         const ComplexPath& path);

enum class ImplicitVariant { Midpoint, BackwardEuler };

/// One macro step of implicit substeps.  Midpoint solves
/// x = y + w dt f(t + (prior + w/2) dt, (y + x)/2); backward Euler solves
/// x = y + w dt f(t + (prior + w) dt, x).  Newton starts from the previous
/// substep value.  `newton_iterations` (optional) accumulates iteration counts.
StateVec implicit_path_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                            const ComplexPath& path, ImplicitVariant variant,
                            const NewtonConfig& cfg, const JacobianSource& jac,
                            ImplicitWorkspace* workspace = nullptr,
                            long long* newton_iterations = nullptr);

/// One macro step of the RK2-then-RK3 composite scheme: exactly 5 evaluations,
/// with the final real projection applied iff scheme.real_projection.
StateVec composite_rk23_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                             const SchemeDescriptor& scheme);

/// Explicit Butcher tableau (reference real-coefficient methods).
struct ButcherTableau {
  std::string name;
  std::vector<std::vector<double>> a; // strictly lower triangular, row i has i entries
  std::vector<double> b;
  std::vector<double> c;
  int order = 0;

  int stages() const { return static_cast<int>(b.size()); }
};

StateVec rk_step(const Rhs& f, Cplx t, const StateVec& y, double dt,
                 const ButcherTableau& tableau);

/// ralston-rk3, midpoint-rk2, ssprk2, rk4.
const std::map<std::string, ButcherTableau>& reference_methods();

/// A runnable time-stepping method: either a scheme descriptor (complex paths,
/// implicit paths, composite RK2/RK3) or a reference Butcher tableau.
struct MethodSpec {
  std::string name;
  bool is_reference = false;
  SchemeDescriptor scheme; // when !is_reference
  ButcherTableau tableau;  // when is_reference

  bool wants_projection() const { return !is_reference && scheme.real_projection; }
};

MethodSpec method_from_path(const ComplexPath& path);
MethodSpec method_from_scheme(const SchemeDescriptor& scheme, const std::string& name);

/// Lookup across reference methods and the path library; JSON scheme objects
/// are accepted through method_from_scheme instead.
MethodSpec method_named(const std::string& name);

/// Evaluations of f consumed per macro step.  Explicit methods only; implicit
/// methods have data-dependent counts (CapabilityError).
int evals_per_step(const MethodSpec& method);

struct IntegrateOptions {
  NewtonConfig newton;
  bool record_trajectory = false; // keep the state at every macro step
};

struct IntegrationResult {
  std::vector<double> times;
  std::vector<StateVec> states; // first entry y0, last entry y(t_end)
  long long function_evaluations = 0;
  long long newton_iterations_total = 0;
  bool projected = false;

  const StateVec& final_state() const { return states.back(); }
};

/// Repeats the method's macro step from problem.t0 to t_end (dt must divide
/// the span).  Applies real projection at every return to the real axis when
/// the method asks for it; refuses projection on problems whose solution is
/// not real.  Throws BlowUpError when |y|_inf exceeds 1e12 or goes non-finite.
IntegrationResult integrate(const OdeProblem& problem, const MethodSpec& method,
                            double dt, double t_end,
                            const IntegrateOptions& options = {});

/// CSV dump: t, re_0, im_0, ..., one row per recorded time.
void write_trajectory_csv(const IntegrationResult& result, std::ostream& os);

} // namespace ctstep
