#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ctstep/common.hpp"
#include "ctstep/errors.hpp"

namespace ctstep {

using StateVec = Eigen::VectorXcd;
using StateMat = Eigen::MatrixXcd;
using SparseMatC = Eigen::SparseMatrix<Cplx>;

/// Right-hand side of y' = f(t, y).  The time argument is complex because the
/// steppers evaluate f at interior points of a complex-plane path; every
/// catalog rhs is analytic in t so this is well defined.
using Rhs = std::function<StateVec(Cplx, const StateVec&)>;

enum class Stiffness { NonStiff, Stiff };

/// An initial value problem, possibly a method-of-lines PDE discretization.
/// `exact` is empty when no closed form exists (Van der Pol); integrations
/// then compare against a cached reference trajectory instead.
struct OdeProblem {
  std::string name;
  int dimension = 1;
  Rhs rhs;
  StateVec y0;
  double t0 = 0.0;
  double t_end = 1.0;
  std::function<StateVec(double)> exact; // samples on the problem's grid
  bool real_solution = true;             // exact values real at real times
  Stiffness stiffness = Stiffness::NonStiff;

  // Optional analytic Jacobians of f in y (implicit steppers fall back to
  // forward differences when absent).  constant_jacobian marks rhs affine in
  // y with a state- and time-independent Jacobian, enabling factorization
  // reuse across Newton iterations and steps.
  std::function<StateMat(Cplx, const StateVec&)> dense_jacobian;
  std::function<SparseMatC(Cplx, const StateVec&)> sparse_jacobian;
  bool constant_jacobian = false;
};

/// All named test problems.  Keys: dahlquist, shm, square, exp, nlsin, vdp,
/// vdp-mu10, wave, burgers, heat, schrodinger.
const std::map<std::string, OdeProblem>& catalog();

/// Lookup by name; throws NotFoundError listing the known names.
const OdeProblem& catalog_problem(const std::string& name);

// Parameterized factories behind the catalog entries.
OdeProblem make_dahlquist(Cplx lambda);
OdeProblem make_vdp(double mu);
OdeProblem make_heat_problem(int cells);

/// Periodic Fourier differentiation on `modes` equispaced points of [0, L).
/// Dense matrices; the first-derivative matrix zeroes the Nyquist mode so it
/// stays anti-Hermitian, the second keeps it.
struct SpectralOperator {
  int modes = 0;
  double length = 0.0;
  StateMat d1, d2;
};

SpectralOperator make_spectral_operator(int modes, double length);

/// Apply d1 (order 1) or d2 (order 2).  Throws on size mismatch or other orders.
StateVec spectral_derivative(const SpectralOperator& op, const StateVec& u, int order);

/// 4th-order central second difference on the interior nodes x_j = (j+1) dx
/// of (0, 1), dx = 1/(cells+1), with homogeneous Dirichlet boundaries.
struct FdOperator {
  int cells = 0;
  double dx = 0.0;
};

FdOperator make_fd_operator(int cells);

/// Stencil (-1, 16, -30, 16, -1)/(12 dx^2) in the interior.  Boundary rows
/// use the known zero boundary value plus an odd-reflection ghost
/// (u(-dx) = -u(dx)), giving row 0 = (-29 u0 + 16 u1 - u2)/(12 dx^2); this
/// closure is exact for solutions that extend oddly across the wall, which
/// heat-equation solutions with compatible data do.
StateVec fd_laplacian(const FdOperator& op, const StateVec& u);

/// The same operator as a sparse matrix (pentadiagonal plus closure rows).
SparseMatC fd_matrix(const FdOperator& op);

/// Cached reference-trajectory fixture: CSV with a comment header recording
/// how the trajectory was generated.
struct FixtureMeta {
  std::string method;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

struct Fixture {
  FixtureMeta meta;
  std::vector<double> ts;
  std::vector<StateVec> states;
};

void write_fixture_csv(std::ostream& os, const FixtureMeta& meta,
                       const std::vector<double>& ts,
                       const std::vector<StateVec>& states);

Fixture read_fixture_csv(std::istream& is);

} // namespace ctstep
