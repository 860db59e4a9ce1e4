#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "ctstep/common.hpp"
#include "ctstep/paths.hpp"

namespace ctstep {

// A scheme descriptor names one concrete one-step map over a macro step h.
// The same descriptor drives both the symbolic order analysis (jets) and the
// runtime integrators, so the two can never drift apart.

enum class SchemeKind {
  EulerPath,            // forward-Euler substeps h*w_i
  ImplicitMidpointPath, // implicit midpoint substeps h*w_i
  BackwardEulerPath,    // backward-Euler substeps h*w_i
  CompositeRk23,        // one explicit RK2 step into one explicit RK3 step
};

std::string to_string(SchemeKind k);
SchemeKind scheme_kind_from_string(const std::string& s);

/// Coefficients of the composite scheme
///   k11 = f(y_n)                  k21 = f(y_m)
///   k12 = f(y_n + a121 h k11)     k22 = f(y_m + a221 h k21)
///   y_m = y_n + b11 h k11         k23 = f(y_m + a231 h k21 + a232 h k22)
///            + b12 h k12          y_out = y_m + b21 h k21 + b22 h k22 + b23 h k23
/// Stage times follow row sums: the RK2 stage starts at t_n, the RK3 stage
/// at t_n + (b11+b12) h.  Returning to the real axis after the full step
/// requires sum of all five b coefficients == 1 exactly.
struct CompositeRk23 {
  Cplx a121{}, b11{}, b12{};
  Cplx a221{}, a231{}, a232{}, b21{}, b22{}, b23{};
};

/// Sum b11+b12+b21+b22+b23 (the effective step in units of h).
Cplx composite_b_sum(const CompositeRk23& q);

struct SchemeDescriptor {
  SchemeKind kind = SchemeKind::EulerPath;
  std::vector<Cplx> weights; // path kinds only
  CompositeRk23 rk23{};      // composite kind only
  bool real_projection = false;
};

/// Throws ArgumentError on structural problems: empty weights for a path
/// kind, or a composite whose b coefficients do not sum to 1 within 1e-12.
void validate_scheme(const SchemeDescriptor& s);

/// Wrap a path as a runnable scheme; implicit-midpoint and backward-Euler
/// validity classes select their implicit steppers, everything else runs as
/// explicit Euler substeps.
SchemeDescriptor make_path_scheme(const ComplexPath& path);

SchemeDescriptor make_composite_scheme(const CompositeRk23& q, bool real_projection = true);

nlohmann::json scheme_to_json(const SchemeDescriptor& s);
SchemeDescriptor scheme_from_json(const nlohmann::json& j);

} // namespace ctstep
