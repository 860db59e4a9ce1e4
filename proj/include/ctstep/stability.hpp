#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "ctstep/common.hpp"
#include "ctstep/paths.hpp"

namespace ctstep {

// Linear-stability machinery: the amplification factor Phi(z), z = lambda*h,
// of one macro step, its region |Phi(z)| <= 1, extent searches along rays,
// and optimization of the coefficients left free after pinning consistency.

struct StabilityPolynomial {
  enum class Kind { ExplicitPolynomial, ImplicitRational };
  Kind kind = Kind::ExplicitPolynomial;
  std::vector<Cplx> coeff; // explicit kind: c_0..c_s, c_0 = 1
  std::vector<Cplx> num;   // rational kind: numerator c_0..c_m
  std::vector<Cplx> den;   // rational kind: denominator c_0..c_m
};

/// Phi(z).  Rational kinds return infinity at denominator zeros (1e-12
/// guard): a pole sits on the unstable side.
Cplx evaluate(const StabilityPolynomial& phi, Cplx z);

enum class StabilityVariant { Explicit, ImplicitMidpoint, BackwardEuler };

/// Amplification factor of the path on y' = lambda y:
///   explicit          prod(1 + w_i z)
///   implicit-midpoint prod(1 + w_i z/2) / prod(1 - w_i z/2)
///   backward-euler    1 / prod(1 - w_i z)
/// expanded through elementary symmetric polynomials of the weights.
StabilityPolynomial stability_function(const ComplexPath& path, StabilityVariant variant);

struct Window {
  double re_lo = 0.0, re_hi = 0.0;
  double im_lo = 0.0, im_hi = 0.0;
};

struct RegionRaster {
  Window window;
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> inside; // row-major: iy * nx + ix

  double x(int ix) const;
  double y(int iy) const;
  bool at(int ix, int iy) const;
};

/// Pointwise |Phi| <= 1 on an inclusive-endpoint grid.  nx, ny >= 2.
RegionRaster raster_region(const StabilityPolynomial& phi, const Window& window, int nx, int ny);

/// CSV columns: x, y, inside.
void write_raster_csv(const RegionRaster& raster, std::ostream& os);

struct Segment {
  Cplx a, b;
};

/// Marching-squares boundary of the region on the given grid; edge crossings
/// are refined by bisection on |Phi| - 1.
std::vector<Segment> boundary_segments(const StabilityPolynomial& phi, const Window& window,
                                       int nx, int ny);

/// CSV columns: x1, y1, x2, y2 (one segment per row).
void write_boundary_csv(const std::vector<Segment>& segments, std::ostream& os);

struct RayExtent {
  double value = 0.0;
  bool unbounded = false; // no exit found within the scan budget
};

/// Largest h with |Phi(t * h * direction/|direction|)| <= 1 for all sampled
/// t in (0, h]: coarse scan with step 1e-3 up to 1e4, then bisection to
/// 1e-10.  Intermediate samples must stay inside, so disconnected stable
/// islands beyond the first exit do not count.
RayExtent ray_extent(const StabilityPolynomial& phi, Cplx direction);

struct StabilityOptimizeOptions {
  std::uint64_t seed = 0;
  int nm_starts = 20;            // Nelder-Mead multistart count
  int grid_points_per_dim = 0;   // 0: choose by dimension
  double box_lo = -1.0;          // coarse-grid / start box per parameter
  double box_hi = 1.0;
};

struct OptimizedPolynomial {
  StabilityPolynomial poly;
  double extent = 0.0;
};

/// Maximize ray_extent over the free coefficients c_{p+1}..c_s while the
/// consistency coefficients stay pinned at 1/k! exactly.  Coarse grid, then
/// seeded Nelder-Mead restarts from the grid optimum and random points.
/// With allow_complex the real-restricted optimum is solved first and seeded
/// into the complex search, so the complex extent can never come out worse.
/// At most 4 free real parameters (CapabilityError beyond).
OptimizedPolynomial optimize_free_coefficients(int s, int p, Cplx direction, bool allow_complex,
                                               const StabilityOptimizeOptions& opts = {});

/// Invert stability_function for the explicit kind: the weights are the
/// roots of sum_k (-1)^k c_k z^{n-k}.  Round-trips within 1e-10.
ComplexPath weights_from_polynomial(const StabilityPolynomial& phi,
                                    const std::string& name = "from-polynomial");

nlohmann::json stability_polynomial_to_json(const StabilityPolynomial& phi);
StabilityPolynomial stability_polynomial_from_json(const nlohmann::json& j);

} // namespace ctstep
