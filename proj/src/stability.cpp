#include "ctstep/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ctstep/errors.hpp"
#include "ctstep/rng.hpp"
#include "ctstep/solvers.hpp"

namespace ctstep {

namespace {

Cplx horner(const std::vector<Cplx>& c, Cplx z) {
  Cplx acc(0.0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
  return acc;
}

} // namespace

Cplx evaluate(const StabilityPolynomial& phi, Cplx z) {
  if (phi.kind == StabilityPolynomial::Kind::ExplicitPolynomial) return horner(phi.coeff, z);
  const Cplx n = horner(phi.num, z);
  const Cplx d = horner(phi.den, z);
  if (std::abs(d) < 1e-12) return Cplx(std::numeric_limits<double>::infinity(), 0.0);
  return n / d;
}

StabilityPolynomial stability_function(const ComplexPath& path, StabilityVariant variant) {
  const auto& w = path.weights;
  const int n = path.steps();
  if (n == 0) throw ArgumentError("stability_function: empty path");

  std::vector<Cplx> e(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) e[k] = elementary_symmetric(w, k);

  StabilityPolynomial phi;
  switch (variant) {
    case StabilityVariant::Explicit: {
      phi.kind = StabilityPolynomial::Kind::ExplicitPolynomial;
      phi.coeff = e;
      return phi;
    }
    case StabilityVariant::ImplicitMidpoint: {
      phi.kind = StabilityPolynomial::Kind::ImplicitRational;
      phi.num.resize(e.size());
      phi.den.resize(e.size());
      for (int k = 0; k <= n; ++k) {
        const Cplx scaled = e[k] * std::pow(0.5, k);
        phi.num[k] = scaled;
        phi.den[k] = (k % 2 == 0) ? scaled : -scaled;
      }
      return phi;
    }
    case StabilityVariant::BackwardEuler: {
      phi.kind = StabilityPolynomial::Kind::ImplicitRational;
      phi.num = {Cplx(1.0)};
      phi.den.resize(e.size());
      for (int k = 0; k <= n; ++k) phi.den[k] = (k % 2 == 0) ? e[k] : -e[k];
      return phi;
    }
  }
  throw ArgumentError("stability_function: unknown variant");
}

double RegionRaster::x(int ix) const {
  return window.re_lo + (window.re_hi - window.re_lo) * ix / (nx - 1);
}
double RegionRaster::y(int iy) const {
  return window.im_lo + (window.im_hi - window.im_lo) * iy / (ny - 1);
}
bool RegionRaster::at(int ix, int iy) const {
  return inside[static_cast<std::size_t>(iy) * nx + ix] != 0;
}

namespace {

void validate_window(const Window& w, int nx, int ny) {
  if (!(w.re_lo < w.re_hi) || !(w.im_lo < w.im_hi)) {
    throw ArgumentError("raster window is degenerate");
  }
  if (nx < 2 || ny < 2) throw ArgumentError("raster resolution must be at least 2x2");
}

} // namespace

RegionRaster raster_region(const StabilityPolynomial& phi, const Window& window, int nx, int ny) {
  validate_window(window, nx, ny);
  RegionRaster r;
  r.window = window;
  r.nx = nx;
  r.ny = ny;
  r.inside.resize(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Cplx z(r.x(ix), r.y(iy));
      r.inside[static_cast<std::size_t>(iy) * nx + ix] = std::abs(evaluate(phi, z)) <= 1.0;
    }
  }
  return r;
}

void write_raster_csv(const RegionRaster& raster, std::ostream& os) {
  os << "x,y,inside\n";
  for (int iy = 0; iy < raster.ny; ++iy) {
    for (int ix = 0; ix < raster.nx; ++ix) {
      os << fmt17(raster.x(ix)) << "," << fmt17(raster.y(iy)) << ","
         << (raster.at(ix, iy) ? 1 : 0) << "\n";
    }
  }
}

namespace {

// Point on segment [a, b] where |Phi| crosses 1; a is inside, b outside.
Cplx edge_crossing(const StabilityPolynomial& phi, Cplx a, Cplx b) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Cplx z = a + mid * (b - a);
    (std::abs(evaluate(phi, z)) <= 1.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  return a + t * (b - a);
}

} // namespace

std::vector<Segment> boundary_segments(const StabilityPolynomial& phi, const Window& window,
                                       int nx, int ny) {
  const RegionRaster r = raster_region(phi, window, nx, ny);
  std::vector<Segment> out;
  for (int iy = 0; iy + 1 < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) {
      const Cplx c00(r.x(ix), r.y(iy)), c10(r.x(ix + 1), r.y(iy));
      const Cplx c01(r.x(ix), r.y(iy + 1)), c11(r.x(ix + 1), r.y(iy + 1));
      const bool b00 = r.at(ix, iy), b10 = r.at(ix + 1, iy);
      const bool b01 = r.at(ix, iy + 1), b11 = r.at(ix + 1, iy + 1);

      auto cross = [&](Cplx a, Cplx b, bool ina) { return ina ? edge_crossing(phi, a, b)
                                                              : edge_crossing(phi, b, a); };
      std::vector<Cplx> pts;
      if (b00 != b10) pts.push_back(cross(c00, c10, b00)); // bottom
      if (b10 != b11) pts.push_back(cross(c10, c11, b10)); // right
      if (b01 != b11) pts.push_back(cross(c01, c11, b01)); // top
      if (b00 != b01) pts.push_back(cross(c00, c01, b00)); // left

      if (pts.size() == 2) {
        out.push_back({pts[0], pts[1]});
      } else if (pts.size() == 4) {
        // saddle: split by the cell center's side
        const Cplx center = 0.25 * (c00 + c10 + c01 + c11);
        const bool center_in = std::abs(evaluate(phi, center)) <= 1.0;
        if (center_in == b00) {
          out.push_back({pts[0], pts[1]}); // bottom-right
          out.push_back({pts[2], pts[3]}); // top-left
        } else {
          out.push_back({pts[0], pts[3]}); // bottom-left
          out.push_back({pts[1], pts[2]}); // right-top
        }
      }
    }
  }
  return out;
}

void write_boundary_csv(const std::vector<Segment>& segments, std::ostream& os) {
  os << "x1,y1,x2,y2\n";
  for (const auto& s : segments) {
    os << fmt17(s.a.real()) << "," << fmt17(s.a.imag()) << "," << fmt17(s.b.real()) << ","
       << fmt17(s.b.imag()) << "\n";
  }
}

RayExtent ray_extent(const StabilityPolynomial& phi, Cplx direction) {
  const double mag = std::abs(direction);
  if (mag == 0.0) throw ArgumentError("ray_extent: zero direction");
  const Cplx d = direction / mag;

  constexpr double kStep = 1e-3;
  constexpr double kBudget = 1e4;
  const long long budget_steps = static_cast<long long>(kBudget / kStep);
  long long exit_step = -1;
  for (long long k = 1; k <= budget_steps; ++k) {
    if (std::abs(evaluate(phi, (k * kStep) * d)) > 1.0) { exit_step = k; break; }
  }
  if (exit_step < 0) return {kBudget, true};

  double lo = (exit_step - 1) * kStep;
  double hi = exit_step * kStep;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(evaluate(phi, mid * d)) <= 1.0 ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

namespace {

std::vector<Cplx> complex_monic_roots(const std::vector<Cplx>& a) {
  // a: coefficients of z^0..z^{n-1}; leading z^n coefficient is 1.
  const int n = static_cast<int>(a.size());
  if (n == 0) return {};
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) comp(i + 1, i) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -a[i];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericError("complex companion eigensolve failed");

  auto eval = [&](Cplx z) {
    Cplx p(1.0);
    for (int i = n - 1; i >= 0; --i) p = p * z + a[i];
    return p;
  };
  auto eval_deriv = [&](Cplx z) {
    Cplx p(static_cast<double>(n));
    for (int i = n - 1; i >= 1; --i) p = p * z + static_cast<double>(i) * a[i];
    return p;
  };

  std::vector<Cplx> roots(n);
  for (int i = 0; i < n; ++i) {
    Cplx z = es.eigenvalues()[i];
    for (int it = 0; it < 8; ++it) {
      const Cplx dp = eval_deriv(z);
      if (std::abs(dp) == 0.0) break;
      const Cplx step = eval(z) / dp;
      z -= step;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(z))) break;
    }
    const double scale = std::pow(std::max(1.0, std::abs(z)), n);
    if (!(std::abs(eval(z)) < 1e-9 * scale)) {
      throw NumericError("weights_from_polynomial: root polish failed");
    }
    roots[i] = z;
  }
  return roots;
}

} // namespace

ComplexPath weights_from_polynomial(const StabilityPolynomial& phi, const std::string& name) {
  if (phi.kind != StabilityPolynomial::Kind::ExplicitPolynomial) {
    throw ArgumentError("weights_from_polynomial: explicit polynomials only");
  }
  if (phi.coeff.size() < 2) throw ArgumentError("weights_from_polynomial: degree must be >= 1");
  if (std::abs(phi.coeff[0] - Cplx(1.0)) > 1e-12) {
    throw ArgumentError("weights_from_polynomial: c_0 must be 1");
  }
  const int n = static_cast<int>(phi.coeff.size()) - 1;

  // prod(z - w_i) = sum_k (-1)^k c_k z^{n-k}: monic, coefficient of z^{n-k}
  // is (-1)^k c_k.
  std::vector<Cplx> a(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const Cplx ck = phi.coeff[static_cast<std::size_t>(k)];
    a[static_cast<std::size_t>(n - k)] = (k % 2 == 0) ? ck : -ck;
  }
  std::vector<Cplx> roots = complex_monic_roots(a);
  std::sort(roots.begin(), roots.end(), cplx_less);

  ComplexPath path;
  path.name = name;
  path.weights = std::move(roots);
  path.validity_class = PathClass::LinearOnly;
  path.requires_real_projection = false;
  int order = 0;
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    fact *= k;
    if (std::abs(phi.coeff[static_cast<std::size_t>(k)] - 1.0 / fact) > 1e-12) break;
    order = k;
  }
  path.order_claim = std::max(order, 1);
  return path;
}

namespace {

StabilityPolynomial assemble_pinned(int s, int p, const RealVec& x, bool allow_complex) {
  StabilityPolynomial phi;
  phi.coeff.resize(static_cast<std::size_t>(s) + 1);
  double fact = 1.0;
  for (int k = 0; k <= p; ++k) {
    if (k > 0) fact *= k;
    phi.coeff[static_cast<std::size_t>(k)] = 1.0 / fact;
  }
  for (int j = 0; j < s - p; ++j) {
    phi.coeff[static_cast<std::size_t>(p + 1 + j)] =
        allow_complex ? Cplx(x[2 * j], x[2 * j + 1]) : Cplx(x[j], 0.0);
  }
  return phi;
}

} // namespace

OptimizedPolynomial optimize_free_coefficients(int s, int p, Cplx direction, bool allow_complex,
                                               const StabilityOptimizeOptions& opts) {
  if (p < 1 || p >= s) throw ArgumentError("optimize_free_coefficients: need 1 <= p < s");
  if (std::abs(direction) == 0.0) throw ArgumentError("optimize_free_coefficients: zero ray");
  const int dim = (s - p) * (allow_complex ? 2 : 1);
  if (dim > 4) {
    throw CapabilityError("optimize_free_coefficients: more than 4 free real parameters");
  }

  auto extent_at = [&](const RealVec& x) {
    return ray_extent(assemble_pinned(s, p, x, allow_complex), direction).value;
  };

  RealVec best_x;
  double best_extent = -1.0;
  auto consider = [&](const RealVec& x, double ext) {
    if (ext > best_extent) { best_extent = ext; best_x = x; }
  };

  // Coarse grid, inclusive endpoints.
  int per_dim = opts.grid_points_per_dim;
  if (per_dim <= 0) per_dim = dim == 1 ? 201 : dim == 2 ? 41 : dim == 3 ? 13 : 9;
  if (per_dim < 2) per_dim = 2;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  RealVec x(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i) {
      x[i] = opts.box_lo + (opts.box_hi - opts.box_lo) * idx[static_cast<std::size_t>(i)] /
                               (per_dim - 1);
    }
    consider(x, extent_at(x));
    int carry = 0;
    while (carry < dim && ++idx[static_cast<std::size_t>(carry)] == per_dim) {
      idx[static_cast<std::size_t>(carry)] = 0;
      ++carry;
    }
    if (carry == dim) break;
  }

  std::vector<RealVec> starts;
  starts.push_back(best_x); // grid optimum
  if (allow_complex) {
    // Seed the real-restricted optimum so complex can only improve on it.
    StabilityOptimizeOptions real_opts = opts;
    const OptimizedPolynomial real_best =
        optimize_free_coefficients(s, p, direction, false, real_opts);
    RealVec embedded(dim);
    for (int j = 0; j < s - p; ++j) {
      embedded[2 * j] = real_best.poly.coeff[static_cast<std::size_t>(p + 1 + j)].real();
      embedded[2 * j + 1] = 0.0;
    }
    consider(embedded, extent_at(embedded));
    starts.push_back(embedded);
  }
  Rng rng(opts.seed);
  while (static_cast<int>(starts.size()) < opts.nm_starts) {
    RealVec r(dim);
    for (int i = 0; i < dim; ++i) r[i] = rng.uniform(opts.box_lo, opts.box_hi);
    starts.push_back(r);
  }

  NelderMeadOptions nm;
  nm.max_iterations = 400;
  nm.init_step = 0.05;
  nm.tol = 1e-12;
  for (const RealVec& start : starts) {
    const NelderMeadResult res =
        nelder_mead_minimize([&](const RealVec& q) { return -extent_at(q); }, start, nm);
    consider(res.x, -res.value);
  }

  return {assemble_pinned(s, p, best_x, allow_complex), best_extent};
}

nlohmann::json stability_polynomial_to_json(const StabilityPolynomial& phi) {
  auto coeffs = [](const std::vector<Cplx>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& z : v) arr.push_back({z.real(), z.imag()});
    return arr;
  };
  if (phi.kind == StabilityPolynomial::Kind::ExplicitPolynomial) {
    return nlohmann::json{{"kind", "explicit-polynomial"}, {"coefficients", coeffs(phi.coeff)}};
  }
  return nlohmann::json{{"kind", "implicit-rational"},
                        {"numerator", coeffs(phi.num)},
                        {"denominator", coeffs(phi.den)}};
}

StabilityPolynomial stability_polynomial_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw ArgumentError("stability polynomial JSON must be an object with 'kind'");
  }
  auto parse = [](const nlohmann::json& arr, const char* what) {
    if (!arr.is_array() || arr.empty()) {
      throw ArgumentError(std::string(what) + " must be a non-empty array");
    }
    std::vector<Cplx> v;
    for (const auto& e : arr) {
      if (!e.is_array() || e.size() != 2) throw ArgumentError("coefficient must be [re, im]");
      v.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return v;
  };
  const std::string kind = j.at("kind").get<std::string>();
  StabilityPolynomial phi;
  if (kind == "explicit-polynomial") {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "kind" && it.key() != "coefficients") {
        throw ArgumentError("stability polynomial JSON has unknown field '" + it.key() + "'");
      }
    }
    phi.kind = StabilityPolynomial::Kind::ExplicitPolynomial;
    phi.coeff = parse(j.at("coefficients"), "coefficients");
    return phi;
  }
  if (kind == "implicit-rational") {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "kind" && it.key() != "numerator" && it.key() != "denominator") {
        throw ArgumentError("stability polynomial JSON has unknown field '" + it.key() + "'");
      }
    }
    phi.kind = StabilityPolynomial::Kind::ImplicitRational;
    phi.num = parse(j.at("numerator"), "numerator");
    phi.den = parse(j.at("denominator"), "denominator");
    return phi;
  }
  throw ArgumentError("unknown stability polynomial kind '" + kind + "'");
}

} // namespace ctstep
