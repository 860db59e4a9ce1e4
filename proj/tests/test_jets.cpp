#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "ctstep/errors.hpp"
#include "ctstep/jets.hpp"
#include "ctstep/rng.hpp"

using namespace ctstep;

namespace {

Monomial mono(std::initializer_list<std::pair<int, int>> factors) {
  Monomial m;
  for (auto [a, b] : factors) m.push_back(deriv_code(a, b));
  std::sort(m.begin(), m.end());
  return m;
}

Cplx coeff_of(const Jet& jet, int k, const Monomial& m) {
  auto it = jet.c[k].find(m);
  return it == jet.c[k].end() ? Cplx(0.0) : it->second;
}

// Random polynomials over shallow indeterminates, for the ring axioms.
Poly random_poly(Rng& rng) {
  Poly p;
  const int terms = 1 + static_cast<int>(rng.next_u64() % 3);
  for (int t = 0; t < terms; ++t) {
    Monomial m;
    const int factors = static_cast<int>(rng.next_u64() % 3);
    for (int i = 0; i < factors; ++i) {
      const int a = static_cast<int>(rng.next_u64() % 2);
      const int b = static_cast<int>(rng.next_u64() % 2);
      m.push_back(deriv_code(a, b));
    }
    std::sort(m.begin(), m.end());
    poly_add_term(p, m, Cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
  }
  return p;
}

Jet random_jet(Rng& rng, int P) {
  Jet j(P);
  for (int k = 0; k <= P; ++k) j.c[k] = random_poly(rng);
  return j;
}

double jet_max_abs_diff(const Jet& x, const Jet& y) {
  double worst = 0.0;
  for (int k = 0; k <= x.P; ++k) {
    std::set<Monomial> monomials;
    for (const auto& [m, c] : x.c[k]) monomials.insert(m);
    for (const auto& [m, c] : y.c[k]) monomials.insert(m);
    for (const auto& m : monomials) {
      auto ix = x.c[k].find(m);
      auto iy = y.c[k].find(m);
      const Cplx cx = ix == x.c[k].end() ? Cplx(0.0) : ix->second;
      const Cplx cy = iy == y.c[k].end() ? Cplx(0.0) : iy->second;
      worst = std::max(worst, std::abs(cx - cy));
    }
  }
  return worst;
}

} // namespace

TEST_CASE("indeterminate codes, names and monomial order") {
  CHECK(deriv_a(deriv_code(2, 3)) == 2);
  CHECK(deriv_b(deriv_code(2, 3)) == 3);
  CHECK(deriv_name(deriv_code(0, 0)) == "F00");
  CHECK(deriv_name(deriv_code(1, 2)) == "F12");
  CHECK_THROWS_AS(deriv_code(3, 3), ArgumentError);
  CHECK_THROWS_AS(deriv_code(-1, 0), ArgumentError);

  CHECK(monomial_name({}) == "1");
  CHECK(monomial_name(mono({{0, 0}, {0, 1}, {0, 1}})) == "F00*F01^2");
  CHECK(monomial_order({}) == 1);
  CHECK(monomial_order(mono({{0, 0}, {0, 1}, {0, 1}})) == 3);
  CHECK(monomial_order(mono({{1, 0}})) == 2);
}

TEST_CASE("total derivative acts by Leibniz") {
  Poly p;
  poly_add_term(p, mono({{0, 0}, {0, 0}}), Cplx(1.0)); // F00^2
  Poly d = d_total(p);
  // D(F00^2) = 2 F00 F10 + 2 F00^2 F01
  CHECK(d.size() == 2);
  CHECK(d.at(mono({{0, 0}, {1, 0}})) == Cplx(2.0));
  CHECK(d.at(mono({{0, 0}, {0, 0}, {0, 1}})) == Cplx(2.0));
}

TEST_CASE("exact flow jet reproduces the hand-expanded low orders") {
  const Jet j2 = exact_flow_jet(2, false);
  CHECK(j2.c[0].empty());
  CHECK(j2.c[1].size() == 1);
  CHECK(coeff_of(j2, 1, mono({{0, 0}})) == Cplx(1.0));
  CHECK(j2.c[2].size() == 2);
  CHECK(coeff_of(j2, 2, mono({{0, 0}, {0, 1}})) == Cplx(0.5));
  CHECK(coeff_of(j2, 2, mono({{1, 0}})) == Cplx(0.5));

  // y''' = F20 + 2 F00 F11 + F01 F10 + F00 F01^2 + F00^2 F02, divided by 3!.
  const Jet j3 = exact_flow_jet(3, false);
  CHECK(j3.c[3].size() == 5);
  CHECK(std::abs(coeff_of(j3, 3, mono({{0, 0}, {0, 1}, {0, 1}})) - 1.0 / 6.0) < 1e-16);
  CHECK(std::abs(coeff_of(j3, 3, mono({{2, 0}})) - 1.0 / 6.0) < 1e-16);
  CHECK(std::abs(coeff_of(j3, 3, mono({{0, 0}, {1, 1}})) - 1.0 / 3.0) < 1e-16);
  CHECK(std::abs(coeff_of(j3, 3, mono({{0, 1}, {1, 0}})) - 1.0 / 6.0) < 1e-16);
  CHECK(std::abs(coeff_of(j3, 3, mono({{0, 0}, {0, 0}, {0, 2}})) - 1.0 / 6.0) < 1e-16);

  CHECK_THROWS_AS(exact_flow_jet(1, false), ArgumentError);
  CHECK_THROWS_AS(exact_flow_jet(7, false), ArgumentError);
}

TEST_CASE("autonomous restriction: 12 monomials through fifth order") {
  const Jet j = exact_flow_jet(5, true);
  std::size_t total = 0;
  for (int k = 1; k <= 5; ++k) total += j.c[k].size();
  CHECK(total == 12);

  // Fourth-order coefficients: (F00 F01^3 + 4 F00^2 F01 F02 + F00^3 F03) / 4!.
  CHECK(std::abs(coeff_of(j, 4, mono({{0, 0}, {0, 1}, {0, 1}, {0, 1}})) - 1.0 / 24.0) < 1e-16);
  CHECK(std::abs(coeff_of(j, 4, mono({{0, 0}, {0, 0}, {0, 1}, {0, 2}})) - 1.0 / 6.0) < 1e-16);
  CHECK(std::abs(coeff_of(j, 4, mono({{0, 0}, {0, 0}, {0, 0}, {0, 3}})) - 1.0 / 24.0) < 1e-16);

  // No t-derivatives survive the restriction.
  for (int k = 1; k <= 5; ++k) {
    for (const auto& [m, c] : j.c[k]) {
      for (int code : m) CHECK(deriv_a(code) == 0);
    }
  }
}

TEST_CASE("exact flow monomials sit exactly at their h-power's differential order") {
  const Jet j = exact_flow_jet(6, false);
  for (int k = 1; k <= 6; ++k) {
    CHECK(!j.c[k].empty());
    for (const auto& [m, c] : j.c[k]) CHECK(monomial_order(m) == k);
  }
}

TEST_CASE("jet arithmetic: commutativity, distributivity, truncation idempotence") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Jet a = random_jet(rng, 4);
    const Jet b = random_jet(rng, 4);
    const Jet c = random_jet(rng, 4);

    CHECK(jet_equal(jet_add(a, b), jet_add(b, a)));
    // term accumulation order differs between the two products
    CHECK(jet_max_abs_diff(jet_mul(a, b), jet_mul(b, a)) < 1e-12);

    const Jet lhs = jet_mul(a, jet_add(b, c));
    const Jet rhs = jet_add(jet_mul(a, b), jet_mul(a, c));
    CHECK(jet_max_abs_diff(lhs, rhs) < 1e-12);

    const Jet t = jet_truncate(a, 2);
    CHECK(jet_equal(jet_truncate(t, 2), t));
    CHECK(jet_equal(jet_truncate(jet_truncate(a, 3), 2), jet_truncate(a, 2)));
  }
}

TEST_CASE("f evaluation insists on state jets and respects tau") {
  CHECK_THROWS_AS(f_eval_jet(Cplx(0.0), jet_one(3)), ArgumentError);

  // At dy = 0 the value is the pure time expansion sum_a F_{a0} tau^a h^a / a!.
  const Cplx tau(0.3, -0.2);
  const Jet f = f_eval_jet(tau, Jet(4));
  CHECK(coeff_of(f, 0, mono({{0, 0}})) == Cplx(1.0));
  CHECK(std::abs(coeff_of(f, 1, mono({{1, 0}})) - tau) < 1e-16);
  CHECK(std::abs(coeff_of(f, 2, mono({{2, 0}})) - tau * tau * 0.5) < 1e-16);
  for (int k = 0; k <= 3; ++k) {
    for (const auto& [m, c] : f.c[k]) CHECK(m.size() == 1); // no y-derivatives appear
  }
}

TEST_CASE("picard iterates gain exactly one order per application") {
  const int P = 5;
  const Cplx w(0.7, 0.2);
  const Jet base(P); // zero state
  auto step = [&](const Jet& ym) {
    Jet mid = jet_scale(jet_add(base, ym), Cplx(0.5));
    return jet_add(base, jet_mul_h(f_eval_jet(0.5 * w, mid), w));
  };

  std::vector<Jet> iterates;
  const Jet fixed = picard_fixed_point(step, base, &iterates);
  REQUIRE(iterates.size() <= static_cast<std::size_t>(P) + 2);

  // iterates[i] is application i+1; it must agree with the fixed point
  // through h^{i+1}, bitwise.
  for (std::size_t i = 0; i < iterates.size(); ++i) {
    const int order = std::min(static_cast<int>(i) + 1, P);
    CHECK(jet_equal(jet_truncate(iterates[i], order), jet_truncate(fixed, order)));
  }
  CHECK(jet_equal(step(fixed), fixed));
}

TEST_CASE("linear restriction keeps only the F00*F01^j ladder") {
  const Jet j = restrict_jet(exact_flow_jet(4, false), JetRestriction::Linear);
  for (int k = 1; k <= 4; ++k) {
    REQUIRE(j.c[k].size() == 1);
    Monomial expect{deriv_code(0, 0)};
    for (int i = 0; i < k - 1; ++i) expect.push_back(deriv_code(0, 1));
    std::sort(expect.begin(), expect.end());
    CHECK(j.c[k].begin()->first == expect);
    // 1/k! down the ladder
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    CHECK(std::abs(j.c[k].begin()->second - 1.0 / fact) < 1e-16);
  }
}
