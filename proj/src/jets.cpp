#include "ctstep/jets.hpp"

#include <algorithm>
#include <sstream>

#include "ctstep/errors.hpp"

namespace ctstep {

namespace {
constexpr int kCodeBase = kMaxDerivTotal + 1;
}

int deriv_code(int a, int b) {
  if (a < 0 || b < 0 || a + b > kMaxDerivTotal) {
    throw ArgumentError("deriv_code: need a,b >= 0 and a+b <= " +
                        std::to_string(kMaxDerivTotal) + ", got a=" + std::to_string(a) +
                        " b=" + std::to_string(b));
  }
  return a * kCodeBase + b;
}

int deriv_a(int code) { return code / kCodeBase; }
int deriv_b(int code) { return code % kCodeBase; }

std::string deriv_name(int code) {
  return "F" + std::to_string(deriv_a(code)) + std::to_string(deriv_b(code));
}

std::string monomial_name(const Monomial& m) {
  if (m.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < m.size();) {
    std::size_t j = i;
    while (j < m.size() && m[j] == m[i]) ++j;
    if (!out.empty()) out += "*";
    out += deriv_name(m[i]);
    if (j - i > 1) out += "^" + std::to_string(j - i);
    i = j;
  }
  return out;
}

int monomial_order(const Monomial& m) {
  int order = 1;
  for (int code : m) order += deriv_a(code) + deriv_b(code);
  return order;
}

void poly_add_term(Poly& p, const Monomial& m, Cplx coeff) {
  auto it = p.find(m);
  if (it == p.end()) {
    if (coeff != 0.0) p.emplace(m, coeff);
    return;
  }
  it->second += coeff;
  if (it->second == 0.0) p.erase(it);
}

Poly poly_scale(const Poly& p, Cplx s) {
  Poly out;
  if (s == 0.0) return out;
  for (const auto& [m, c] : p) poly_add_term(out, m, c * s);
  return out;
}

Poly poly_mul(const Poly& p, const Poly& q) {
  Poly out;
  Monomial merged;
  for (const auto& [mp, cp] : p) {
    for (const auto& [mq, cq] : q) {
      merged.clear();
      merged.resize(mp.size() + mq.size());
      std::merge(mp.begin(), mp.end(), mq.begin(), mq.end(), merged.begin());
      poly_add_term(out, merged, cp * cq);
    }
  }
  return out;
}

Poly d_total(const Poly& p) {
  Poly out;
  const int f00 = deriv_code(0, 0);
  for (const auto& [m, c] : p) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i > 0 && m[i] == m[i - 1]) continue; // Leibniz over distinct factors
      auto count = static_cast<double>(std::count(m.begin(), m.end(), m[i]));
      const int a = deriv_a(m[i]);
      const int b = deriv_b(m[i]);

      Monomial t_branch = m;
      t_branch[i] = deriv_code(a + 1, b);
      std::sort(t_branch.begin(), t_branch.end());
      poly_add_term(out, t_branch, c * count);

      Monomial y_branch = m;
      y_branch[i] = deriv_code(a, b + 1);
      y_branch.push_back(f00);
      std::sort(y_branch.begin(), y_branch.end());
      poly_add_term(out, y_branch, c * count);
    }
  }
  return out;
}

Jet::Jet(int truncation) : P(truncation) {
  if (truncation < 0) throw ArgumentError("Jet: negative truncation order");
  c.resize(static_cast<std::size_t>(truncation) + 1);
}

Jet jet_one(int P) {
  Jet out(P);
  out.c[0].emplace(Monomial{}, Cplx(1.0));
  return out;
}

bool jet_equal(const Jet& x, const Jet& y) { return x.P == y.P && x.c == y.c; }

namespace {
void require_same_order(const Jet& x, const Jet& y, const char* who) {
  if (x.P != y.P) throw ArgumentError(std::string(who) + ": mismatched truncation orders");
}
} // namespace

Jet jet_add(const Jet& x, const Jet& y) {
  require_same_order(x, y, "jet_add");
  Jet out = x;
  for (int k = 0; k <= x.P; ++k)
    for (const auto& [m, c] : y.c[k]) poly_add_term(out.c[k], m, c);
  return out;
}

Jet jet_sub(const Jet& x, const Jet& y) {
  require_same_order(x, y, "jet_sub");
  Jet out = x;
  for (int k = 0; k <= x.P; ++k)
    for (const auto& [m, c] : y.c[k]) poly_add_term(out.c[k], m, -c);
  return out;
}

Jet jet_scale(const Jet& x, Cplx s) {
  Jet out(x.P);
  for (int k = 0; k <= x.P; ++k) out.c[k] = poly_scale(x.c[k], s);
  return out;
}

Jet jet_mul(const Jet& x, const Jet& y) {
  require_same_order(x, y, "jet_mul");
  Jet out(x.P);
  for (int i = 0; i <= x.P; ++i) {
    if (x.c[i].empty()) continue;
    for (int j = 0; i + j <= x.P; ++j) {
      if (y.c[j].empty()) continue;
      Poly prod = poly_mul(x.c[i], y.c[j]);
      for (const auto& [m, c] : prod) poly_add_term(out.c[i + j], m, c);
    }
  }
  return out;
}

Jet jet_truncate(const Jet& x, int new_p) {
  if (new_p < 0) throw ArgumentError("jet_truncate: negative order");
  Jet out(new_p);
  for (int k = 0; k <= std::min(new_p, x.P); ++k) out.c[k] = x.c[k];
  return out;
}

Jet jet_mul_h(const Jet& x, Cplx s) {
  Jet out(x.P);
  for (int k = 0; k + 1 <= x.P; ++k) out.c[k + 1] = poly_scale(x.c[k], s);
  return out;
}

Jet restrict_jet(const Jet& x, JetRestriction r) {
  if (r == JetRestriction::Full) return x;
  Jet out(x.P);
  for (int k = 0; k <= x.P; ++k) {
    for (const auto& [m, c] : x.c[k]) {
      bool keep = true;
      if (r == JetRestriction::Autonomous) {
        for (int code : m)
          if (deriv_a(code) > 0) { keep = false; break; }
      } else { // Linear: exactly one F00 factor, the rest F01
        int n00 = 0;
        for (int code : m) {
          if (code == deriv_code(0, 0)) ++n00;
          else if (code != deriv_code(0, 1)) { keep = false; break; }
        }
        keep = keep && n00 == 1;
      }
      if (keep) out.c[k].emplace(m, c);
    }
  }
  return out;
}

Jet exact_flow_jet(int P, bool autonomous_only) {
  if (P < 2 || P > 6) throw ArgumentError("exact_flow_jet: P must be in [2, 6]");
  Jet out(P);
  Poly deriv; // y^(k) as a polynomial; y^(1) = F00
  deriv.emplace(Monomial{deriv_code(0, 0)}, Cplx(1.0));
  double factorial = 1.0;
  for (int k = 1; k <= P; ++k) {
    factorial *= k;
    out.c[k] = poly_scale(deriv, 1.0 / factorial);
    if (k < P) deriv = d_total(deriv);
  }
  return autonomous_only ? restrict_jet(out, JetRestriction::Autonomous) : out;
}

Jet f_eval_jet(Cplx tau, const Jet& dy) {
  if (!dy.c[0].empty()) throw ArgumentError("f_eval_jet: argument must be a state jet (no h^0 term)");
  const int P = dy.P;
  const int cap = std::min(kMaxDerivTotal, P - 1); // deeper terms die under the *h shift

  std::vector<Jet> dy_pow;
  dy_pow.push_back(jet_one(P));
  for (int b = 1; b <= cap; ++b) dy_pow.push_back(jet_mul(dy_pow.back(), dy));

  Jet out(P);
  double a_fact = 1.0;
  Cplx tau_pow(1.0);
  for (int a = 0; a <= cap; ++a) {
    double b_fact = 1.0;
    for (int b = 0; a + b <= cap; ++b) {
      const Cplx scale = tau_pow / (a_fact * b_fact);
      if (scale != 0.0) {
        const int code = deriv_code(a, b);
        const Jet& yb = dy_pow[static_cast<std::size_t>(b)];
        for (int k = 0; k + a <= P; ++k) {
          for (const auto& [m, c] : yb.c[k]) {
            Monomial mm = m;
            mm.insert(std::lower_bound(mm.begin(), mm.end(), code), code);
            poly_add_term(out.c[k + a], mm, c * scale);
          }
        }
      }
      b_fact *= b + 1;
    }
    a_fact *= a + 1;
    tau_pow *= tau;
  }
  return out;
}

Jet picard_fixed_point(const std::function<Jet(const Jet&)>& step, const Jet& start,
                       std::vector<Jet>* iterates) {
  Jet y = start;
  for (int it = 0; it <= start.P + 2; ++it) {
    Jet next = step(y);
    if (iterates) iterates->push_back(next);
    if (jet_equal(next, y)) return y;
    y = std::move(next);
  }
  throw InternalError("picard_fixed_point: jets failed to stabilize within P+2 iterations");
}

std::string jet_to_string(const Jet& x) {
  std::ostringstream os;
  for (int k = 0; k <= x.P; ++k) {
    if (x.c[k].empty()) continue;
    os << "h^" << k << ": ";
    bool first = true;
    for (const auto& [m, c] : x.c[k]) {
      if (!first) os << " + ";
      first = false;
      os << "(" << fmt17(c.real()) << (c.imag() < 0 ? "-" : "+") << fmt17(std::abs(c.imag()))
         << "i)*" << monomial_name(m);
    }
    os << "\n";
  }
  return os.str();
}

} // namespace ctstep
