#include "ctstep/scheme.hpp"

#include <algorithm>
#include <cmath>

#include "ctstep/errors.hpp"

namespace ctstep {

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::EulerPath: return "euler-path";
    case SchemeKind::ImplicitMidpointPath: return "implicit-midpoint-path";
    case SchemeKind::BackwardEulerPath: return "backward-euler-path";
    case SchemeKind::CompositeRk23: return "composite-rk23";
  }
  throw ArgumentError("to_string: unknown scheme kind");
}

SchemeKind scheme_kind_from_string(const std::string& s) {
  if (s == "euler-path") return SchemeKind::EulerPath;
  if (s == "implicit-midpoint-path") return SchemeKind::ImplicitMidpointPath;
  if (s == "backward-euler-path") return SchemeKind::BackwardEulerPath;
  if (s == "composite-rk23") return SchemeKind::CompositeRk23;
  throw ArgumentError("unknown scheme kind '" + s + "'");
}

Cplx composite_b_sum(const CompositeRk23& q) {
  return q.b11 + q.b12 + q.b21 + q.b22 + q.b23;
}

void validate_scheme(const SchemeDescriptor& s) {
  if (s.kind == SchemeKind::CompositeRk23) {
    const Cplx sum = composite_b_sum(s.rk23);
    if (std::abs(sum.real() - 1.0) > 1e-12 || std::abs(sum.imag()) > 1e-12) {
      throw ArgumentError("composite-rk23: b coefficients must sum to 1, got " +
                          fmt17(sum.real()) + " + " + fmt17(sum.imag()) + "i");
    }
    return;
  }
  if (s.weights.empty()) throw ArgumentError(to_string(s.kind) + ": needs at least one weight");
}

SchemeDescriptor make_path_scheme(const ComplexPath& path) {
  SchemeDescriptor s;
  switch (path.validity_class) {
    case PathClass::ImplicitMidpoint: s.kind = SchemeKind::ImplicitMidpointPath; break;
    case PathClass::BackwardEuler: s.kind = SchemeKind::BackwardEulerPath; break;
    default: s.kind = SchemeKind::EulerPath; break;
  }
  s.weights = path.weights;
  s.real_projection = path.requires_real_projection;
  validate_scheme(s);
  return s;
}

SchemeDescriptor make_composite_scheme(const CompositeRk23& q, bool real_projection) {
  SchemeDescriptor s;
  s.kind = SchemeKind::CompositeRk23;
  s.rk23 = q;
  s.real_projection = real_projection;
  validate_scheme(s);
  return s;
}

namespace {

nlohmann::json cplx_json(Cplx z) { return nlohmann::json{z.real(), z.imag()}; }

Cplx cplx_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    throw ArgumentError(std::string(what) + " must be [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

const std::vector<std::string>& composite_keys() {
  static const std::vector<std::string> keys{"a121", "b11", "b12", "a221", "a231",
                                             "a232", "b21", "b22", "b23"};
  return keys;
}

} // namespace

nlohmann::json scheme_to_json(const SchemeDescriptor& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}, {"real_projection", s.real_projection}};
  if (s.kind == SchemeKind::CompositeRk23) {
    const CompositeRk23& q = s.rk23;
    const Cplx* vals[] = {&q.a121, &q.b11, &q.b12, &q.a221, &q.a231,
                          &q.a232, &q.b21, &q.b22, &q.b23};
    nlohmann::json coeffs;
    for (std::size_t i = 0; i < composite_keys().size(); ++i) {
      coeffs[composite_keys()[i]] = cplx_json(*vals[i]);
    }
    j["coefficients"] = std::move(coeffs);
  } else {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& z : s.weights) w.push_back(cplx_json(z));
    j["weights"] = std::move(w);
  }
  return j;
}

SchemeDescriptor scheme_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("scheme JSON must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "kind" && k != "real_projection" && k != "weights" && k != "coefficients") {
      throw ArgumentError("scheme JSON has unknown field '" + k + "'");
    }
  }
  if (!j.contains("kind") || !j.contains("real_projection")) {
    throw ArgumentError("scheme JSON needs 'kind' and 'real_projection'");
  }
  SchemeDescriptor s;
  s.kind = scheme_kind_from_string(j.at("kind").get<std::string>());
  s.real_projection = j.at("real_projection").get<bool>();
  if (s.kind == SchemeKind::CompositeRk23) {
    if (!j.contains("coefficients") || j.contains("weights")) {
      throw ArgumentError("composite scheme JSON needs 'coefficients' and no 'weights'");
    }
    const auto& coeffs = j.at("coefficients");
    if (!coeffs.is_object()) throw ArgumentError("'coefficients' must be an object");
    for (auto it = coeffs.begin(); it != coeffs.end(); ++it) {
      if (std::find(composite_keys().begin(), composite_keys().end(), it.key()) ==
          composite_keys().end()) {
        throw ArgumentError("composite coefficients: unknown key '" + it.key() + "'");
      }
    }
    Cplx* vals[] = {&s.rk23.a121, &s.rk23.b11, &s.rk23.b12, &s.rk23.a221, &s.rk23.a231,
                    &s.rk23.a232, &s.rk23.b21, &s.rk23.b22, &s.rk23.b23};
    for (std::size_t i = 0; i < composite_keys().size(); ++i) {
      const std::string& key = composite_keys()[i];
      if (!coeffs.contains(key)) throw ArgumentError("composite coefficients: missing '" + key + "'");
      *vals[i] = cplx_from_json(coeffs.at(key), key.c_str());
    }
  } else {
    if (!j.contains("weights") || j.contains("coefficients")) {
      throw ArgumentError("path scheme JSON needs 'weights' and no 'coefficients'");
    }
    for (const auto& e : j.at("weights")) s.weights.push_back(cplx_from_json(e, "weight"));
  }
  validate_scheme(s);
  return s;
}

} // namespace ctstep
