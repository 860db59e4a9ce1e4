#include "ctstep/problems.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace ctstep {

namespace {

constexpr double kPi = std::numbers::pi;

StateVec scalar_state(Cplx v) {
  StateVec s(1);
  s[0] = v;
  return s;
}

OdeProblem make_shm() {
  OdeProblem p;
  p.name = "shm";
  p.dimension = 2;
  p.rhs = [](Cplx, const StateVec& y) {
    StateVec f(2);
    f[0] = y[1];
    f[1] = -y[0];
    return f;
  };
  p.y0 = StateVec(2);
  p.y0 << Cplx(1.0), Cplx(0.0);
  p.exact = [](double t) {
    StateVec s(2);
    s << Cplx(std::cos(t)), Cplx(-std::sin(t));
    return s;
  };
  p.dense_jacobian = [](Cplx, const StateVec&) {
    StateMat j(2, 2);
    j << Cplx(0.0), Cplx(1.0), Cplx(-1.0), Cplx(0.0);
    return j;
  };
  p.constant_jacobian = true;
  return p;
}

OdeProblem make_square() {
  OdeProblem p;
  p.name = "square";
  p.rhs = [](Cplx, const StateVec& y) { return scalar_state(-y[0] * y[0]); };
  p.y0 = scalar_state(1.0);
  p.exact = [](double t) { return scalar_state(1.0 / (1.0 + t)); };
  p.dense_jacobian = [](Cplx, const StateVec& y) {
    StateMat j(1, 1);
    j(0, 0) = -2.0 * y[0];
    return j;
  };
  return p;
}

OdeProblem make_exp_problem() {
  OdeProblem p;
  p.name = "exp";
  p.rhs = [](Cplx, const StateVec& y) { return scalar_state(-std::exp(y[0])); };
  p.y0 = scalar_state(1.0);
  // separable: d/dt e^{-y} = 1, so y(t) = -log(t + e^{-1})
  p.exact = [](double t) { return scalar_state(-std::log(t + std::exp(-1.0))); };
  p.dense_jacobian = [](Cplx, const StateVec& y) {
    StateMat j(1, 1);
    j(0, 0) = -std::exp(y[0]);
    return j;
  };
  return p;
}

OdeProblem make_nlsin() {
  OdeProblem p;
  p.name = "nlsin";
  p.rhs = [](Cplx t, const StateVec& y) {
    const Cplx s = std::sin(t);
    return scalar_state(4.0 * y[0] * s * s * s * std::cos(t));
  };
  p.y0 = scalar_state(1.0);
  p.exact = [](double t) {
    const double s = std::sin(t);
    return scalar_state(std::exp(s * s * s * s));
  };
  p.dense_jacobian = [](Cplx t, const StateVec&) {
    const Cplx s = std::sin(t);
    StateMat j(1, 1);
    j(0, 0) = 4.0 * s * s * s * std::cos(t);
    return j;
  };
  return p;
}

OdeProblem make_wave(int modes) {
  const auto op = make_spectral_operator(modes, 2.0 * kPi);
  OdeProblem p;
  p.name = "wave";
  p.dimension = modes;
  const double h = 2.0 * kPi / modes;
  auto profile = [](double s) {
    const double d = std::fmod(s, 2.0 * kPi) - kPi;
    return std::exp(-7.0 * d * d);
  };
  p.y0 = StateVec(modes);
  for (int j = 0; j < modes; ++j) p.y0[j] = profile(j * h);
  // u_t = u_x advects the initial profile leftward: u(x, t) = u0(x + t).
  p.rhs = [op](Cplx, const StateVec& u) { return StateVec(op.d1 * u); };
  p.exact = [profile, h, modes](double t) {
    StateVec s(modes);
    for (int j = 0; j < modes; ++j) s[j] = profile(j * h + t);
    return s;
  };
  p.dense_jacobian = [op](Cplx, const StateVec&) { return op.d1; };
  p.constant_jacobian = true;
  return p;
}

OdeProblem make_burgers(int modes, double nu) {
  const auto op = make_spectral_operator(modes, 2.0 * kPi);
  OdeProblem p;
  p.name = "burgers";
  p.dimension = modes;
  p.t_end = 2.0;
  const double h = 2.0 * kPi / modes;
  auto solution = [nu](double x, double t) {
    const double decay = std::exp(-nu * t);
    return 2.0 * nu * decay * std::sin(x) / (1.5 + decay * std::cos(x));
  };
  p.y0 = StateVec(modes);
  for (int j = 0; j < modes; ++j) p.y0[j] = solution(j * h, 0.0);
  p.rhs = [op, nu](Cplx, const StateVec& u) {
    return StateVec(nu * (op.d2 * u) - u.cwiseProduct(op.d1 * u));
  };
  p.exact = [solution, h, modes](double t) {
    StateVec s(modes);
    for (int j = 0; j < modes; ++j) s[j] = solution(j * h, t);
    return s;
  };
  p.dense_jacobian = [op, nu](Cplx, const StateVec& u) {
    StateMat j = nu * op.d2;
    j -= StateMat((op.d1 * u).asDiagonal());
    j -= u.asDiagonal() * op.d1;
    return j;
  };
  return p;
}

OdeProblem make_schrodinger(int modes) {
  const auto op = make_spectral_operator(modes, 2.0 * kPi);
  OdeProblem p;
  p.name = "schrodinger";
  p.dimension = modes;
  p.t_end = 3.0;
  p.real_solution = false;
  p.stiffness = Stiffness::Stiff;
  const double h = 2.0 * kPi / modes;
  p.y0 = StateVec(modes);
  for (int j = 0; j < modes; ++j) p.y0[j] = std::exp(Cplx(0.0, j * h));
  p.rhs = [op](Cplx, const StateVec& u) { return StateVec(Cplx(0.0, 1.0) * (op.d2 * u)); };
  p.exact = [h, modes](double t) {
    StateVec s(modes);
    for (int j = 0; j < modes; ++j) s[j] = std::exp(Cplx(0.0, j * h - t));
    return s;
  };
  p.dense_jacobian = [op](Cplx, const StateVec&) { return StateMat(Cplx(0.0, 1.0) * op.d2); };
  p.constant_jacobian = true;
  return p;
}

} // namespace

OdeProblem make_dahlquist(Cplx lambda) {
  OdeProblem p;
  p.name = "dahlquist";
  p.rhs = [lambda](Cplx, const StateVec& y) { return scalar_state(lambda * y[0]); };
  p.y0 = scalar_state(1.0);
  p.exact = [lambda](double t) { return scalar_state(std::exp(lambda * t)); };
  p.real_solution = lambda.imag() == 0.0;
  p.dense_jacobian = [lambda](Cplx, const StateVec&) {
    StateMat j(1, 1);
    j(0, 0) = lambda;
    return j;
  };
  p.constant_jacobian = true;
  return p;
}

OdeProblem make_vdp(double mu) {
  OdeProblem p;
  p.name = mu == 1.0 ? "vdp" : "vdp-mu10";
  p.dimension = 2;
  p.rhs = [mu](Cplx, const StateVec& y) {
    StateVec f(2);
    f[0] = y[1];
    f[1] = mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
    return f;
  };
  p.y0 = StateVec(2);
  p.y0 << Cplx(2.0), Cplx(0.0);
  p.stiffness = mu >= 10.0 ? Stiffness::Stiff : Stiffness::NonStiff;
  p.dense_jacobian = [mu](Cplx, const StateVec& y) {
    StateMat j(2, 2);
    j(0, 0) = Cplx(0.0);
    j(0, 1) = Cplx(1.0);
    j(1, 0) = -2.0 * mu * y[0] * y[1] - 1.0;
    j(1, 1) = mu * (1.0 - y[0] * y[0]);
    return j;
  };
  return p;
}

OdeProblem make_heat_problem(int cells) {
  const FdOperator op = make_fd_operator(cells);
  OdeProblem p;
  p.name = "heat";
  p.dimension = cells;
  p.t_end = 0.1;
  p.stiffness = Stiffness::Stiff;
  p.y0 = StateVec(cells);
  for (int j = 0; j < cells; ++j) p.y0[j] = std::sin(kPi * (j + 1) * op.dx);
  p.rhs = [op](Cplx, const StateVec& u) { return fd_laplacian(op, u); };
  p.exact = [op, cells](double t) {
    const double decay = std::exp(-kPi * kPi * t);
    StateVec s(cells);
    for (int j = 0; j < cells; ++j) s[j] = decay * std::sin(kPi * (j + 1) * op.dx);
    return s;
  };
  p.sparse_jacobian = [op](Cplx, const StateVec&) { return fd_matrix(op); };
  p.constant_jacobian = true;
  return p;
}

const std::map<std::string, OdeProblem>& catalog() {
  static const std::map<std::string, OdeProblem> problems = [] {
    std::map<std::string, OdeProblem> m;
    auto put = [&m](OdeProblem p) {
      p.dimension = static_cast<int>(p.y0.size());
      m.emplace(p.name, std::move(p));
    };
    put(make_dahlquist(Cplx(1.0)));
    put(make_shm());
    put(make_square());
    put(make_exp_problem());
    put(make_nlsin());
    put(make_vdp(1.0));
    put(make_vdp(10.0));
    put(make_wave(70));
    put(make_burgers(70, 0.1));
    put(make_heat_problem(400));
    put(make_schrodinger(70));
    return m;
  }();
  return problems;
}

const OdeProblem& catalog_problem(const std::string& name) {
  const auto& m = catalog();
  const auto it = m.find(name);
  if (it == m.end()) {
    std::string known;
    for (const auto& [k, v] : m) known += (known.empty() ? "" : ", ") + k;
    throw NotFoundError("unknown problem '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

SpectralOperator make_spectral_operator(int modes, double length) {
  if (modes < 4) throw ArgumentError("spectral operator needs at least 4 modes");
  if (length <= 0.0) throw ArgumentError("spectral operator needs a positive length");
  const int m = modes;
  StateMat fwd(m, m), inv(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      const double angle = 2.0 * kPi * j * k / m;
      fwd(j, k) = std::exp(Cplx(0.0, -angle));
      inv(j, k) = std::exp(Cplx(0.0, angle)) / static_cast<double>(m);
    }
  }
  const double scale = 2.0 * kPi / length;
  StateVec ik1(m), mk2(m);
  for (int j = 0; j < m; ++j) {
    const int k = j <= m / 2 ? j : j - m;
    // Odd derivative of the unpaired Nyquist mode is set to zero; this keeps
    // D1 anti-Hermitian and the derivative of real data real.
    const double k1 = (2 * j == m) ? 0.0 : k * scale;
    ik1[j] = Cplx(0.0, k1);
    mk2[j] = -(k * scale) * (k * scale);
  }
  SpectralOperator op;
  op.modes = m;
  op.length = length;
  op.d1 = inv * ik1.asDiagonal() * fwd;
  op.d2 = inv * mk2.asDiagonal() * fwd;
  return op;
}

StateVec spectral_derivative(const SpectralOperator& op, const StateVec& u, int order) {
  if (u.size() != op.modes) {
    throw ArgumentError("spectral_derivative: state size " + std::to_string(u.size()) +
                        " does not match " + std::to_string(op.modes) + " modes");
  }
  if (order == 1) return op.d1 * u;
  if (order == 2) return op.d2 * u;
  throw ArgumentError("spectral_derivative supports orders 1 and 2");
}

FdOperator make_fd_operator(int cells) {
  if (cells < 5) throw ArgumentError("fd operator needs at least 5 cells");
  return FdOperator{cells, 1.0 / (cells + 1)};
}

StateVec fd_laplacian(const FdOperator& op, const StateVec& u) {
  const int n = op.cells;
  if (u.size() != n) {
    throw ArgumentError("fd_laplacian: state size " + std::to_string(u.size()) +
                        " does not match " + std::to_string(n) + " cells");
  }
  const double inv = 1.0 / (12.0 * op.dx * op.dx);
  StateVec r(n);
  r[0] = (-29.0 * u[0] + 16.0 * u[1] - u[2]) * inv;
  r[1] = (16.0 * u[0] - 30.0 * u[1] + 16.0 * u[2] - u[3]) * inv;
  for (int j = 2; j < n - 2; ++j) {
    r[j] = (-u[j - 2] + 16.0 * u[j - 1] - 30.0 * u[j] + 16.0 * u[j + 1] - u[j + 2]) * inv;
  }
  r[n - 2] = (16.0 * u[n - 1] - 30.0 * u[n - 2] + 16.0 * u[n - 3] - u[n - 4]) * inv;
  r[n - 1] = (-29.0 * u[n - 1] + 16.0 * u[n - 2] - u[n - 3]) * inv;
  return r;
}

SparseMatC fd_matrix(const FdOperator& op) {
  const int n = op.cells;
  const double inv = 1.0 / (12.0 * op.dx * op.dx);
  std::vector<Eigen::Triplet<Cplx>> trips;
  trips.reserve(5 * static_cast<std::size_t>(n));
  auto add = [&trips, inv](int r, int c, double v) { trips.emplace_back(r, c, Cplx(v * inv)); };
  add(0, 0, -29.0), add(0, 1, 16.0), add(0, 2, -1.0);
  add(1, 0, 16.0), add(1, 1, -30.0), add(1, 2, 16.0), add(1, 3, -1.0);
  for (int j = 2; j < n - 2; ++j) {
    add(j, j - 2, -1.0), add(j, j - 1, 16.0), add(j, j, -30.0);
    add(j, j + 1, 16.0), add(j, j + 2, -1.0);
  }
  add(n - 2, n - 4, -1.0), add(n - 2, n - 3, 16.0), add(n - 2, n - 2, -30.0), add(n - 2, n - 1, 16.0);
  add(n - 1, n - 3, -1.0), add(n - 1, n - 2, 16.0), add(n - 1, n - 1, -29.0);
  SparseMatC m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void write_fixture_csv(std::ostream& os, const FixtureMeta& meta,
                       const std::vector<double>& ts,
                       const std::vector<StateVec>& states) {
  if (ts.size() != states.size()) throw ArgumentError("fixture: times/states size mismatch");
  if (ts.empty()) throw ArgumentError("fixture: no samples");
  const auto n = states.front().size();
  os << "# method=" << meta.method << "\n";
  os << "# dt=" << fmt17(meta.dt) << "\n";
  os << "# seed=" << meta.seed << "\n";
  os << "t";
  for (Eigen::Index j = 0; j < n; ++j) os << ",re_" << j << ",im_" << j;
  os << "\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (states[i].size() != n) throw ArgumentError("fixture: inconsistent state dimension");
    os << fmt17(ts[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      os << "," << fmt17(states[i][j].real()) << "," << fmt17(states[i][j].imag());
    }
    os << "\n";
  }
}

Fixture read_fixture_csv(std::istream& is) {
  Fixture f;
  std::string line;
  bool saw_columns = false;
  Eigen::Index dim = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      const std::string value = line.substr(eq + 1);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      if (key == "method") f.meta.method = value;
      else if (key == "dt") f.meta.dt = std::stod(value);
      else if (key == "seed") f.meta.seed = std::stoull(value);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!saw_columns) {
      if (cells.empty() || cells[0] != "t" || cells.size() % 2 == 0) {
        throw ArgumentError("fixture: malformed column header '" + line + "'");
      }
      dim = static_cast<Eigen::Index>((cells.size() - 1) / 2);
      saw_columns = true;
      continue;
    }
    if (static_cast<Eigen::Index>(cells.size()) != 1 + 2 * dim) {
      throw ArgumentError("fixture: row width mismatch");
    }
    f.ts.push_back(std::stod(cells[0]));
    StateVec s(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      s[j] = Cplx(std::stod(cells[1 + 2 * j]), std::stod(cells[2 + 2 * j]));
    }
    f.states.push_back(std::move(s));
  }
  if (!saw_columns || f.ts.empty()) throw ArgumentError("fixture: no data rows");
  return f;
}

} // namespace ctstep
