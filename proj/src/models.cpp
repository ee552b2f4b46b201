#include "nhmp/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "nhmp/errors.hpp"

namespace nhmp {

namespace {

Eigen::Matrix3d unit_skew(int a, int b) {
  Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
  G(a, b) = 1.0;
  G(b, a) = -1.0;
  return G;
}

// Adds vec(G R) and its Jacobian block for a row-major rotation block.
void add_rotation_part(const Eigen::Matrix3d& G, int off, const Vec& x, Vec* v, Mat* J) {
  if (v) {
    const Eigen::Matrix3d GR = G * rotation_at(x, off);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) (*v)[off + 3 * r + c] += GR(r, c);
  }
  if (J) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k) (*J)(off + 3 * r + c, off + 3 * k + c) += G(r, k);
  }
}

ControlFrame unicycle() {
  ControlFrame f;
  f.name = "unicycle";
  f.dim = 3;
  VectorField F1{3,
                 [](const Vec& x) { return Vec((Vec(3) << std::cos(x[2]), std::sin(x[2]), 0).finished()); },
                 [](const Vec& x) {
                   Mat J = Mat::Zero(3, 3);
                   J(0, 2) = -std::sin(x[2]);
                   J(1, 2) = std::cos(x[2]);
                   return J;
                 }};
  VectorField F2{3, [](const Vec&) { return Vec((Vec(3) << 0, 0, 1).finished()); },
                 [](const Vec&) { return Mat(Mat::Zero(3, 3)); }};
  f.fields = {F1, F2};
  return f;
}

ControlFrame car_trailer() {
  ControlFrame f;
  f.name = "car-trailer";
  f.dim = 4;
  VectorField F1{4,
                 [](const Vec& x) {
                   return Vec((Vec(4) << std::cos(x[2]), std::sin(x[2]), 0, 1).finished());
                 },
                 [](const Vec& x) {
                   Mat J = Mat::Zero(4, 4);
                   J(0, 2) = -std::sin(x[2]);
                   J(1, 2) = std::cos(x[2]);
                   return J;
                 }};
  VectorField F2{4,
                 [](const Vec& x) { return Vec((Vec(4) << 0, 0, 1, -std::sin(x[3])).finished()); },
                 [](const Vec& x) {
                   Mat J = Mat::Zero(4, 4);
                   J(3, 3) = -std::cos(x[3]);
                   return J;
                 }};
  f.fields = {F1, F2};
  return f;
}

ControlFrame ball(bool trailer, double L) {
  ControlFrame f;
  f.name = trailer ? "ball-trailer" : "ball-plate";
  f.dim = trailer ? 12 : 11;
  const int n = f.dim;
  const Eigen::Matrix3d G1 = unit_skew(0, 2);
  const Eigen::Matrix3d G2 = unit_skew(1, 2);
  f.rotation = RotationBlock{2, {G1, G2}};
  for (int i = 0; i < 2; ++i) {
    const Eigen::Matrix3d G = i == 0 ? G1 : G2;
    VectorField F;
    F.dim = n;
    F.eval = [=](const Vec& x) {
      Vec v = Vec::Zero(n);
      v[i] = 1.0;
      add_rotation_part(G, 2, x, &v, nullptr);
      if (trailer) v[11] = -(i == 0 ? std::cos(x[11]) : std::sin(x[11])) / L;
      return v;
    };
    F.jacobian = [=](const Vec& x) {
      Mat J = Mat::Zero(n, n);
      add_rotation_part(G, 2, x, nullptr, &J);
      if (trailer) J(11, 11) = (i == 0 ? std::sin(x[11]) : -std::cos(x[11])) / L;
      return J;
    };
    f.fields.push_back(F);
  }
  return f;
}

}  // namespace

ControlFrame make_system(const SystemSpec& spec) {
  switch (spec.kind) {
    case SystemKind::Unicycle:
      return unicycle();
    case SystemKind::CarTrailer:
      return car_trailer();
    case SystemKind::BallPlate:
      return ball(false, 1.0);
    case SystemKind::BallTrailer:
      if (!(spec.L > 0.0) || !std::isfinite(spec.L))
        throw InvalidInput("ball-trailer: L must be positive");
      return ball(true, spec.L);
  }
  throw InvalidInput("make_system: unknown kind");
}

SystemKind parse_system_kind(const std::string& name) {
  if (name == "unicycle") return SystemKind::Unicycle;
  if (name == "car-trailer" || name == "cartrailer") return SystemKind::CarTrailer;
  if (name == "ball-plate" || name == "ballplate") return SystemKind::BallPlate;
  if (name == "ball-trailer" || name == "balltrailer") return SystemKind::BallTrailer;
  throw InvalidInput("unknown system '" + name + "'");
}

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::Unicycle: return "unicycle";
    case SystemKind::CarTrailer: return "car-trailer";
    case SystemKind::BallPlate: return "ball-plate";
    case SystemKind::BallTrailer: return "ball-trailer";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "contact" || name == "heisenberg") return Family::Contact;
  if (name == "onestep" || name == "one-step-free") return Family::OneStepFree;
  if (name == "42" || name == "four-two") return Family::FourTwo;
  if (name == "52" || name == "five-two") return Family::FiveTwo;
  if (name == "62" || name == "six-two") return Family::SixTwo;
  throw InvalidInput("unknown model family '" + name + "'");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::Contact: return "contact";
    case Family::OneStepFree: return "one-step-free";
    case Family::FourTwo: return "four-two";
    case Family::FiveTwo: return "five-two";
    case Family::SixTwo: return "six-two";
  }
  return "?";
}

int NilpotentModel::dim() const {
  switch (family) {
    case Family::Contact: return 3;
    case Family::OneStepFree: return p + p * (p - 1) / 2;
    case Family::FourTwo: return 4;
    case Family::FiveTwo: return 5;
    case Family::SixTwo: return 6;
  }
  return 0;
}

std::vector<int> NilpotentModel::weights() const {
  switch (family) {
    case Family::Contact: return {1, 1, 2};
    case Family::OneStepFree: {
      std::vector<int> w(p, 1);
      w.resize(dim(), 2);
      return w;
    }
    case Family::FourTwo: return {1, 1, 2, 3};
    case Family::FiveTwo: return {1, 1, 2, 3, 3};
    case Family::SixTwo: return {1, 1, 2, 3, 3, 4};
  }
  return {};
}

std::vector<std::string> NilpotentModel::coordinate_names() const {
  switch (family) {
    case Family::Contact: return {"x1", "x2", "y"};
    case Family::OneStepFree: {
      std::vector<std::string> n;
      for (int i = 1; i <= p; ++i) n.push_back("x" + std::to_string(i));
      const int k = p * (p - 1) / 2;
      for (int i = 1; i < k; ++i) n.push_back("y" + std::to_string(i));
      n.push_back("w");
      return n;
    }
    case Family::FourTwo: return {"x1", "x2", "y", "w"};
    case Family::FiveTwo: return {"x1", "x2", "y", "z", "w"};
    case Family::SixTwo: return {"x1", "x2", "y", "z1", "z2", "w"};
  }
  return {};
}

Eigen::Matrix2d NilpotentModel::Q_at(double w) const {
  if (Q) return Q(w);
  return delta_at(w) * Eigen::Matrix2d::Identity();
}

NilpotentModel contact_model(double scale) {
  NilpotentModel m;
  m.family = Family::Contact;
  if (scale != 1.0) m.delta = [scale](double) { return scale; };
  return m;
}

NilpotentModel one_step_free(int p) {
  NilpotentModel m;
  m.family = Family::OneStepFree;
  m.p = p;
  return m;
}

NilpotentModel four_two(ScalarFn delta) {
  NilpotentModel m;
  m.family = Family::FourTwo;
  m.delta = std::move(delta);
  return m;
}

NilpotentModel five_two(ScalarFn delta) {
  NilpotentModel m;
  m.family = Family::FiveTwo;
  m.delta = std::move(delta);
  return m;
}

NilpotentModel six_two(ScalarFn delta, QuadFn Q) {
  NilpotentModel m;
  m.family = Family::SixTwo;
  m.delta = std::move(delta);
  m.Q = std::move(Q);
  return m;
}

namespace {

double deriv(const ScalarFn& f, double w) {
  if (!f) return 0.0;
  const double h = 1e-5 * (1.0 + std::abs(w));
  return (f(w + h) - f(w - h)) / (2 * h);
}

// Row multiplier m(state) and its gradient.
struct Moment {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
};

// Frame x_i' = u_i (i < 2), row j' = m_j(state) (x2 u1 - x1 u2) / 2.
ControlFrame planar_frame(std::string name, int n, std::vector<std::pair<int, Moment>> rows) {
  ControlFrame f;
  f.name = std::move(name);
  f.dim = n;
  for (int i = 0; i < 2; ++i) {
    VectorField F;
    F.dim = n;
    F.eval = [=](const Vec& x) {
      Vec v = Vec::Zero(n);
      v[i] = 1.0;
      const double ai = i == 0 ? 0.5 * x[1] : -0.5 * x[0];
      for (const auto& [row, m] : rows) v[row] = m.value(x) * ai;
      return v;
    };
    F.jacobian = [=](const Vec& x) {
      Mat J = Mat::Zero(n, n);
      const double ai = i == 0 ? 0.5 * x[1] : -0.5 * x[0];
      for (const auto& [row, m] : rows) {
        J.row(row) = ai * m.grad(x).transpose();
        J(row, i == 0 ? 1 : 0) += (i == 0 ? 0.5 : -0.5) * m.value(x);
      }
      return J;
    };
    f.fields.push_back(F);
  }
  return f;
}

Moment constant_moment(int n) {
  return {[](const Vec&) { return 1.0; }, [n](const Vec&) { return Vec(Vec::Zero(n)); }};
}

Moment coordinate_moment(int n, int idx) {
  return {[idx](const Vec& x) { return x[idx]; },
          [n, idx](const Vec&) {
            Vec g = Vec::Zero(n);
            g[idx] = 1.0;
            return g;
          }};
}

ControlFrame one_step_frame(const NilpotentModel& m) {
  const int p = m.p;
  const int n = m.dim();
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
  const ScalarFn delta = m.delta;
  ControlFrame f;
  f.name = "one-step-free";
  f.dim = n;
  for (int k = 0; k < p; ++k) {
    VectorField F;
    F.dim = n;
    F.eval = [=](const Vec& x) {
      Vec v = Vec::Zero(n);
      v[k] = 1.0;
      for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto [i, j] = pairs[r];
        double c = 0.0;
        if (k == i) c = 0.5 * x[j];
        if (k == j) c = -0.5 * x[i];
        if (r + 1 == pairs.size() && delta) c *= delta(x[n - 1]);
        v[p + static_cast<int>(r)] = c;
      }
      return v;
    };
    F.jacobian = [=](const Vec& x) {
      Mat J = Mat::Zero(n, n);
      for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto [i, j] = pairs[r];
        const int row = p + static_cast<int>(r);
        const bool last = r + 1 == pairs.size();
        const double s = last && delta ? delta(x[n - 1]) : 1.0;
        if (k == i) {
          J(row, j) = 0.5 * s;
          if (last && delta) J(row, n - 1) = 0.5 * x[j] * deriv(delta, x[n - 1]);
        }
        if (k == j) {
          J(row, i) = -0.5 * s;
          if (last && delta) J(row, n - 1) = -0.5 * x[i] * deriv(delta, x[n - 1]);
        }
      }
      return J;
    };
    f.fields.push_back(F);
  }
  return f;
}

void check_delta(const NilpotentModel& m) {
  if (!m.delta) return;
  if (!(m.w_max >= m.w_min)) throw InvalidInput("make_nilpotent: empty w interval");
  const int samples = 2001;
  double prev = m.delta(m.w_min);
  for (int i = 0; i < samples; ++i) {
    const double w = m.w_min + (m.w_max - m.w_min) * i / (samples - 1);
    const double d = m.delta(w);
    if (!std::isfinite(d)) throw InvalidInput("make_nilpotent: non-finite delta");
    if (d == 0.0 || (prev != 0.0 && (d > 0) != (prev > 0)))
      throw SingularInvariant(
          "delta vanishes on the working interval near w = " + std::to_string(w) +
          "; the regular entropy formula does not apply, use the logarithmic estimate");
    prev = d;
  }
}

}  // namespace

ControlFrame make_nilpotent(const NilpotentModel& model) {
  const int n = model.dim();
  if (model.family == Family::OneStepFree) {
    if (model.p < 2) throw InvalidInput("one-step-free: p must be >= 2");
  }
  check_delta(model);
  const ScalarFn delta = model.delta;
  auto delta_moment = [&](int w_idx, int factor_idx) -> Moment {
    // delta(w) * x_factor  (factor_idx < 0: delta(w) alone)
    return {[=](const Vec& x) {
              const double d = delta ? delta(x[w_idx]) : 1.0;
              return factor_idx < 0 ? d : d * x[factor_idx];
            },
            [=](const Vec& x) {
              Vec g = Vec::Zero(n);
              const double d = delta ? delta(x[w_idx]) : 1.0;
              const double dd = deriv(delta, x[w_idx]);
              if (factor_idx < 0) {
                g[w_idx] = dd;
              } else {
                g[factor_idx] = d;
                g[w_idx] = dd * x[factor_idx];
              }
              return g;
            }};
  };

  switch (model.family) {
    case Family::Contact:
      return planar_frame("contact", 3, {{2, delta_moment(2, -1)}});
    case Family::OneStepFree:
      return one_step_frame(model);
    case Family::FourTwo:
      return planar_frame("four-two", 4, {{2, constant_moment(4)}, {3, delta_moment(3, 0)}});
    case Family::FiveTwo:
      return planar_frame("five-two", 5,
                          {{2, constant_moment(5)}, {3, coordinate_moment(5, 1)}, {4, delta_moment(4, 0)}});
    case Family::SixTwo: {
      const NilpotentModel copy = model;
      Moment q{[copy](const Vec& x) {
                 const Eigen::Vector2d xy(x[0], x[1]);
                 return double(xy.transpose() * copy.Q_at(x[5]) * xy);
               },
               [copy](const Vec& x) {
                 const Eigen::Vector2d xy(x[0], x[1]);
                 const Eigen::Matrix2d Q = copy.Q_at(x[5]);
                 Vec g = Vec::Zero(6);
                 g.head<2>() = (Q + Q.transpose()) * xy;
                 const double h = 1e-5 * (1.0 + std::abs(x[5]));
                 const Eigen::Matrix2d dQ = (copy.Q_at(x[5] + h) - copy.Q_at(x[5] - h)) / (2 * h);
                 g[5] = xy.transpose() * dQ * xy;
                 return g;
               }};
      if (model.Q) {
        const Eigen::Matrix2d Q0 = model.Q(0.5 * (model.w_min + model.w_max));
        if ((Q0 - Q0.transpose()).norm() > 1e-12 * (1.0 + Q0.norm()))
          throw InvalidInput("six-two: Q must be symmetric");
      }
      return planar_frame("six-two", 6,
                          {{2, constant_moment(6)},
                           {3, coordinate_moment(6, 1)},
                           {4, coordinate_moment(6, 0)},
                           {5, q}});
    }
  }
  throw InvalidInput("make_nilpotent: unknown family");
}

int remainder_degree(const NilpotentModel& base, int row) {
  const bool two_step = base.family == Family::Contact || base.family == Family::OneStepFree;
  const int p = base.family == Family::OneStepFree ? base.p : 2;
  if (two_step) return row < p ? 0 : 1;
  if (row < 2) return 1;
  const int w = base.weights()[row];
  if (base.family == Family::SixTwo) return w - 1;
  return w == 2 ? 1 : 2;
}

namespace {

struct Monomial {
  double coeff;
  std::vector<int> exps;
};

// Random weighted-homogeneous polynomial in the transverse coordinates (the
// last coordinate runs along the curve and carries weight 0).
struct Poly {
  std::vector<Monomial> terms;

  double eval(const Vec& x) const {
    double s = 0.0;
    for (const auto& m : terms) {
      double v = m.coeff;
      for (std::size_t i = 0; i < m.exps.size(); ++i)
        for (int e = 0; e < m.exps[i]; ++e) v *= x[static_cast<Eigen::Index>(i)];
      s += v;
    }
    return s;
  }
};

void enumerate(const std::vector<int>& w, std::size_t i, int remaining, std::vector<int>& cur,
               std::vector<std::vector<int>>& out) {
  if (i == w.size()) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  if (w[i] == 0) {
    cur[i] = 0;
    enumerate(w, i + 1, remaining, cur, out);
    return;
  }
  for (int e = 0; e * w[i] <= remaining; ++e) {
    cur[i] = e;
    enumerate(w, i + 1, remaining - e * w[i], cur, out);
  }
  cur[i] = 0;
}

Poly random_poly(const std::vector<int>& weights, int degree, double mag, std::mt19937_64& gen) {
  std::vector<int> w = weights;
  w.back() = 0;
  std::vector<std::vector<int>> exps;
  std::vector<int> cur(w.size(), 0);
  enumerate(w, 0, degree, cur, exps);
  Poly p;
  for (auto& e : exps) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    p.terms.push_back({(2.0 * u - 1.0) * mag, std::move(e)});
  }
  return p;
}

}  // namespace

ControlFrame make_perturbed(const NilpotentModel& base, const Magnitudes& mags, std::uint64_t seed) {
  for (double m : {mags.x, mags.y, mags.z, mags.w})
    if (!std::isfinite(m)) throw InvalidInput("make_perturbed: magnitudes must be finite");
  ControlFrame nil = make_nilpotent(base);
  const int n = nil.dim;
  const int p = nil.rank();
  const std::vector<int> weights = base.weights();
  std::mt19937_64 gen(seed);

  // Magnitude per row: x rows, then y-like, z-like, w.
  auto row_mag = [&](int row) {
    if (row < p) return mags.x;
    if (row == n - 1) return mags.w;
    return weights[row] == 2 ? mags.y : mags.z;
  };
  const Poly beta = random_poly(weights, remainder_degree(base, 0), mags.x, gen);
  std::vector<Poly> rho(n);
  for (int r = p; r < n; ++r) rho[r] = random_poly(weights, remainder_degree(base, r), row_mag(r), gen);

  ControlFrame f;
  f.name = nil.name + "-perturbed";
  f.dim = n;
  for (int i = 0; i < p; ++i) {
    VectorField F;
    F.dim = n;
    F.depth = 1;
    const VectorField B = nil.fields[i];
    F.eval = [=](const Vec& x) {
      Vec v = B.eval(x);
      const double b = beta.eval(x);
      if (p == 2) {
        // beta * (x2^2 u1 - x1 x2 u2, x1^2 u2 - x1 x2 u1)
        if (i == 0) {
          v[0] += b * x[1] * x[1];
          v[1] -= b * x[0] * x[1];
        } else {
          v[0] -= b * x[0] * x[1];
          v[1] += b * x[0] * x[0];
        }
      } else {
        // |x|^2 e_i - x_i x, the p-control analogue
        const double r2 = x.head(p).squaredNorm();
        v.head(p) += b * (r2 * Vec::Unit(p, i) - x[i] * x.head(p));
      }
      for (int r = p; r < n; ++r) {
        // rho_r times the area-type form paired with u_i
        double a = 0.0;
        if (p == 2) {
          a = i == 0 ? 0.5 * x[1] : -0.5 * x[0];
        } else {
          const int partner = (i + 1) % p;
          a = 0.5 * x[partner];
        }
        v[r] += rho[r].eval(x) * a;
      }
      return v;
    };
    f.fields.push_back(F);
  }
  return f;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

Vec dilate(const Vec& x, const std::vector<int>& weights, double s) {
  if (static_cast<Eigen::Index>(weights.size()) != x.size())
    throw InvalidInput("dilate: weight count does not match state");
  Vec out = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] *= std::pow(s, weights[i]);
  return out;
}

}  // namespace nhmp
