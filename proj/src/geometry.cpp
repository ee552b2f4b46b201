#include "nhmp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "nhmp/errors.hpp"

namespace nhmp {

Vec ControlFrame::velocity(const Vec& x, const Vec& u) const {
  Vec v = Vec::Zero(dim);
  for (int i = 0; i < rank(); ++i)
    if (u[i] != 0.0) v += u[i] * fields[i].eval(x);
  return v;
}

void ControlFrame::check_state(const Vec& x) const {
  if (x.size() != dim)
    throw InvalidInput(name + ": state has dimension " + std::to_string(x.size()) +
                       ", expected " + std::to_string(dim));
}

Vec ControlFrame::intrinsic(const Vec& x, const Vec& v) const {
  if (!rotation) return v;
  const int off = rotation->offset;
  Vec out(dim - 6);
  int k = 0;
  for (int i = 0; i < dim; ++i)
    if (i < off || i >= off + 9) out[k++] = v[i];
  const Eigen::Matrix3d R = rotation_at(x, off);
  const Eigen::Matrix3d V = rotation_at(v, off);
  const Eigen::Matrix3d W = V * R.transpose();
  out.segment<3>(k) = vee(0.5 * (W - W.transpose()));
  return out;
}

Eigen::Matrix3d rotation_at(const Vec& x, int offset) {
  Eigen::Matrix3d R;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R(r, c) = x[offset + 3 * r + c];
  return R;
}

void set_rotation(Vec& x, int offset, const Eigen::Matrix3d& R) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) x[offset + 3 * r + c] = R(r, c);
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d S;
  S << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return S;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& S) { return {S(2, 1), S(0, 2), S(1, 0)}; }

Eigen::Matrix3d exp_so3(const Eigen::Matrix3d& skew) {
  const Eigen::Vector3d w = vee(skew);
  const double th = w.norm();
  const Eigen::Matrix3d S = hat(w);
  if (th < 1e-8) return Eigen::Matrix3d::Identity() + S + 0.5 * S * S;
  return Eigen::Matrix3d::Identity() + (std::sin(th) / th) * S +
         ((1.0 - std::cos(th)) / (th * th)) * S * S;
}

void Trajectory::append(const Trajectory& other) {
  if (other.times.empty()) return;
  if (times.empty()) {
    *this = other;
    return;
  }
  const double t0 = times.back();
  const double s0 = arclength.back();
  const std::size_t first = (other.states.front() - states.back()).norm() == 0.0 ? 1 : 0;
  for (std::size_t i = first; i < other.size(); ++i) {
    times.push_back(t0 + other.times[i] - other.times.front());
    states.push_back(other.states[i]);
    controls.push_back(other.controls[i]);
    arclength.push_back(s0 + other.arclength[i] - other.arclength.front());
  }
}

namespace {

struct Stepper {
  const ControlFrame& sys;
  const ControlSignal& u;

  Vec rhs(double t, const Vec& x) const { return sys.velocity(x, u.u(t)); }

  Vec step(double t, const Vec& x, double h) const {
    const Vec k1 = rhs(t, x);
    const Vec k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
    const Vec k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const Vec k4 = rhs(t + h, x + h * k3);
    Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (sys.rotation) {
      const auto& rb = *sys.rotation;
      static const double g = std::sqrt(3.0) / 6.0;
      auto omega = [&](double s) {
        const Vec us = u.u(s);
        Eigen::Matrix3d W = Eigen::Matrix3d::Zero();
        for (std::size_t i = 0; i < rb.generators.size(); ++i) W += us[i] * rb.generators[i];
        return W;
      };
      const Eigen::Matrix3d A1 = omega(t + (0.5 - g) * h);
      const Eigen::Matrix3d A2 = omega(t + (0.5 + g) * h);
      const Eigen::Matrix3d M =
          0.5 * h * (A1 + A2) + (std::sqrt(3.0) / 12.0) * h * h * (A2 * A1 - A1 * A2);
      set_rotation(next, rb.offset, exp_so3(M) * rotation_at(x, rb.offset));
    }
    return next;
  }

  double speed_integral(double t, double h) const {
    return h / 6.0 * (u.u(t).norm() + 4.0 * u.u(t + 0.5 * h).norm() + u.u(t + h).norm());
  }
};

void check_inputs(const ControlFrame& sys, const ControlSignal& u, const Vec& x0, double step) {
  sys.check_state(x0);
  if (!(step > 0.0)) throw InvalidInput("integrate: step must be positive");
  if (u.p != sys.rank())
    throw InvalidInput("integrate: control has " + std::to_string(u.p) + " components, frame has " +
                       std::to_string(sys.rank()));
  if (!(u.duration >= 0.0)) throw InvalidInput("integrate: negative duration");
}

int step_count(double duration, double step) {
  return std::max(1, static_cast<int>(std::ceil(duration / step - 1e-9)));
}

}  // namespace

Trajectory integrate(const ControlFrame& system, const ControlSignal& u, const Vec& x0,
                     double step) {
  check_inputs(system, u, x0, step);
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  traj.controls.push_back(u.u(0.0));
  traj.arclength.push_back(0.0);
  if (u.duration == 0.0) return traj;

  const int n = step_count(u.duration, step);
  const double h = u.duration / n;
  const Stepper st{system, u};
  Vec x = x0;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    x = st.step(t, x, h);
    if (!x.allFinite())
      throw IntegrationDiverged("integrate: non-finite state", t);
    s += st.speed_integral(t, h);
    const double tn = (i + 1 == n) ? u.duration : (i + 1) * h;
    traj.times.push_back(tn);
    traj.states.push_back(x);
    traj.controls.push_back(u.u(tn));
    traj.arclength.push_back(s);
  }
  return traj;
}

Vec integrate_endpoint(const ControlFrame& system, const ControlSignal& u, const Vec& x0,
                       double step) {
  check_inputs(system, u, x0, step);
  if (u.duration == 0.0) return x0;
  const int n = step_count(u.duration, step);
  const double h = u.duration / n;
  const Stepper st{system, u};
  Vec x = x0;
  for (int i = 0; i < n; ++i) {
    x = st.step(i * h, x, h);
    if (!x.allFinite()) throw IntegrationDiverged("integrate: non-finite state", i * h);
  }
  return x;
}

namespace {

// Step for differentiating a field of the given nesting depth: nested
// differences lose about one factor 1/step per level, so deeper fields are
// differentiated with coarser steps.
double fd_step(double h, const Vec& at, int depth) {
  return h * (1.0 + at.norm()) * std::pow(12.0, depth - 1);
}

Vec directional(const VectorField& F, const Vec& at, const Vec& v, double h) {
  if (F.has_jacobian()) return F.jacobian(at) * v;
  const double nv = v.norm();
  if (nv == 0.0) return Vec::Zero(F.dim);
  const Vec dir = v / nv;
  const double s = fd_step(h, at, F.depth);
  auto central = [&](double e) { return Vec((F.eval(at + e * dir) - F.eval(at - e * dir)) / (2 * e)); };
  const Vec d1 = central(s);
  const Vec d2 = central(0.5 * s);
  return nv * (4.0 * d2 - d1) / 3.0;
}

}  // namespace

Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& at, double h) {
  if (!(h > 0.0)) throw InvalidInput("lie_bracket: h must be positive");
  if (X.dim != Y.dim || at.size() != X.dim)
    throw InvalidInput("lie_bracket: dimension mismatch");
  const Vec x = X.eval(at);
  const Vec y = Y.eval(at);
  const Vec out = directional(X, at, y, h) - directional(Y, at, x, h);
  if (!out.allFinite()) throw NumericFailure("lie_bracket: non-finite result");
  return out;
}

VectorField bracket_field(VectorField X, VectorField Y, double h) {
  VectorField B;
  B.dim = X.dim;
  B.depth = X.depth + Y.depth;
  B.eval = [X = std::move(X), Y = std::move(Y), h](const Vec& at) {
    return lie_bracket(X, Y, at, h);
  };
  return B;
}

BracketWord BracketWord::leaf(int i) {
  BracketWord w;
  w.letter = i;
  return w;
}

BracketWord BracketWord::bracket(BracketWord a, BracketWord b) {
  BracketWord w;
  w.parts.push_back(std::move(a));
  w.parts.push_back(std::move(b));
  return w;
}

int BracketWord::length() const {
  return is_leaf() ? 1 : parts[0].length() + parts[1].length();
}

std::string BracketWord::to_string() const {
  if (is_leaf()) return std::to_string(letter);
  return "[" + parts[0].to_string() + "," + parts[1].to_string() + "]";
}

namespace {

BracketWord parse_word(const std::string& s, std::size_t& pos) {
  while (pos < s.size() && s[pos] == ' ') ++pos;
  if (pos >= s.size()) throw InvalidInput("bracket word: unexpected end");
  if (s[pos] == '[' || s[pos] == '(') {
    const char close = s[pos] == '[' ? ']' : ')';
    ++pos;
    BracketWord a = parse_word(s, pos);
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos >= s.size() || s[pos] != ',') throw InvalidInput("bracket word: expected ','");
    ++pos;
    BracketWord b = parse_word(s, pos);
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos >= s.size() || s[pos] != close) throw InvalidInput("bracket word: unbalanced");
    ++pos;
    return BracketWord::bracket(std::move(a), std::move(b));
  }
  std::size_t end = pos;
  while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
  if (end == pos) throw InvalidInput("bracket word: expected a letter index in '" + s + "'");
  const int v = std::stoi(s.substr(pos, end - pos));
  pos = end;
  return BracketWord::leaf(v);
}

void check_letters(const BracketWord& w, int p) {
  if (w.is_leaf()) {
    if (w.letter < 1 || w.letter > p)
      throw InvalidInput("bracket word: letter " + std::to_string(w.letter) + " outside 1.." +
                         std::to_string(p));
    return;
  }
  check_letters(w.parts[0], p);
  check_letters(w.parts[1], p);
}

}  // namespace

BracketWord BracketWord::parse(const std::string& text) {
  std::size_t pos = 0;
  BracketWord w = parse_word(text, pos);
  while (pos < text.size() && text[pos] == ' ') ++pos;
  if (pos != text.size()) throw InvalidInput("bracket word: trailing characters in '" + text + "'");
  return w;
}

VectorField word_field(const ControlFrame& system, const BracketWord& word, double h) {
  check_letters(word, system.rank());
  if (word.is_leaf()) return system.fields[word.letter - 1];
  return bracket_field(word_field(system, word.parts[0], h), word_field(system, word.parts[1], h), h);
}

Vec bracket_word(const ControlFrame& system, const BracketWord& word, const Vec& at, double h) {
  system.check_state(at);
  return word_field(system, word, h).eval(at);
}

std::vector<BracketWord> flag_words(int p, int max_length) {
  std::vector<BracketWord> out;
  for (int i = 1; i <= p; ++i) out.push_back(BracketWord::leaf(i));
  if (max_length < 2) return out;
  std::vector<BracketWord> level;
  for (int a = 1; a <= p; ++a)
    for (int b = a + 1; b <= p; ++b)
      level.push_back(BracketWord::bracket(BracketWord::leaf(a), BracketWord::leaf(b)));
  for (int m = 2; m <= max_length; ++m) {
    out.insert(out.end(), level.begin(), level.end());
    if (m == max_length) break;
    std::vector<BracketWord> next;
    for (int a = 1; a <= p; ++a)
      for (const auto& w : level) next.push_back(BracketWord::bracket(BracketWord::leaf(a), w));
    level = std::move(next);
  }
  return out;
}

int numeric_rank(const Mat& columns, double relative_threshold) {
  if (columns.cols() == 0 || columns.rows() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(columns);
  const Vec sv = svd.singularValues();
  const double top = sv.size() ? sv[0] : 0.0;
  if (top == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double rel = sv[i] / top;
    if (rel > relative_threshold / 10.0 && rel < relative_threshold * 10.0) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "numeric rank ambiguous: singular value ratio %.3e within a factor 10 of "
                    "cutoff %.1e; use a smaller bracket step h",
                    rel, relative_threshold);
      throw AmbiguousRank(buf);
    }
    if (rel > relative_threshold) ++rank;
  }
  return rank;
}

std::vector<int> growth_vector(const ControlFrame& system, const Vec& at, int depth,
                               const RankOptions& opts) {
  if (depth < 1) throw InvalidInput("growth_vector: depth must be >= 1");
  system.check_state(at);
  const auto words = flag_words(system.rank(), depth);
  std::vector<int> dims;
  std::vector<Vec> cols;
  std::size_t k = 0;
  for (int m = 1; m <= depth; ++m) {
    while (k < words.size() && words[k].length() == m) {
      cols.push_back(system.intrinsic(at, bracket_word(system, words[k], at, opts.h)));
      ++k;
    }
    Mat M(system.intrinsic_dim(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) M.col(static_cast<Eigen::Index>(j)) = cols[j];
    dims.push_back(numeric_rank(M, opts.relative_threshold));
  }
  return dims;
}

}  // namespace nhmp
