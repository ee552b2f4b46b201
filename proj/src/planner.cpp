#include "nhmp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "nhmp/errors.hpp"

namespace nhmp {

std::string to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::OneStepContact: return "OneStepContact";
    case CaseTag::CorankLe3: return "CorankLe3";
    case CaseTag::FourTwo: return "FourTwo";
    case CaseTag::FiveTwo: return "FiveTwo";
    case CaseTag::SixTwo: return "SixTwo";
    case CaseTag::Unsupported: return "Unsupported";
  }
  return "Unsupported";
}

namespace {

CaseTag parse_case_tag(const std::string& s) {
  for (CaseTag t : {CaseTag::OneStepContact, CaseTag::CorankLe3, CaseTag::FourTwo, CaseTag::FiveTwo,
                    CaseTag::SixTwo, CaseTag::Unsupported})
    if (to_string(t) == s) return t;
  throw InvalidInput("unknown case tag '" + s + "'");
}

CurveKind parse_curve_kind(const std::string& s) {
  for (CurveKind k : {CurveKind::Circle, CurveKind::MultiFreq, CurveKind::Elastica, CurveKind::SixTwoDance})
    if (to_string(k) == s) return k;
  throw InvalidInput("unknown curve kind '" + s + "'");
}

std::string growth_string(const std::vector<int>& g) {
  std::string s = "(";
  for (std::size_t i = 0; i < g.size(); ++i) s += (i ? "," : "") + std::to_string(g[i]);
  return s + ")";
}

CaseTag tag_of(const std::vector<int>& g, int n) {
  if (g.empty() || g.back() != n) return CaseTag::Unsupported;
  const int p = g[0];
  if (p == 2) {
    if (g == std::vector<int>{2, 3}) return CaseTag::OneStepContact;
    if (g == std::vector<int>{2, 3, 4}) return CaseTag::FourTwo;
    if (g == std::vector<int>{2, 3, 5}) return CaseTag::FiveTwo;
    if (g == std::vector<int>{2, 3, 5, 6}) return CaseTag::SixTwo;
    return CaseTag::Unsupported;
  }
  if (g.size() == 2 && n - p <= 3) return n == p + 1 ? CaseTag::OneStepContact : CaseTag::CorankLe3;
  return CaseTag::Unsupported;
}

}  // namespace

Classification classify_case(const MotionPlanningProblem& problem, int samples, const RankOptions& opts) {
  if (samples < 1) throw InvalidInput("classify_case: samples must be positive");
  Classification c;
  const int n = problem.system.intrinsic_dim();
  std::ostringstream diag;
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? 0.0 : problem.gamma.T * i / (samples - 1);
    std::vector<int> g = growth_vector(problem.system, problem.gamma.point(t), 4, opts);
    while (g.size() > 1 && g[g.size() - 2] == g.back()) g.pop_back();
    c.params.push_back(t);
    c.growth.push_back(g);
    diag << "t=" << t << " growth=" << growth_string(g) << "; ";
  }
  bool mixed = false;
  for (const auto& g : c.growth) mixed = mixed || g != c.growth.front();
  if (mixed) {
    c.tag = CaseTag::Unsupported;
    c.diagnostic = "mixed growth along Gamma: " + diag.str();
    return c;
  }
  c.tag = tag_of(c.growth.front(), n);
  c.diagnostic = c.tag == CaseTag::Unsupported ? "unsupported growth " + growth_string(c.growth.front()) + " (n = " +
                                                     std::to_string(n) + ")"
                                               : "growth " + growth_string(c.growth.front());
  return c;
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) {
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double th = std::acos(c);
  const Eigen::Vector3d v = vee(0.5 * (R - R.transpose()));
  if (th < 1e-6) return v * (1.0 + th * th / 6.0);
  if (M_PI - th > 1e-6) return th / std::sin(th) * v;
  const Eigen::Matrix3d B = 0.5 * (R + Eigen::Matrix3d::Identity());
  int k = 0;
  B.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = B.col(k).normalized();
  if (axis.dot(v) < 0) axis = -axis;
  return th * axis;
}

Vec state_difference(const ControlFrame& system, const Vec& from, const Vec& to) {
  system.check_state(from);
  system.check_state(to);
  if (!system.rotation) return to - from;
  const int off = system.rotation->offset;
  Vec out(system.dim - 6);
  int k = 0;
  for (int i = 0; i < system.dim; ++i)
    if (i < off || i >= off + 9) out[k++] = to[i] - from[i];
  out.segment<3>(k) = log_so3(rotation_at(to, off) * rotation_at(from, off).transpose());
  return out;
}

std::vector<int> BracketChart::rows(int lev) const {
  std::vector<int> r;
  for (int i = 0; i < n; ++i)
    if (level[i] == lev) r.push_back(i);
  return r;
}

namespace {

// ---------------------------------------------------------------------------
// Free models: p = 2 up to length 4 (coordinates x1, x2, y, z1, z2, q11, q12, q22,
// rows m(x) * a with a = (x2 u1 - x1 u2) / 2), and the one-step free model for p > 2.

struct FreeModel {
  int p = 2;
  int max_level = 4;
  ControlFrame frame;
  std::vector<std::vector<BracketWord>> words;  // [level]
  std::vector<std::vector<int>> coords;         // [level] free coordinates
  std::vector<Mat> Binv;                         // [level]
};

ControlFrame free_frame_p2() {
  ControlFrame f;
  f.name = "free-2-4";
  f.dim = 8;
  for (int i = 0; i < 2; ++i) {
    VectorField F;
    F.dim = 8;
    F.eval = [i](const Vec& x) {
      const double c = i == 0 ? 0.5 * x[1] : -0.5 * x[0];
      Vec v = Vec::Zero(8);
      v[i] = 1.0;
      const double m[6] = {1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1]};
      for (int r = 0; r < 6; ++r) v[2 + r] = c * m[r];
      return v;
    };
    F.jacobian = [i](const Vec& x) {
      const double c = i == 0 ? 0.5 * x[1] : -0.5 * x[0];
      Eigen::RowVectorXd dc = Eigen::RowVectorXd::Zero(8);
      dc[i == 0 ? 1 : 0] = i == 0 ? 0.5 : -0.5;
      const double m[6] = {1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1]};
      Mat dm = Mat::Zero(6, 8);
      dm(1, 0) = 1.0;
      dm(2, 1) = 1.0;
      dm(3, 0) = 2 * x[0];
      dm(4, 0) = x[1];
      dm(4, 1) = x[0];
      dm(5, 1) = 2 * x[1];
      Mat J = Mat::Zero(8, 8);
      for (int r = 0; r < 6; ++r) J.row(2 + r) = m[r] * dc + c * dm.row(r);
      return J;
    };
    f.fields.push_back(F);
  }
  return f;
}

Vec word_values(const ControlFrame& sys, const BracketWord& w, const Vec& at, double h) {
  return sys.intrinsic(at, bracket_word(sys, w, at, h));
}

FreeModel build_free_model(int p) {
  FreeModel fm;
  fm.p = p;
  fm.words.resize(5);
  fm.coords.resize(5);
  fm.Binv.resize(5);
  if (p == 2) {
    fm.max_level = 4;
    fm.frame = free_frame_p2();
    const std::vector<std::vector<std::string>> w = {
        {}, {"1", "2"}, {"[1,2]"}, {"[1,[1,2]]", "[2,[1,2]]"}, {"[1,[1,[1,2]]]", "[2,[1,[1,2]]]", "[2,[2,[1,2]]]"}};
    for (int k = 1; k <= 4; ++k)
      for (const auto& s : w[k]) fm.words[k].push_back(BracketWord::parse(s));
    fm.coords = {{}, {0, 1}, {2}, {3, 4}, {5, 6, 7}};
  } else {
    fm.max_level = 2;
    fm.frame = make_nilpotent(one_step_free(p));
    for (int i = 1; i <= p; ++i) fm.words[1].push_back(BracketWord::leaf(i));
    for (int i = 1; i <= p; ++i)
      for (int j = i + 1; j <= p; ++j)
        fm.words[2].push_back(BracketWord::bracket(BracketWord::leaf(i), BracketWord::leaf(j)));
    for (int i = 0; i < p; ++i) fm.coords[1].push_back(i);
    for (int i = p; i < fm.frame.dim; ++i) fm.coords[2].push_back(i);
  }
  const Vec zero = Vec::Zero(fm.frame.dim);
  for (int k = 1; k <= fm.max_level; ++k) {
    const auto& cs = fm.coords[k];
    Mat B(cs.size(), fm.words[k].size());
    for (std::size_t j = 0; j < fm.words[k].size(); ++j) {
      const Vec v = word_values(fm.frame, fm.words[k][j], zero, 1e-3);
      for (std::size_t i = 0; i < cs.size(); ++i) B(i, j) = v[cs[i]];
    }
    Eigen::FullPivLU<Mat> lu(B);
    if (!lu.isInvertible()) throw NumericFailure("free model: level " + std::to_string(k) + " words are dependent");
    fm.Binv[k] = lu.inverse();
  }
  return fm;
}

const FreeModel& free_model(int p) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<FreeModel>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(p);
  if (it == cache.end()) it = cache.emplace(p, std::make_unique<FreeModel>(build_free_model(p))).first;
  return *it->second;
}

// Free-coordinate endpoint (levels >= 2) of a sequence of control pieces from 0.
Vec free_endpoint(const FreeModel& fm, const std::vector<ControlSignal>& pieces, int steps) {
  Vec x = Vec::Zero(fm.frame.dim);
  for (const auto& u : pieces) x = integrate_endpoint(fm.frame, u, x, u.duration / steps);
  return x.tail(fm.frame.dim - fm.p);
}

ControlSignal straight(const Vec& dir, double length) {
  ControlSignal s;
  s.p = static_cast<int>(dir.size());
  s.duration = length;
  const Vec d = dir;
  s.u = [d](double) { return d; };
  return s;
}

}  // namespace

BracketChart make_chart(const ControlFrame& system, const Vec& at, double h) {
  const int p = system.rank();
  if (p < 2) throw ContractError("make_chart: needs at least two controls");
  const FreeModel& fm = free_model(p);
  BracketChart C;
  C.n = system.intrinsic_dim();
  C.p = p;
  C.G.assign(fm.max_level + 1, Mat());
  std::vector<Vec> selected;
  Mat Q(C.n, 0);
  std::vector<Mat> W(fm.max_level + 1);
  for (int k = 1; k <= fm.max_level && static_cast<int>(selected.size()) < C.n; ++k) {
    const auto& ws = fm.words[k];
    W[k].resize(C.n, ws.size());
    for (std::size_t j = 0; j < ws.size(); ++j) W[k].col(j) = word_values(system, ws[j], at, h);
    std::vector<bool> used(ws.size(), false);
    while (static_cast<int>(selected.size()) < C.n) {
      int best = -1;
      double best_ratio = 1e-6;
      Vec best_res;
      for (std::size_t j = 0; j < ws.size(); ++j) {
        if (used[j]) continue;
        const Vec c = W[k].col(j);
        const double nc = c.norm();
        if (nc == 0.0) continue;
        const Vec res = c - Q * (Q.transpose() * c);
        if (res.norm() / nc > best_ratio) {
          best_ratio = res.norm() / nc;
          best = static_cast<int>(j);
          best_res = res;
        }
      }
      if (best < 0) break;
      used[best] = true;
      selected.push_back(W[k].col(best));
      C.level.push_back(k);
      C.words.push_back(ws[best].to_string());
      Q.conservativeResize(C.n, Q.cols() + 1);
      Q.col(Q.cols() - 1) = best_res.normalized();
    }
    C.max_level = k;
  }
  if (static_cast<int>(selected.size()) < C.n)
    throw ContractError("make_chart: frame brackets up to length " + std::to_string(fm.max_level) +
                        " do not span the tangent space");
  C.basis.resize(C.n, C.n);
  for (int i = 0; i < C.n; ++i) C.basis.col(i) = selected[i];
  C.lu.compute(C.basis);
  for (int k = 1; k <= C.max_level; ++k) C.G[k] = C.lu.solve(W[k]) * fm.Binv[k];
  return C;
}

namespace {

// ---------------------------------------------------------------------------
// Loop primitives on the free p = 2 model, unit size.

enum class Shape { Circle, SpokeCircle, Elastica, ElasticaPair, Dance };

struct Primitive {
  Shape shape = Shape::Circle;
  int level = 2;
  double length = 1.0;
  std::vector<ControlSignal> pieces;
  Vec e;  // free coordinates y, z1, z2, q11, q12, q22
};

Primitive make_primitive(Shape shape, const DanceParams* dance) {
  const FreeModel& fm = free_model(2);
  Primitive P;
  P.shape = shape;
  int steps = 4000;
  switch (shape) {
    case Shape::Circle:
      P.level = 2;
      P.pieces = {circle_controls(1.0).controls};
      break;
    case Shape::SpokeCircle: {
      P.level = 2;
      const double rho = 1.0 / (2.0 * M_PI);
      ControlSignal c;
      c.p = 2;
      c.duration = 1.0;
      c.u = [](double t) {
        const double a = 2.0 * M_PI * t + M_PI / 2;
        return Vec((Vec(2) << std::cos(a), std::sin(a)).finished());
      };
      P.pieces = {straight(Eigen::Vector2d(1.0, 0.0), rho), c, straight(Eigen::Vector2d(-1.0, 0.0), rho)};
      P.length = 1.0 + 2.0 * rho;
      break;
    }
    case Shape::Elastica:
      P.level = 3;
      P.pieces = {elastica_controls(1.0).controls};
      break;
    case Shape::ElasticaPair: {
      P.level = 3;
      const double s = std::pow(2.0, -1.0 / 3.0);
      const ControlSignal a = rescale_controls(elastica_controls(1.0).controls, s);
      P.pieces = {a, rotate_controls(reverse_controls(a), M_PI)};
      P.length = 2.0 * s;
      break;
    }
    case Shape::Dance:
      if (!dance) throw ContractError("dance primitive without parameters");
      P.level = 4;
      P.pieces = {dance_controls(*dance, 1.0).controls};
      steps = 20000;
      break;
  }
  P.e = free_endpoint(fm, P.pieces, steps);
  return P;
}

// Free coordinates after rotating the controls by theta, scaling by s and
// reversing when sigma = -1.
Vec transform_e(const Vec& e, double theta, int sigma, double s) {
  const Eigen::Matrix2d R = Eigen::Rotation2Dd(theta).toRotationMatrix();
  Vec out(6);
  out[0] = sigma * s * s * e[0];
  out.segment<2>(1) = sigma * s * s * s * (R * e.segment<2>(1));
  Eigen::Matrix2d S;
  S << e[3], e[4], e[4], e[5];
  const Eigen::Matrix2d T = sigma * std::pow(s, 4) * (R * S * R.transpose());
  out[3] = T(0, 0);
  out[4] = T(0, 1);
  out[5] = T(1, 1);
  return out;
}

std::vector<ControlSignal> realize(const std::vector<ControlSignal>& pieces, double theta, int sigma, double s) {
  std::vector<ControlSignal> out;
  for (const auto& pc : pieces) {
    ControlSignal c = pc.p == 2 ? rotate_controls(pc, theta) : pc;
    out.push_back(rescale_controls(c, pc.duration * s));
  }
  if (sigma < 0) {
    std::reverse(out.begin(), out.end());
    for (auto& c : out) c = reverse_controls(c);
  }
  return out;
}

// Chart coefficients produced by free coordinates e (levels 2..4 for p = 2).
Vec chart_effect(const BracketChart& C, const Vec& e) {
  Vec out = Vec::Zero(C.n);
  const int offs[5] = {0, 0, 0, 1, 3};
  const int sizes[5] = {0, 0, 1, 2, 3};
  for (int k = 2; k <= C.max_level && k <= 4; ++k) out += C.G[k] * e.segment(offs[k], sizes[k]);
  return out;
}

Vec select_rows(const Vec& v, const std::vector<int>& rows) {
  Vec out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

struct Placement {
  double theta = 0.0;
  int sigma = 1;
  double gain = 0.0;  // component along the target direction at unit size
};

double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 60; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Rotation and orientation maximizing the unit effect along `target` on the
// given chart rows, penalizing the perpendicular part.
Placement place(const BracketChart& C, const Primitive& P, const std::vector<int>& rows, const Vec& target) {
  const Vec dir = target.normalized();
  auto score = [&](double th, int sg) {
    const Vec v = select_rows(chart_effect(C, transform_e(P.e, th, sg, 1.0)), rows);
    const double along = v.dot(dir);
    const double perp = (v - along * dir).norm();
    return along - 4.0 * perp;
  };
  Placement best;
  double best_score = -1e300;
  const int grid = 144;
  for (int sg : {1, -1}) {
    for (int i = 0; i < grid; ++i) {
      const double th = 2.0 * M_PI * i / grid;
      const double sc = score(th, sg);
      if (sc > best_score) {
        best_score = sc;
        best.theta = th;
        best.sigma = sg;
      }
    }
  }
  const double step = 2.0 * M_PI / grid;
  const int sg = best.sigma;
  best.theta = golden_max([&](double th) { return score(th, sg); }, best.theta - step, best.theta + step);
  best.theta = std::remainder(best.theta, 2.0 * M_PI);
  if (best.theta < 0) best.theta += 2.0 * M_PI;
  best.gain = select_rows(chart_effect(C, transform_e(P.e, best.theta, best.sigma, 1.0)), rows).dot(dir);
  return best;
}

// ---------------------------------------------------------------------------
// Execution on the true system.

struct Executor {
  const ControlFrame& sys;
  Vec x;
  double length = 0.0;
  Trajectory* traj = nullptr;
  int stride = 1;

  void run(const std::vector<ControlSignal>& pieces, int steps_total) {
    double total = 0.0;
    for (const auto& p : pieces) total += p.duration;
    if (!(total > 0.0)) return;
    for (const auto& p : pieces) {
      if (!(p.duration > 0.0)) continue;
      const int steps = std::max(4, static_cast<int>(std::ceil(steps_total * p.duration / total)));
      const double h = p.duration / steps;
      if (traj) {
        Trajectory t = integrate(sys, p, x, h);
        if (stride > 1) {
          Trajectory th;
          for (std::size_t i = 0; i < t.size(); ++i) {
            if (i % stride != 0 && i + 1 != t.size()) continue;
            th.times.push_back(t.times[i]);
            th.states.push_back(t.states[i]);
            th.controls.push_back(t.controls[i]);
            th.arclength.push_back(t.arclength[i]);
          }
          t = std::move(th);
        }
        traj->append(t);
        x = t.back();
      } else {
        x = integrate_endpoint(sys, p, x, h);
      }
      length += p.duration;
    }
  }
};

struct Library {
  Primitive circle, spoke, elastica, pair;
  std::optional<Primitive> dance;
};

const Library& library(const DanceParams* dance) {
  static std::mutex mu;
  static std::unique_ptr<Library> base;
  static std::map<double, Primitive> dances;
  std::lock_guard<std::mutex> lock(mu);
  if (!base) {
    base = std::make_unique<Library>();
    base->circle = make_primitive(Shape::Circle, nullptr);
    base->spoke = make_primitive(Shape::SpokeCircle, nullptr);
    base->elastica = make_primitive(Shape::Elastica, nullptr);
    base->pair = make_primitive(Shape::ElasticaPair, nullptr);
  }
  static thread_local Library out;
  out = *base;
  out.dance.reset();
  if (dance) {
    auto it = dances.find(dance->K_norm);
    if (it == dances.end()) it = dances.emplace(dance->K_norm, make_primitive(Shape::Dance, dance)).first;
    out.dance = it->second;
  }
  return out;
}

DanceParams default_dance() {
  static std::mutex mu;
  static std::optional<DanceParams> cached;
  std::lock_guard<std::mutex> lock(mu);
  if (!cached) {
    try {
      cached = load_dance(default_dance_path());
    } catch (const Error&) {
      cached = six_two_shoot(1.0).dance;
    }
  }
  return *cached;
}

int steps_for(Shape s, int base) {
  switch (s) {
    case Shape::Elastica:
    case Shape::ElasticaPair: return 2 * base;
    case Shape::Dance: return 16 * base;
    default: return base;
  }
}

// Circle in the (i, j) coordinate plane of p controls, unit length, counterclockwise.
ControlSignal plane_circle(int p, const Vec& e1, const Vec& e2) {
  ControlSignal c;
  c.p = p;
  c.duration = 1.0;
  c.u = [e1, e2](double t) { return Vec(std::cos(2 * M_PI * t) * e1 + std::sin(2 * M_PI * t) * e2); };
  return c;
}

struct Steering {
  const ControlFrame& sys;
  const Library& lib;
  double eps;
  CorrectionOptions opts;
  int primitives = 0;

  // Layered correction toward `target` in the chart `C` (computed at a nearby
  // point when null); returns the appended length.
  double correct(Executor& ex, const Vec& target, const BracketChart* chart = nullptr) {
    const double start = ex.length;
    const double floor_len = opts.min_length * eps;
    const int p = sys.rank();
    std::optional<BracketChart> own;
    if (!chart) own = make_chart(sys, ex.x);
    const BracketChart& C = chart ? *chart : *own;
    for (int pass = 0; pass < opts.max_passes; ++pass) {
      bool any = false;
      for (int k = 1; k <= C.max_level; ++k) {
        const std::vector<int> rows = C.rows(k);
        if (rows.empty()) continue;
        const Vec c = C.coefficients(state_difference(sys, ex.x, target));
        const Vec tau = select_rows(c, rows);
        if (tau.norm() == 0.0) continue;
        if (k == 1) {
          // Letters occupy the level-1 rows in order.
          Vec u = Vec::Zero(p);
          for (std::size_t i = 0; i < rows.size(); ++i) u[BracketWord::parse(C.words[rows[i]]).letter - 1] = tau[i];
          const double len = u.norm();
          if (len < floor_len) continue;
          ex.run({straight(u / len, len)}, opts.steps_per_loop);
        } else if (p == 2) {
          const Primitive* P = nullptr;
          if (k == 2) P = C.max_level > 2 ? &lib.spoke : &lib.circle;
          if (k == 3) P = C.max_level > 3 ? &lib.pair : &lib.elastica;
          if (k == 4) {
            if (!lib.dance) throw ContractError("correction at level 4 needs the dance primitive");
            P = &*lib.dance;
          }
          const Placement pl = place(C, *P, rows, tau);
          if (!(pl.gain > 0.0)) throw NumericFailure("correction: primitive has no effect at level " + std::to_string(k));
          const double s = std::pow(tau.norm() / pl.gain, 1.0 / k);
          if (s * P->length < floor_len) continue;
          ex.run(realize(P->pieces, pl.theta, pl.sigma, s), steps_for(P->shape, opts.steps_per_loop));
        } else {
          // p > 2, level 2: one circle per coordinate plane.
          Mat G2(rows.size(), C.G[2].cols());
          for (std::size_t i = 0; i < rows.size(); ++i) G2.row(i) = C.G[2].row(rows[i]);
          const Vec y = G2.completeOrthogonalDecomposition().solve(tau);
          int r = 0;
          for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j, ++r) {
              if (y[r] == 0.0) continue;
              // unit counterclockwise circle in plane (i, j): y_ij = -1 / (4 pi)
              const double s = std::sqrt(4.0 * M_PI * std::abs(y[r]));
              if (s < floor_len) continue;
              const int sigma = y[r] < 0 ? 1 : -1;
              ex.run(realize({plane_circle(p, Vec::Unit(p, i), Vec::Unit(p, j))}, 0.0, sigma, s),
                     opts.steps_per_loop);
              ++primitives;
            }
          any = true;
          continue;
        }
        ++primitives;
        any = true;
      }
      if (!any) break;
    }
    return ex.length - start;
  }
};

}  // namespace

Correction epsilon_modification(const ControlFrame& system, const Vec& from, const Vec& target, double eps,
                                double alpha, const CorrectionOptions& opts) {
  if (!(eps > 0.0) || !(alpha > 0.0)) throw DomainError("epsilon_modification: eps and alpha must be positive");
  system.check_state(from);
  system.check_state(target);
  const DanceParams dp = default_dance();
  const Library& lib = library(system.rank() == 2 ? &dp : nullptr);
  Correction out;
  Executor ex{system, from};
  ex.traj = &out.trajectory;
  Steering st{system, lib, eps, opts};
  out.length = st.correct(ex, target);
  out.primitives = st.primitives;
  out.end = ex.x;
  out.residual = state_difference(system, ex.x, target);
  if (out.length >= std::pow(eps, 1.0 + alpha))
    throw ModificationOverflow("epsilon_modification: correction length " + std::to_string(out.length) +
                                   " exceeds eps^(1+alpha) = " + std::to_string(std::pow(eps, 1.0 + alpha)),
                               0);
  return out;
}

// ---------------------------------------------------------------------------
// Verification.

InterpolationReport verify_interpolation(const Trajectory& traj, const Curve& gamma, double eps,
                                         double gap_tolerance) {
  if (!(eps > 0.0)) throw DomainError("verify_interpolation: eps must be positive");
  InterpolationReport r;
  r.eps = eps;
  r.gap_tolerance = gap_tolerance < 0 ? eps : gap_tolerance;
  if (traj.size() == 0) return r;
  const double T = gamma.T;
  const int G = static_cast<int>(std::clamp(20.0 * T / eps + 1.0, 2001.0, 200001.0));
  std::vector<Vec> gs(G);
  for (int j = 0; j < G; ++j) gs[j] = gamma.point(T * j / (G - 1));
  auto dist_at = [&](const Vec& x, double t) { return (x - gamma.point(std::clamp(t, 0.0, T))).norm(); };
  std::vector<double> d(traj.size());
  int j0 = 0;
  const int window = 64;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec& x = traj.states[i];
    auto scan = [&](int a, int b) {
      int best = a;
      double bd = 1e300;
      for (int j = std::max(0, a); j <= std::min(G - 1, b); ++j) {
        const double v = (x - gs[j]).squaredNorm();
        if (v < bd) {
          bd = v;
          best = j;
        }
      }
      return best;
    };
    int j = scan(j0 - window, j0 + window);
    if (i % 256 == 0 || (j == std::max(0, j0 - window) && j > 0) || (j == std::min(G - 1, j0 + window) && j < G - 1))
      j = scan(0, G - 1);
    j0 = j;
    const double ta = T * std::max(0, j - 1) / (G - 1), tb = T * std::min(G - 1, j + 1) / (G - 1);
    const double tm = golden_max([&](double t) { return -dist_at(x, t); }, ta, tb);
    d[i] = std::min({dist_at(x, tm), (x - gs[j]).norm()});
  }
  r.tube_radius = *std::max_element(d.begin(), d.end());
  const auto& s = traj.arclength;
  const double total = s.back() - s.front();
  if (total <= eps) {
    r.worst_gap = *std::min_element(d.begin(), d.end());
  } else {
    // sliding minimum over windows [s_i, s_i + eps]
    std::deque<std::size_t> q;
    std::size_t hi = 0;
    double worst = 0.0;
    for (std::size_t lo = 0; lo < traj.size() && s[lo] + eps <= s.back() + 1e-15; ++lo) {
      while (hi < traj.size() && s[hi] <= s[lo] + eps) {
        while (!q.empty() && d[q.back()] >= d[hi]) q.pop_back();
        q.push_back(hi++);
      }
      while (!q.empty() && q.front() < lo) q.pop_front();
      if (!q.empty()) worst = std::max(worst, d[q.front()]);
    }
    r.worst_gap = worst;
  }
  r.realized_entropy = traj.length() / eps;
  r.interpolates = r.worst_gap <= r.gap_tolerance;
  return r;
}

// ---------------------------------------------------------------------------
// Planner.

namespace {

int effective_top_level(const MotionPlanningProblem& pb, const BracketChart& C0) {
  int top = 0;
  for (double t : {0.0, 0.5 * pb.gamma.T, pb.gamma.T}) {
    const Vec x = pb.gamma.point(t);
    const BracketChart C = t == 0.0 ? C0 : make_chart(pb.system, x);
    const Vec c = C.coefficients(pb.system.intrinsic(x, pb.gamma.derivative(t)));
    const double scale = c.norm();
    for (int k = C.max_level; k >= 1; --k) {
      const Vec ck = select_rows(c, C.rows(k));
      if (ck.size() && ck.norm() > 1e-7 * scale) {
        top = std::max(top, k);
        break;
      }
    }
  }
  return top;
}

struct MainLoop {
  std::vector<ControlSignal> pieces;  // unit size
  Shape shape = Shape::Circle;
  double theta = 0.0;
  int sigma = 1;
  double gain = 0.0;  // unit-size top-level gain along t
};

}  // namespace

PlanResult plan(const MotionPlanningProblem& problem, double eps, double alpha, const PlanOptions& opts) {
  if (!(eps > 0.0) || !(alpha > 0.0)) throw DomainError("plan: eps and alpha must be positive");
  if (!(std::pow(eps, alpha) < 1.0)) throw DomainError("plan: eps^alpha must be below 1");
  const ControlFrame& sys = problem.system;
  const Curve& gamma = problem.gamma;
  PlanResult res;
  res.classification = classify_case(problem);
  if (res.classification.tag == CaseTag::Unsupported)
    throw ContractError("plan: unsupported case, " + res.classification.diagnostic);
  const int p = sys.rank();

  const DanceParams dp = opts.dance ? *opts.dance : (p == 2 && res.classification.tag == CaseTag::SixTwo
                                                         ? default_dance()
                                                         : DanceParams{});
  const bool has_dance = p == 2 && (opts.dance || res.classification.tag == CaseTag::SixTwo);
  const Library& lib = library(has_dance ? &dp : nullptr);

  Vec q = gamma.point(0.0);
  const BracketChart C0 = make_chart(sys, q);
  const int top = effective_top_level(problem, C0);
  if (top < 2) throw ContractError("plan: Gamma is admissible; nothing to synthesize");

  SynthesisPlan& P = res.plan;
  P.tag = res.classification.tag;
  P.top_level = top;
  P.epsilon = eps;
  P.alpha = alpha;
  const Primitive* main = nullptr;
  if (p == 2) {
    if (top == 2) main = C0.max_level > 2 ? &lib.spoke : &lib.circle;
    if (top == 3) main = &lib.elastica;
    if (top == 4) {
      if (!lib.dance) throw ContractError("plan: level-4 synthesis needs the dance");
      main = &*lib.dance;
    }
    P.curve = top == 2 ? CurveKind::Circle : top == 3 ? CurveKind::Elastica : CurveKind::SixTwoDance;
  } else {
    if (top != 2) throw ContractError("plan: p > 2 needs a one-step system");
    P.curve = CurveKind::Circle;
  }
  const double main_unit_length = main ? main->length : 1.0;
  const int main_steps = main ? steps_for(main->shape, opts.steps_per_loop) : opts.steps_per_loop;

  Executor ex{sys, q};
  ex.traj = &res.trajectory;
  ex.stride = std::max(1, opts.record_stride);
  {
    Trajectory start;
    start.times = {0.0};
    start.states = {q};
    start.controls = {Vec::Zero(p)};
    start.arclength = {0.0};
    res.trajectory = start;
  }
  Steering st{sys, lib, eps, opts.correction};
  const double T = gamma.T;
  const double budget = eps * (1.0 + std::pow(eps, alpha));
  double s = 0.0;
  double calib = 1.0;

  for (std::size_t seg = 0; seg < opts.max_segments; ++seg) {
    const BracketChart C = make_chart(sys, ex.x);
    const std::vector<int> rows = C.rows(top);
    const Vec gdot = C.coefficients(sys.intrinsic(gamma.point(s), gamma.derivative(s)));
    const Vec t = select_rows(gdot, rows);
    if (!(t.norm() > 0.0)) throw ContractError("plan: Gamma has no top-level component at s = " + std::to_string(s));
    const Vec that = t.normalized();

    MainLoop ml;
    if (p == 2) {
      const Placement pl = place(C, *main, rows, t);
      ml.pieces = main->pieces;
      ml.shape = main->shape;
      ml.theta = pl.theta;
      ml.sigma = pl.sigma;
      ml.gain = pl.gain;
    } else {
      const FreeModel& fm = free_model(p);
      Mat G2(rows.size(), C.G[2].cols());
      for (std::size_t i = 0; i < rows.size(); ++i) G2.row(i) = C.G[2].row(rows[i]);
      const Vec y = G2.completeOrthogonalDecomposition().solve(t);
      Mat Om = Mat::Zero(p, p);
      int r = 0;
      for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j, ++r) {
          Om(i, j) = y[r];
          Om(j, i) = -y[r];
        }
      Eigen::JacobiSVD<Mat> svd(Om, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Vec e1 = svd.matrixU().col(0);
      Vec e2 = svd.matrixV().col(0);
      e2 -= e2.dot(e1) * e1;
      e2.normalize();
      ControlSignal c = plane_circle(p, e1, e2);
      Vec e = free_endpoint(fm, {c}, 512);
      Vec v = G2 * e;
      if (v.dot(that) < 0) {
        c = plane_circle(p, e1, -e2);
        e = free_endpoint(fm, {c}, 512);
        v = G2 * e;
      }
      ml.pieces = {c};
      ml.gain = v.dot(that);
    }
    if (!(ml.gain > 0.0)) throw NumericFailure("plan: main loop has no top-level gain");

    const double g_eps = ml.gain * std::pow(eps / main_unit_length, top);
    const double ds_pred = calib * g_eps / t.norm();
    const double n_rem = (T - s) / ds_pred;
    const double N_r = std::max(1.0, std::floor(n_rem + 1e-9));
    const double ratio = std::max(1.0, n_rem / N_r);
    const double scale = eps * std::pow(ratio, 1.0 / top) / main_unit_length;
    const bool last = N_r <= 1.0;

    const double len0 = ex.length;
    ex.run(realize(ml.pieces, ml.theta, ml.sigma, scale), main_steps);
    const double main_len = ex.length - len0;
    const Vec q1 = ex.x;

    double s_next = T;
    if (!last) {
      auto f = [&](double sp) {
        const Vec c = C.coefficients(state_difference(sys, q1, gamma.point(sp)));
        return select_rows(c, rows).dot(that);
      };
      double a = s + ds_pred * ratio, b = a * (1.0 + 1e-3) + 1e-12;
      double fa = f(a), fb = f(b);
      for (int it = 0; it < 50 && std::abs(fb) > 0.0 && std::abs(b - a) > 1e-15 * (1.0 + std::abs(b)); ++it) {
        const double nb = b - fb * (b - a) / (fb - fa);
        a = b;
        fa = fb;
        b = std::clamp(nb, s, T);
        fb = f(b);
      }
      s_next = std::clamp(b, s, T);
      const double actual = s_next - s;
      if (actual > 0.0) calib *= actual / (ds_pred * ratio);
    }

    const double corr = st.correct(ex, gamma.point(s_next), &C);
    PlannedSegment sg;
    sg.main_length = main_len;
    sg.correction_length = corr;
    sg.eps_i = main_len + corr;
    sg.s_start = s;
    sg.s_end = s_next;
    sg.theta = ml.theta;
    sg.orientation = ml.sigma;
    P.segments.push_back(sg);
    if (!(sg.eps_i >= eps * (1.0 - 1e-12) && sg.eps_i < budget))
      throw ModificationOverflow("plan: segment " + std::to_string(seg) + " has eps_i = " + std::to_string(sg.eps_i) +
                                     " outside [" + std::to_string(eps) + ", " + std::to_string(budget) + ")",
                                 seg);
    s = s_next;
    if (last || s >= T) break;
    if (seg + 1 == opts.max_segments) throw ContractError("plan: segment limit reached before the end of Gamma");
  }
  P.total_length = ex.length;
  if (opts.verify) res.report = verify_interpolation(res.trajectory, gamma, eps);
  res.report.eps = eps;
  res.report.realized_entropy = P.total_length / eps;
  res.report.eps_i.clear();
  res.report.budget_ok = true;
  for (const auto& sg : P.segments) {
    res.report.eps_i.push_back(sg.eps_i);
    res.report.budget_ok = res.report.budget_ok && sg.eps_i >= eps * (1.0 - 1e-12) && sg.eps_i < budget;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Error orders.

ErrorOrder cosimulate_error_order(const NilpotentModel& base, const ControlFrame& perturbed,
                                  const UniversalCurve& control, const std::vector<double>& eps_list,
                                  const Vec* start) {
  if (eps_list.size() < 4) throw InvalidInput("cosimulate_error_order: needs at least four eps values");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw InvalidInput("cosimulate_error_order: eps list must decrease");
  const ControlFrame nil = make_nilpotent(base);
  if (nil.dim != perturbed.dim || nil.rank() != perturbed.rank() || control.controls.p != nil.rank())
    throw InvalidInput("cosimulate_error_order: model, perturbation and control do not match");
  const std::vector<std::string> names = base.coordinate_names();
  ErrorOrder out;
  std::vector<std::vector<int>> members;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string b;
    for (char ch : names[i])
      if (!std::isdigit(static_cast<unsigned char>(ch))) b += ch;
    auto it = std::find(out.blocks.begin(), out.blocks.end(), b);
    if (it == out.blocks.end()) {
      out.blocks.push_back(b);
      members.emplace_back();
      it = out.blocks.end() - 1;
    }
    members[it - out.blocks.begin()].push_back(static_cast<int>(i));
  }
  const Vec x0 = start ? *start : Vec::Zero(nil.dim);
  out.gaps.assign(out.blocks.size(), {});
  for (double e : eps_list) {
    const ControlSignal u = rescale_controls(control.controls, e * control.controls.duration / control.eps);
    const double h = u.duration / 4000.0;
    const Vec a = integrate_endpoint(nil, u, x0, h);
    const Vec b = integrate_endpoint(perturbed, u, x0, h);
    for (std::size_t k = 0; k < members.size(); ++k) {
      double g = 0.0;
      for (int i : members[k]) g = std::max(g, std::abs(a[i] - b[i]));
      out.gaps[k].push_back(g);
    }
  }
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& g = out.gaps[k];
    const bool floor_hit = std::any_of(g.begin(), g.end(), [](double v) { return v < 1e-13; });
    out.excluded.push_back(floor_hit);
    if (floor_hit) {
      out.slopes.push_back(std::numeric_limits<double>::quiet_NaN());
      out.notes.push_back("block " + out.blocks[k] + ": gap below 1e-13, excluded");
      continue;
    }
    double mx = 0, my = 0;
    const int m = static_cast<int>(g.size());
    for (int i = 0; i < m; ++i) {
      mx += std::log(eps_list[i]);
      my += std::log(g[i]);
    }
    mx /= m;
    my /= m;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < m; ++i) {
      const double dx = std::log(eps_list[i]) - mx;
      sxy += dx * (std::log(g[i]) - my);
      sxx += dx * dx;
    }
    out.slopes.push_back(sxy / sxx);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmarks.

namespace {

Curve line_curve(const Vec& p0, const Vec& dir, double T) {
  Curve c;
  c.T = T;
  c.point = [p0, dir](double s) { return Vec(p0 + s * dir); };
  c.derivative = [dir](double) { return dir; };
  return c;
}

}  // namespace

MotionPlanningProblem nilpotent_benchmark(const NilpotentModel& model, double T) {
  if (!(T > 0.0)) throw DomainError("nilpotent_benchmark: T must be positive");
  MotionPlanningProblem pb;
  pb.system = make_nilpotent(model);
  pb.name = pb.system.name + "-benchmark";
  const int n = pb.system.dim;
  pb.gamma = line_curve(Vec::Zero(n), Vec::Unit(n, n - 1), T);
  return pb;
}

MotionPlanningProblem parking_problem(double T) {
  MotionPlanningProblem pb;
  pb.name = "parking";
  pb.system = make_system({SystemKind::CarTrailer, 1.0});
  pb.gamma = line_curve((Vec(4) << 0.0, 0.0, M_PI / 2, 0.0).finished(), Vec::Unit(4, 0), T);
  return pb;
}

MotionPlanningProblem ball_plate_problem(double T) {
  MotionPlanningProblem pb;
  pb.name = "ball-plate";
  pb.system = make_system({SystemKind::BallPlate, 1.0});
  Vec x0 = Vec::Zero(11);
  set_rotation(x0, 2, Eigen::Matrix3d::Identity());
  pb.gamma = line_curve(x0, Vec::Unit(11, 0), T);
  return pb;
}

MotionPlanningProblem ball_trailer_problem(double T, double L, double theta0) {
  MotionPlanningProblem pb;
  pb.name = "ball-trailer";
  pb.system = make_system({SystemKind::BallTrailer, L});
  Vec x0 = Vec::Zero(12);
  set_rotation(x0, 2, Eigen::Matrix3d::Identity());
  x0[11] = theta0;
  pb.gamma = line_curve(x0, Vec::Unit(12, 0), T);
  return pb;
}

// ---------------------------------------------------------------------------
// JSON.

std::string to_json(const SynthesisPlan& plan) {
  nlohmann::ordered_json j;
  j["tag"] = to_string(plan.tag);
  j["curve"] = to_string(plan.curve);
  j["top_level"] = plan.top_level;
  j["epsilon"] = plan.epsilon;
  j["alpha"] = plan.alpha;
  j["total_length"] = plan.total_length;
  auto segs = nlohmann::ordered_json::array();
  for (const auto& s : plan.segments) {
    nlohmann::ordered_json o;
    o["eps_i"] = s.eps_i;
    o["main_length"] = s.main_length;
    o["correction_length"] = s.correction_length;
    o["s_start"] = s.s_start;
    o["s_end"] = s.s_end;
    o["theta"] = s.theta;
    o["orientation"] = s.orientation;
    segs.push_back(o);
  }
  j["segments"] = segs;
  return j.dump();
}

std::string to_json(const InterpolationReport& r) {
  nlohmann::ordered_json j;
  j["eps"] = r.eps;
  j["worst_gap"] = r.worst_gap;
  j["tube_radius"] = r.tube_radius;
  j["realized_entropy"] = r.realized_entropy;
  j["gap_tolerance"] = r.gap_tolerance;
  j["interpolates"] = r.interpolates;
  j["budget_ok"] = r.budget_ok;
  j["eps_i"] = r.eps_i;
  j["distance"] = r.distance;
  return j.dump();
}

InterpolationReport report_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    InterpolationReport r;
    r.eps = j.at("eps").get<double>();
    r.worst_gap = j.at("worst_gap").get<double>();
    r.tube_radius = j.at("tube_radius").get<double>();
    r.realized_entropy = j.at("realized_entropy").get<double>();
    r.gap_tolerance = j.at("gap_tolerance").get<double>();
    r.interpolates = j.at("interpolates").get<bool>();
    r.budget_ok = j.at("budget_ok").get<bool>();
    r.eps_i = j.at("eps_i").get<std::vector<double>>();
    r.distance = j.at("distance").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("report_from_json: ") + ex.what());
  }
}

SynthesisPlan plan_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    SynthesisPlan p;
    p.tag = parse_case_tag(j.at("tag").get<std::string>());
    p.curve = parse_curve_kind(j.at("curve").get<std::string>());
    p.top_level = j.at("top_level").get<int>();
    p.epsilon = j.at("epsilon").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.total_length = j.at("total_length").get<double>();
    for (const auto& o : j.at("segments")) {
      PlannedSegment s;
      s.eps_i = o.at("eps_i").get<double>();
      s.main_length = o.at("main_length").get<double>();
      s.correction_length = o.at("correction_length").get<double>();
      s.s_start = o.at("s_start").get<double>();
      s.s_end = o.at("s_end").get<double>();
      s.theta = o.at("theta").get<double>();
      s.orientation = o.at("orientation").get<int>();
      p.segments.push_back(s);
    }
    return p;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("plan_from_json: ") + ex.what());
  }
}

}  // namespace nhmp
