#include "nhmp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nhmp/errors.hpp"

namespace nhmp {

namespace {

std::string fmt(double v, const char* f = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double L2 = ab.squaredNorm();
  const double t = L2 > 0 ? std::clamp((p - a).dot(ab) / L2, 0.0, 1.0) : 0.0;
  return (p - a - t * ab).norm();
}

double polyline_distance(const Eigen::Vector2d& p, const Polyline& c) {
  double d = 1e300;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) d = std::min(d, segment_distance(p, c[i], c[i + 1]));
  return d;
}

Polyline resample(const Polyline& c, std::size_t n) {
  if (c.size() <= n) return c;
  Polyline out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(c[i * (c.size() - 1) / (n - 1)]);
  return out;
}

double asymmetry_at(const Polyline& pts, const Polyline& curve, const Eigen::Vector2d& c, double angle) {
  const Eigen::Vector2d d(std::cos(angle), std::sin(angle));
  double worst = 0.0;
  for (const auto& p : pts) {
    const Eigen::Vector2d r = p - c;
    const Eigen::Vector2d m = c + 2.0 * r.dot(d) * d - r;
    worst = std::max(worst, polyline_distance(m, curve));
  }
  return worst;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_names) {
  std::ostringstream os;
  const int n = traj.size() ? static_cast<int>(traj.states[0].size()) : static_cast<int>(state_names.size());
  const int p = traj.size() ? static_cast<int>(traj.controls[0].size()) : 0;
  os << "t";
  for (int i = 0; i < n; ++i)
    os << "," << (i < static_cast<int>(state_names.size()) ? state_names[i] : "x" + std::to_string(i + 1));
  for (int i = 0; i < p; ++i) os << ",u" << i + 1;
  os << "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << fmt(traj.times[k]);
    for (int i = 0; i < n; ++i) os << "," << fmt(traj.states[k][i]);
    for (int i = 0; i < p; ++i) os << "," << fmt(traj.controls[k][i]);
    os << "\n";
  }
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write '" + path + "'");
  f << text;
  if (!f) throw InvalidInput("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot read '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string svg_polylines(const std::vector<Polyline>& lines, const std::vector<SvgStyle>& styles, double width,
                          double height, const std::string& title, bool equal_aspect) {
  Eigen::Vector2d lo(1e300, 1e300), hi(-1e300, -1e300);
  for (const auto& l : lines)
    for (const auto& p : l) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  if (lo.x() > hi.x()) lo = hi = Eigen::Vector2d::Zero();
  const double margin = 20.0;
  double sx = std::max(hi.x() - lo.x(), 1e-300), sy = std::max(hi.y() - lo.y(), 1e-300);
  double kx = width - 2 * margin, ky = height - 2 * margin;
  if (equal_aspect) {
    sx = sy = std::max(sx, sy);
    kx = ky = std::min(kx, ky);
  }
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, "%g") << "\" height=\""
     << fmt(height, "%g") << "\" viewBox=\"0 0 " << fmt(width, "%g") << " " << fmt(height, "%g") << "\">\n";
  if (!title.empty()) os << "<title>" << title << "</title>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const SvgStyle st = i < styles.size() ? styles[i] : SvgStyle{};
    os << "<polyline fill=\"none\" stroke=\"" << st.stroke << "\" stroke-width=\"" << fmt(st.width, "%g")
       << "\" points=\"";
    for (std::size_t j = 0; j < lines[i].size(); ++j) {
      const Eigen::Vector2d& p = lines[i][j];
      const double x = margin + (p.x() - lo.x()) / sx * kx;
      const double y = height - margin - (p.y() - lo.y()) / sy * ky;
      os << (j ? " " : "") << fmt(x, "%.4f") << "," << fmt(y, "%.4f");
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

int svg_polyline_count(const std::string& svg) {
  if (svg.find("<svg") == std::string::npos || svg.find("</svg>") == std::string::npos)
    throw InvalidInput("not an SVG document");
  int n = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++n;
  return n;
}

std::vector<Polyline> svg_polylines_read(const std::string& svg) {
  svg_polyline_count(svg);
  std::vector<Polyline> out;
  const std::string key = "points=\"";
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
    const std::size_t a = svg.find(key, pos);
    const std::size_t b = a == std::string::npos ? a : svg.find('"', a + key.size());
    if (b == std::string::npos) throw InvalidInput("polyline without points");
    std::istringstream in(svg.substr(a + key.size(), b - a - key.size()));
    Polyline line;
    double x = 0.0, y = 0.0;
    char comma = 0;
    while (in >> x >> comma >> y) line.emplace_back(x, -y);  // back to y-up
    out.push_back(std::move(line));
  }
  return out;
}

Polyline project(const Trajectory& traj, int i, int j) {
  Polyline out;
  out.reserve(traj.size());
  for (const auto& x : traj.states) {
    if (i >= x.size() || j >= x.size()) throw InvalidInput("project: coordinate out of range");
    out.emplace_back(x[i], x[j]);
  }
  return out;
}

double diameter(const Polyline& pts) {
  double d = 0.0;
  const Polyline s = resample(pts, 2000);
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b) d = std::max(d, (s[a] - s[b]).norm());
  return d;
}

double closure_gap(const Polyline& pts) {
  if (pts.size() < 2) return 0.0;
  const double d = diameter(pts);
  return d > 0 ? (pts.back() - pts.front()).norm() / d : 0.0;
}

Symmetry reflection_symmetry(const Polyline& curve) {
  if (curve.size() < 3) throw InvalidInput("reflection_symmetry: too few points");
  // centroid of the curve as a uniform wire
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  double L = 0.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double l = (curve[i + 1] - curve[i]).norm();
    c += 0.5 * l * (curve[i] + curve[i + 1]);
    L += l;
  }
  c /= L;
  const Polyline coarse = resample(curve, 300);
  const Polyline probe = resample(curve, 600);
  int best = 0;
  double best_v = 1e300;
  const int grid = 360;
  for (int i = 0; i < grid; ++i) {
    const double v = asymmetry_at(resample(curve, 120), coarse, c, M_PI * i / grid);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  double a = M_PI * (best - 1) / grid, b = M_PI * (best + 1) / grid;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double ang) { return asymmetry_at(probe, curve, c, ang); };
  double x1 = b - g * (b - a), x2 = a + g * (b - a), f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  Symmetry s;
  s.axis_angle = 0.5 * (a + b);
  s.center = c;
  s.asymmetry = f(s.axis_angle) / diameter(curve);
  return s;
}

int self_crossings(const Polyline& pts) {
  auto cross = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); };
  const double tol = 1e-9 * (1.0 + diameter(pts));
  std::vector<Eigen::Vector2d> found;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    for (std::size_t j = i + 2; j + 1 < pts.size(); ++j) {
      const Eigen::Vector2d p = pts[i], r = pts[i + 1] - pts[i], q = pts[j], s = pts[j + 1] - pts[j];
      const double den = cross(r, s);
      if (den == 0.0) continue;
      const double t = cross(q - p, s) / den, u = cross(q - p, r) / den;
      if (t < 0 || t > 1 || u < 0 || u > 1) continue;
      const Eigen::Vector2d x = p + t * r;
      // first and last segments of a closed loop meet at the start
      if (i == 0 && j + 2 == pts.size() && (pts.back() - pts.front()).norm() < tol) continue;
      bool dup = false;
      for (const auto& f : found) dup = dup || (f - x).norm() < tol;
      if (!dup) found.push_back(x);
    }
  return static_cast<int>(found.size());
}

}  // namespace nhmp
