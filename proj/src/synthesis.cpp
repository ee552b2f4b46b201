#include "nhmp/synthesis.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "nhmp/elliptic.hpp"
#include "nhmp/errors.hpp"
#include "nhmp/ode.hpp"

#ifndef NHMP_DATA_DIR
#define NHMP_DATA_DIR "data"
#endif

namespace nhmp {

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::Circle: return "circle";
    case CurveKind::MultiFreq: return "multifreq";
    case CurveKind::Elastica: return "elastica";
    case CurveKind::SixTwoDance: return "dance";
  }
  return "?";
}

UniversalCurve circle_controls(double eps, double phase) {
  if (!(eps > 0.0)) throw DomainError("circle_controls: eps must be positive");
  UniversalCurve c;
  c.kind = CurveKind::Circle;
  c.eps = eps;
  c.phase = phase;
  c.controls = {2, eps, [eps, phase](double t) {
                  const double a = 2.0 * M_PI * t / eps + phase;
                  return Vec((Vec(2) << std::cos(a), std::sin(a)).finished());
                }};
  c.w_gain = eps * eps / (4.0 * M_PI);
  return c;
}

UniversalCurve multifreq_controls(double eps, const std::vector<double>& weights, int p) {
  if (!(eps > 0.0)) throw DomainError("multifreq_controls: eps must be positive");
  if (p < 2) throw InvalidInput("multifreq_controls: p must be >= 2");
  const int r = p / 2;
  if (static_cast<int>(weights.size()) != r)
    throw InvalidInput("multifreq_controls: expected floor(p/2) = " + std::to_string(r) + " weights");
  double S = 0.0;
  for (int j = 1; j <= r; ++j) {
    if (!(weights[j - 1] > 0.0)) throw DomainError("multifreq_controls: weights must be positive");
    S += j * weights[j - 1];
  }
  std::vector<double> amp(r);
  for (int j = 1; j <= r; ++j) amp[j - 1] = std::sqrt(j * weights[j - 1] / S);
  UniversalCurve c;
  c.kind = CurveKind::MultiFreq;
  c.eps = eps;
  c.weights = weights;
  c.controls = {p, eps, [=](double t) {
                  Vec u = Vec::Zero(p);
                  for (int j = 1; j <= r; ++j) {
                    const double a = 2.0 * M_PI * j * t / eps;
                    u[2 * j - 2] = -amp[j - 1] * std::sin(a);
                    u[2 * j - 1] = amp[j - 1] * std::cos(a);
                  }
                  return u;
                }};
  // Enclosed area of the first-frequency pair, the top gain when r = 1.
  c.w_gain = amp[0] * amp[0] * eps * eps / (4.0 * M_PI);
  for (int k = 0; k <= 64; ++k) {
    const double n = c.controls.u(eps * k / 64.0).norm();
    if (std::abs(n - 1.0) > 1e-12) throw NumericFailure("multifreq_controls: controls not unit");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Elastica

Phi0Result find_phi0() {
  auto f = [](double deg) {
    const elliptic::Modulus m(std::sin(deg * M_PI / 360.0));
    return 2.0 * elliptic::complete_E(m) - elliptic::complete_K(m);
  };
  double lo = 90.0, hi = 179.9;
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0.0 && fhi < 0.0)) throw NumericFailure("find_phi0: root not bracketed");
  Phi0Result r;
  while (hi - lo > 1e-12 && r.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
    ++r.iterations;
  }
  r.phi0_deg = std::abs(flo) < std::abs(fhi) ? lo : hi;
  const elliptic::Modulus m(std::sin(r.phi0_deg * M_PI / 360.0));
  r.k = m.k;
  r.K = elliptic::complete_K(m);
  r.E = elliptic::complete_E(m);
  r.residual = 2.0 * r.E - r.K;
  return r;
}

namespace {

const Phi0Result& phi0_cached() {
  static const Phi0Result r = find_phi0();
  return r;
}

Eigen::Vector2d turn(const Eigen::Vector2d& v, ElasticaFrame frame) {
  return frame == ElasticaFrame::Rotated ? Eigen::Vector2d(-v.y(), v.x()) : v;
}

double elastica_gain(ElasticaFrame frame) {
  const Phi0Result& p = phi0_cached();
  const elliptic::Modulus m(p.k);
  const double K = p.K;
  // State (x1, x2, y, w) of the 4-2 model with delta = 1.
  ode::Rhs f = [&](double t, const Vec& s) {
    const elliptic::SnCnDn e = elliptic::jacobi_sn_cn_dn(K * (1.0 + 4.0 * t), m);
    const Eigen::Vector2d u =
        turn(Eigen::Vector2d(1.0 - 2.0 * e.dn * e.dn, -2.0 * m.k * e.sn * e.dn), frame);
    const double a = 0.5 * (s[1] * u[0] - s[0] * u[1]);
    return Vec((Vec(4) << u[0], u[1], a, s[0] * a).finished());
  };
  ode::AdaptiveOptions o;
  o.rtol = 1e-13;
  o.atol = 1e-16;
  return ode::dopri5(f, 0.0, Vec::Zero(4), 1.0, o).y[3];
}

}  // namespace

double elastica_unit_gain() {
  static const double g = elastica_gain(ElasticaFrame::Rotated);
  return g;
}

UniversalCurve elastica_controls(double eps, ElasticaFrame frame) {
  if (!(eps > 0.0)) throw DomainError("elastica_controls: eps must be positive");
  const Phi0Result& p = phi0_cached();
  UniversalCurve c;
  c.kind = CurveKind::Elastica;
  c.eps = eps;
  c.elastica = {p.phi0_deg, p.k, p.K};
  const double k = p.k, K = p.K;
  c.controls = {2, eps, [=](double t) {
                  const elliptic::Modulus m(k);
                  const elliptic::SnCnDn e = elliptic::jacobi_sn_cn_dn(K * (1.0 + 4.0 * t / eps), m);
                  const Eigen::Vector2d u =
                      turn(Eigen::Vector2d(1.0 - 2.0 * e.dn * e.dn, -2.0 * k * e.sn * e.dn), frame);
                  return Vec(u);
                }};
  if (frame == ElasticaFrame::Rotated) {
    c.w_gain = elastica_unit_gain() * eps * eps * eps;
  } else {
    static const double g_printed = elastica_gain(ElasticaFrame::Printed);
    c.w_gain = g_printed * eps * eps * eps;
  }
  return c;
}

Eigen::Vector2d elastica_position(double eps, double t, ElasticaFrame frame) {
  if (!(eps > 0.0)) throw DomainError("elastica_position: eps must be positive");
  const Phi0Result& p = phi0_cached();
  const elliptic::Modulus m(p.k);
  const double K = p.K;
  const double v = 4.0 * K * t / eps + K;
  const double x1 = -(eps / (4.0 * K)) *
                    (-4.0 * K * t / eps + 2.0 * (elliptic::jacobi_epsilon(v, m) - elliptic::jacobi_epsilon(K, m)));
  const double x2 = m.k * (eps / (2.0 * K)) * elliptic::jacobi_sn_cn_dn(v, m).cn;
  return turn(Eigen::Vector2d(x1, x2), frame);
}

// ---------------------------------------------------------------------------
// 6-2 dance

namespace {

double wrap_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

// Normalized extremal: X' = (cos phi, sin phi), phi' = Kn + |X|^2 / 2,
// A' = (X2 cos - X1 sin) / 2, W' = |X|^2 A'.
Vec normalized_rhs(double Kn, const Vec& s) {
  const double c = std::cos(s[2]), sn = std::sin(s[2]);
  const double r2 = s[0] * s[0] + s[1] * s[1];
  const double a = 0.5 * (s[1] * c - s[0] * sn);
  return (Vec(5) << c, sn, Kn + 0.5 * r2, a, r2 * a).finished();
}

Vec normalized_start(double r0) { return (Vec(5) << r0, 0.0, 0.5 * M_PI, 0.0, 0.0).finished(); }

struct HalfPeriod {
  bool ok = false;
  double ell = 0.0;
  double A = 0.0;
  double W = 0.0;
  double psi = 0.0;
};

// Integrates from the apsis (r0, 0) to the next apsis (X . tangent = 0).
HalfPeriod half_period(double Kn, double r0, double h, double max_len = 40.0) {
  const ode::Rhs f = [Kn](double, const Vec& s) { return normalized_rhs(Kn, s); };
  auto g = [](const Vec& s) { return s[0] * std::cos(s[2]) + s[1] * std::sin(s[2]); };
  HalfPeriod out;
  Vec y = normalized_start(r0);
  double t = 0.0;
  Vec y1 = ode::rk4_step(f, t, y, h);
  double g0 = g(y1);
  y = y1;
  t = h;
  while (t < max_len) {
    y1 = ode::rk4_step(f, t, y, h);
    const double g1 = g(y1);
    if (!y1.allFinite()) return out;
    if ((g0 < 0.0) != (g1 < 0.0) || g1 == 0.0) {
      // Illinois refinement of the step length tau in (0, h].
      double a = 0.0, b = h, ga = g0, gb = g1;
      Vec ys = y1;
      double tau = h;
      int side = 0;
      for (int it = 0; it < 100 && b - a > 1e-16 * (1.0 + t); ++it) {
        tau = (a * gb - b * ga) / (gb - ga);
        if (!(tau > a && tau < b)) tau = 0.5 * (a + b);
        ys = ode::rk4_step(f, t, y, tau);
        const double gt = g(ys);
        if (gt == 0.0) break;
        if ((gt < 0.0) == (ga < 0.0)) {
          a = tau;
          ga = gt;
          if (side == -1) gb *= 0.5;
          side = -1;
        } else {
          b = tau;
          gb = gt;
          if (side == 1) ga *= 0.5;
          side = 1;
        }
      }
      out.ok = true;
      out.ell = t + tau;
      out.A = ys[3];
      out.W = ys[4];
      out.psi = wrap_pi(std::atan2(ys[1], ys[0]) - std::atan2(0.0, r0));
      return out;
    }
    g0 = g1;
    y = y1;
    t += h;
  }
  return out;
}

struct Target {
  int N;
  double psi;
};

std::vector<Target> dance_targets() {
  std::vector<Target> out;
  for (int N : {4, 6, 8}) {
    for (int m = 1; 2 * m < N; ++m) {
      if (std::gcd(m, N / 2) != 1) continue;  // closes earlier with fewer half-periods
      for (int s : {-1, 1}) out.push_back({N, s * 2.0 * M_PI * m / N});
    }
  }
  return out;
}

struct Solution {
  double Kn = 0.0, r0 = 0.0;
  double res = 1e300;
  HalfPeriod hp;
  Target target{};
};

Eigen::Vector2d residual(const HalfPeriod& hp, double psi) { return {hp.A, wrap_pi(hp.psi - psi)}; }

Solution levenberg_marquardt(double Kn, double r0, const Target& tg, double tol, double h) {
  Solution s;
  HalfPeriod hp = half_period(Kn, r0, h);
  if (!hp.ok) return s;
  Eigen::Vector2d R = residual(hp, tg.psi);
  double mu = 1e-3;
  for (int it = 0; it < 80 && R.norm() > tol; ++it) {
    Eigen::Matrix2d J;
    bool ok = true;
    const double d = 1e-6;
    for (int j = 0; j < 2 && ok; ++j) {
      const double kp = Kn + (j == 0 ? d : 0.0), km = Kn - (j == 0 ? d : 0.0);
      const double rp = r0 + (j == 1 ? d : 0.0), rm = r0 - (j == 1 ? d : 0.0);
      const HalfPeriod a = half_period(kp, rp, h), b = half_period(km, rm, h);
      ok = a.ok && b.ok;
      if (ok) J.col(j) = (residual(a, tg.psi) - residual(b, tg.psi)) / (2.0 * d);
    }
    if (!ok) break;
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Eigen::Matrix2d M = J.transpose() * J;
      M.diagonal() *= 1.0 + mu;
      const Eigen::Vector2d step = M.fullPivLu().solve(-J.transpose() * R);
      const HalfPeriod trial = half_period(Kn + step[0], r0 + step[1], h);
      if (trial.ok && residual(trial, tg.psi).norm() < R.norm()) {
        Kn += step[0];
        r0 += step[1];
        hp = trial;
        R = residual(trial, tg.psi);
        mu = std::max(mu / 4.0, 1e-12);
        accepted = true;
      } else {
        mu *= 8.0;
      }
    }
    if (!accepted) break;
  }
  s.Kn = Kn;
  s.r0 = r0;
  s.res = R.norm();
  s.hp = hp;
  s.target = tg;
  return s;
}

DanceParams params_from_normalized(double Kn, double r0, int N, double L, double eps) {
  // Period eps: scale s = eps / L. Swapping x1 <-> x2 maps the (cos, sin)
  // convention onto x1' = sin(phi), x2' = cos(phi).
  const double s = eps / L;
  DanceParams p;
  p.K_norm = Kn;
  p.r0 = r0;
  p.half_periods = N;
  p.length_norm = L;
  p.p6 = 1.0 / (s * s * s);
  p.K = Kn / s;
  p.p4 = 0.0;
  p.p5 = (2.0 / 3.0) * p.p6 * s * r0;
  p.phi_init = 0.5 * M_PI;
  return p;
}

// Printed system with phi as a state: (x1, x2, phi, y, z1, z2, w), delta = 1, Q = I.
Vec printed_rhs(const DanceParams& p, const Vec& s) {
  const double u1 = std::sin(s[2]), u2 = std::cos(s[2]);
  const double lam = 1.5 * p.p4 + p.p6 * s[0];
  const double mu = 1.5 * p.p5 + p.p6 * s[1];
  const double a = 0.5 * (s[1] * u1 - s[0] * u2);
  const double r2 = s[0] * s[0] + s[1] * s[1];
  Vec d(7);
  d << u1, u2, p.K + (lam * lam + mu * mu) / (2.0 * p.p6), a, s[1] * a, s[0] * a, r2 * a;
  return d;
}

ode::AdaptiveResult integrate_printed(const DanceParams& p, double T, bool record) {
  Vec y0 = Vec::Zero(7);
  y0[2] = p.phi_init;
  ode::AdaptiveOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-15;
  o.max_step = T / 400.0;
  return ode::dopri5([&](double, const Vec& s) { return printed_rhs(p, s); }, 0.0, y0, T, o, record);
}

double h1_at(const DanceParams& p, const Vec& s) {
  const double lam = 1.5 * p.p4 + p.p6 * s[0];
  const double mu = 1.5 * p.p5 + p.p6 * s[1];
  const Eigen::Vector2d b = rotate_lambda_mu(lam, mu, s[2]);
  return reduced_h1(b[0], b[1], p.K, p.p6);
}

// Uniform table of the normalized angle phi(tau) on [0, L] with its derivative.
struct AngleTable {
  double L = 0.0;
  std::vector<double> phi, dphi;

  double step() const { return L / static_cast<double>(phi.size() - 1); }

  // Cubic Hermite value and derivative at tau (clamped to [0, L]).
  std::pair<double, double> at(double tau) const {
    const double h = step();
    const std::size_t n = phi.size() - 1;
    tau = std::clamp(tau, 0.0, L);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(tau / h), n - 1);
    const double s = (tau - h * static_cast<double>(i)) / h;
    const double p0 = phi[i], p1 = phi[i + 1], m0 = dphi[i] * h, m1 = dphi[i + 1] * h;
    const double s2 = s * s, s3 = s2 * s;
    const double v = (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
    const double d = ((6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * p1 + (3 * s2 - 2 * s) * m1) / h;
    return {v, d};
  }
};

std::shared_ptr<AngleTable> build_table(double Kn, double r0, double L, int points) {
  auto tab = std::make_shared<AngleTable>();
  tab->L = L;
  const ode::Rhs f = [Kn](double, const Vec& s) { return normalized_rhs(Kn, s); };
  const int sub = 8;
  const double h = L / points;
  Vec y = normalized_start(r0);
  tab->phi.reserve(points + 1);
  tab->dphi.reserve(points + 1);
  auto push = [&](const Vec& s) {
    tab->phi.push_back(s[2]);
    tab->dphi.push_back(Kn + 0.5 * (s[0] * s[0] + s[1] * s[1]));
  };
  push(y);
  double t = 0.0;
  for (int i = 0; i < points; ++i) {
    for (int k = 0; k < sub; ++k) {
      y = ode::rk4_step(f, t, y, h / sub);
      t += h / sub;
    }
    push(y);
  }
  return tab;
}

}  // namespace

DanceParams rescale_dance(const DanceParams& params, double eps) {
  if (!(eps > 0.0)) throw DomainError("rescale_dance: eps must be positive");
  DanceParams p = params_from_normalized(params.K_norm, params.r0, params.half_periods, params.length_norm, eps);
  p.sigma62 = params.sigma62;
  return p;
}

UniversalCurve dance_controls(const DanceParams& params, double eps, int table_points) {
  if (!(eps > 0.0)) throw DomainError("dance_controls: eps must be positive");
  if (!(params.length_norm > 0.0)) throw InvalidInput("dance_controls: missing normalized length");
  static std::mutex mtx;
  static std::map<std::tuple<double, double, double, int>, std::shared_ptr<AngleTable>> cache;
  std::shared_ptr<AngleTable> tab;
  {
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_tuple(params.K_norm, params.r0, params.length_norm, table_points);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, build_table(params.K_norm, params.r0, params.length_norm, table_points)).first;
    tab = it->second;
  }
  UniversalCurve c;
  c.kind = CurveKind::SixTwoDance;
  c.eps = eps;
  c.dance = rescale_dance(params, eps);
  const double L = params.length_norm;
  c.controls = {2, eps, [tab, L, eps](double t) {
                  const double phi = tab->at(L * t / eps).first;
                  return Vec((Vec(2) << std::sin(phi), std::cos(phi)).finished());
                }};
  c.w_gain = std::pow(eps, 4) / (L * L * L);
  return c;
}

DanceReport verify_dance(const DanceParams& params) {
  DanceReport r;
  const DanceParams p = rescale_dance(params, 1.0);
  const ode::AdaptiveResult run = integrate_printed(p, 1.0, true);
  const Vec& e = run.y;
  r.closure = {e[0], e[1], e[3], e[4], e[5]};
  const double lam0 = 1.5 * p.p4, mu0 = 1.5 * p.p5;
  const double lam1 = 1.5 * p.p4 + p.p6 * e[0], mu1 = 1.5 * p.p5 + p.p6 * e[1];
  const double dphi = std::remainder(e[2] - p.phi_init, 2.0 * M_PI);
  r.periodicity = {e[0], e[1], dphi, lam1 - lam0, mu1 - mu0};
  Vec y0 = Vec::Zero(7);
  y0[2] = p.phi_init;
  const double H0 = h1_at(p, y0);
  for (const Vec& s : run.states) r.h1_drift = std::max(r.h1_drift, std::abs(h1_at(p, s) - H0) / std::abs(H0));
  r.w_gain = e[6];

  // Curvature law along the tabulated controls.
  auto tab = build_table(params.K_norm, params.r0, params.length_norm, 20000);
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const Vec& s = run.states[i];
    const double lam = 1.5 * p.p4 + p.p6 * s[0], mu = 1.5 * p.p5 + p.p6 * s[1];
    // d phi / dt = L * d phi / d tau for the period-1 curve
    const double d = params.length_norm * tab->at(params.length_norm * run.times[i]).second;
    r.curvature_defect =
        std::max(r.curvature_defect, std::abs(d - p.K - (lam * lam + mu * mu) / (2.0 * p.p6)) / std::abs(p.K));
  }
  for (double eps : {0.5, 1.0, 2.0}) {
    const DanceParams q = rescale_dance(params, eps);
    const double w = integrate_printed(q, eps, false).y[6];
    r.sigma_rescaled.push_back(std::pow(eps, 4) / w);
  }
  return r;
}

UniversalCurve six_two_shoot(double eps, const ShootOptions& opts, DanceReport* report) {
  if (!(eps > 0.0)) throw DomainError("six_two_shoot: eps must be positive");
  const std::vector<Target> targets = dance_targets();
  // Coarse survey of the half-period map.
  struct Probe {
    double Kn, r0;
    HalfPeriod hp;
  };
  std::vector<Probe> probes;
  const double rs[] = {-2.5, -2.0, -1.5, -1.0, -0.75, -0.5, -0.3, -0.15,
                       0.15, 0.3,  0.5,  0.75, 1.0,   1.5,  2.0,  2.5};
  for (int i = 0; i <= 12; ++i) {
    const double Kn = -2.0 + 0.25 * i;
    for (double r0 : rs) {
      const HalfPeriod hp = half_period(Kn, r0, 2e-3);
      if (hp.ok && hp.ell > 0.05) probes.push_back({Kn, r0, hp});
    }
  }
  const double h = 5e-4;
  std::vector<Solution> sols;
  int starts = 0;
  for (const Target& tg : targets) {
    std::vector<const Probe*> order;
    for (const Probe& p : probes) order.push_back(&p);
    std::sort(order.begin(), order.end(), [&](const Probe* a, const Probe* b) {
      return residual(a->hp, tg.psi).norm() < residual(b->hp, tg.psi).norm();
    });
    for (std::size_t k = 0; k < std::min<std::size_t>(4, order.size()); ++k) {
      ++starts;
      Solution s = levenberg_marquardt(order[k]->Kn, order[k]->r0, tg, opts.tolerance, h);
      if (s.res <= opts.tolerance && s.hp.ell > 0.05) sols.push_back(s);
    }
  }
  if (sols.empty()) throw ShootingFailed("six_two_shoot: no start converged", {});
  // Largest w gain = least total normalized length; ties by residual.
  std::sort(sols.begin(), sols.end(), [](const Solution& a, const Solution& b) {
    const double la = a.target.N * a.hp.ell, lb = b.target.N * b.hp.ell;
    if (std::abs(la - lb) > 1e-9 * la) return la < lb;
    return a.res < b.res;
  });
  std::vector<double> last_closure;
  for (const Solution& best : sols) {
    const double L = best.target.N * best.hp.ell;
    DanceParams p = params_from_normalized(best.Kn, best.r0, best.target.N, L, 1.0);
    DanceReport rep = verify_dance(p);
    rep.starts = starts;
    rep.converged = static_cast<int>(sols.size());
    double cmax = 0.0, pmax = 0.0;
    for (double v : rep.closure) cmax = std::max(cmax, std::abs(v));
    for (double v : rep.periodicity) pmax = std::max(pmax, std::abs(v));
    last_closure = rep.closure;
    if (cmax > opts.closure_tol || pmax > opts.period_tol || !(rep.w_gain > 0.0)) continue;
    p.sigma62 = 1.0 / rep.w_gain;
    UniversalCurve c = dance_controls(p, eps, opts.table_points);
    c.dance.sigma62 = p.sigma62;
    if (report) *report = rep;
    return c;
  }
  throw ShootingFailed("six_two_shoot: converged half-periods fail the period closure checks", last_closure);
}

double reduced_h1(double lambda_bar, double mu_bar, double K, double p6) {
  if (p6 == 0.0) throw DomainError("reduced_h1: p6 must be nonzero");
  const double c = K + (lambda_bar * lambda_bar + mu_bar * mu_bar) / (2.0 * p6);
  return -p6 * lambda_bar - 0.5 * p6 * c * c;
}

Eigen::Vector2d rotate_lambda_mu(double lambda, double mu, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  return {c * lambda - s * mu, s * lambda + c * mu};
}

double first_integral_radial(const std::function<double(double)>& kfun, double x, double y, double phi) {
  const double xb = x * std::cos(phi) + y * std::sin(phi);
  const double yb = -x * std::sin(phi) + y * std::cos(phi);
  const double r2 = xb * xb + yb * yb;
  double integral = 0.0;
  if (r2 > 0.0) {
    double err = 0.0;
    // s = r2 u keeps the rounding floor of the error estimate scale free
    integral = r2 * boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
                        [&](double u) { return kfun(r2 * u); }, 0.0, 1.0, 15, 1e-12, &err);
    if (!std::isfinite(integral) || r2 * err > 1e-9 * (r2 + std::abs(integral)))
      throw NumericFailure("first_integral_radial: quadrature did not converge");
  }
  return yb + 0.5 * integral;
}

ControlSignal rotate_controls(const ControlSignal& u, double angle) {
  if (u.p != 2) throw InvalidInput("rotate_controls: needs two controls");
  const double c = std::cos(angle), s = std::sin(angle);
  ControlSignal out = u;
  const auto f = u.u;
  out.u = [f, c, s](double t) {
    const Vec v = f(t);
    return Vec((Vec(2) << c * v[0] - s * v[1], s * v[0] + c * v[1]).finished());
  };
  return out;
}

ControlSignal reverse_controls(const ControlSignal& u) {
  ControlSignal out = u;
  const auto f = u.u;
  const double T = u.duration;
  out.u = [f, T](double t) { return Vec(-f(T - t)); };
  return out;
}

ControlSignal rescale_controls(const ControlSignal& u, double new_duration) {
  if (!(new_duration > 0.0)) throw DomainError("rescale_controls: duration must be positive");
  ControlSignal out = u;
  const auto f = u.u;
  const double r = u.duration / new_duration;
  out.duration = new_duration;
  out.u = [f, r](double t) { return f(t * r); };
  return out;
}

std::vector<Eigen::Vector2d> planar_trace(const ControlSignal& u, int samples) {
  if (u.p < 2) throw InvalidInput("planar_trace: needs at least two controls");
  if (samples < 1) throw InvalidInput("planar_trace: samples must be positive");
  std::vector<Eigen::Vector2d> out;
  out.reserve(samples + 1);
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  out.push_back(x);
  const double h = u.duration / samples;
  for (int i = 0; i < samples; ++i) {
    // Simpson rule on each sample interval (exact RK4 for x' = u(t)).
    const double t = i * h;
    x += h / 6.0 * (u.u(t).head<2>() + 4.0 * u.u(t + 0.5 * h).head<2>() + u.u(t + h).head<2>());
    out.push_back(x);
  }
  return out;
}

void write_curve_csv(const UniversalCurve& c, const std::string& path, int samples) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidInput("cannot write '" + path + "'");
  const auto trace = planar_trace(c.controls, samples);
  std::fprintf(f, "t,u1,u2,x1,x2\n");
  for (int i = 0; i <= samples; ++i) {
    const double t = c.eps * i / samples;
    const Vec u = c.controls.u(t);
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", t, u[0], u[1], trace[i].x(), trace[i].y());
  }
  std::fclose(f);
}

void save_dance(const DanceParams& p, const DanceReport& r, const std::string& path) {
  nlohmann::ordered_json j;
  j["K_norm"] = p.K_norm;
  j["r0"] = p.r0;
  j["half_periods"] = p.half_periods;
  j["length_norm"] = p.length_norm;
  j["sigma62"] = p.sigma62;
  j["period1"] = {{"p4", p.p4}, {"p5", p.p5}, {"p6", p.p6}, {"K", p.K}, {"phi_init", p.phi_init}};
  j["closure_residuals"] = r.closure;
  j["periodicity_residuals"] = r.periodicity;
  j["h1_relative_drift"] = r.h1_drift;
  j["curvature_defect"] = r.curvature_defect;
  j["sigma_rescaled"] = r.sigma_rescaled;
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

DanceParams load_dance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read dance artifact '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    DanceParams p = params_from_normalized(j.at("K_norm").get<double>(), j.at("r0").get<double>(),
                                           j.at("half_periods").get<int>(), j.at("length_norm").get<double>(), 1.0);
    p.sigma62 = j.at("sigma62").get<double>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("malformed dance artifact '" + path + "': " + e.what());
  }
}

std::string default_dance_path() { return std::string(NHMP_DATA_DIR) + "/sigma62.json"; }

}  // namespace nhmp
