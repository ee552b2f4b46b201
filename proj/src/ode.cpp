#include "nhmp/ode.hpp"

#include <algorithm>
#include <cmath>

#include "nhmp/errors.hpp"

namespace nhmp::ode {

Vec rk4_step(const Rhs& f, double t, const Vec& y, double h) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const Vec k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const Vec k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec rk4(const Rhs& f, double t0, const Vec& y0, double t1, int steps) {
  if (steps <= 0) throw InvalidInput("rk4: steps must be positive");
  const double h = (t1 - t0) / steps;
  Vec y = y0;
  for (int i = 0; i < steps; ++i) y = rk4_step(f, t0 + i * h, y, h);
  return y;
}

namespace {

// Dormand-Prince coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

AdaptiveResult dopri5(const Rhs& f, double t0, const Vec& y0, double t1,
                      const AdaptiveOptions& opts, bool record) {
  AdaptiveResult out;
  out.y = y0;
  if (record) {
    out.times.push_back(t0);
    out.states.push_back(y0);
  }
  const double span = t1 - t0;
  if (span == 0.0) return out;
  const double dir = span > 0 ? 1.0 : -1.0;

  double t = t0;
  Vec y = y0;
  Vec k1 = f(t, y);
  double h = opts.initial_step > 0 ? opts.initial_step : std::abs(span) * 1e-3;
  if (opts.max_step > 0) h = std::min(h, opts.max_step);
  double err_prev = 1e-4;

  while (dir * (t1 - t) > 0) {
    if (out.accepted + out.rejected > opts.max_steps)
      throw NumericFailure("dopri5: step budget exhausted");
    if (dir * (t + dir * h - t1) > 0) h = std::abs(t1 - t);
    const double hs = dir * h;

    const Vec k2 = f(t + c2 * hs, y + hs * (a21 * k1));
    const Vec k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const Vec k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 =
        f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = f(t + hs, y_new);
    const Vec err_vec = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err = std::max(err, std::abs(err_vec[i]) / sc);
    }
    if (!std::isfinite(err)) {
      h *= 0.1;
      ++out.rejected;
      if (h < 1e-300) throw NumericFailure("dopri5: non-finite state");
      continue;
    }

    if (err <= 1.0) {
      t += hs;
      y = y_new;
      k1 = k7;
      ++out.accepted;
      if (record) {
        out.times.push_back(t);
        out.states.push_back(y);
      }
      // PI controller (Hairer & Wanner)
      double fac = 0.9 * std::pow(err == 0.0 ? 1e-10 : err, -0.7 / 5.0) *
                   std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(err, 1e-4);
      h *= fac;
    } else {
      ++out.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
    if (opts.max_step > 0) h = std::min(h, opts.max_step);
    if (h < std::abs(span) * 1e-15) throw NumericFailure("dopri5: step size underflow");
  }
  out.y = y;
  return out;
}

}  // namespace nhmp::ode
