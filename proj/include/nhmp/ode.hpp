#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace nhmp::ode {

using Vec = Eigen::VectorXd;
using Rhs = std::function<Vec(double, const Vec&)>;

/// One classical fourth-order Runge-Kutta step.
Vec rk4_step(const Rhs& f, double t, const Vec& y, double h);

/// Fixed-step RK4 from t0 to t1 using `steps` equal steps.
Vec rk4(const Rhs& f, double t0, const Vec& y0, double t1, int steps);

struct AdaptiveOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects a step from the problem scale
  double max_step = 0.0;      // 0 means unbounded
  long max_steps = 5'000'000;
};

struct AdaptiveResult {
  Vec y;
  long accepted = 0;
  long rejected = 0;
  std::vector<double> times;   // filled only when recording
  std::vector<Vec> states;
};

/// Dormand-Prince 5(4) embedded pair with standard step-size control.
/// Throws NumericFailure when the step size underflows or the budget is exhausted.
AdaptiveResult dopri5(const Rhs& f, double t0, const Vec& y0, double t1,
                      const AdaptiveOptions& opts = {}, bool record = false);

}  // namespace nhmp::ode
