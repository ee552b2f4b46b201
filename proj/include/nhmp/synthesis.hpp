#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nhmp/geometry.hpp"

namespace nhmp {

enum class CurveKind { Circle, MultiFreq, Elastica, SixTwoDance };

std::string to_string(CurveKind kind);

struct ElasticaParams {
  double phi0_deg = 0.0;
  double k = 0.0;
  double K = 0.0;
};

/// Parameters of the 6-2 extremal for period 1 in the convention
/// x1' = sin(phi), x2' = cos(phi), lambda = 3/2 p4 + p6 x1, mu = 3/2 p5 + p6 x2,
/// phi' = K + (lambda^2 + mu^2) / (2 p6).
struct DanceParams {
  double p4 = 0.0;
  double p5 = 0.0;
  double p6 = 0.0;
  double K = 0.0;
  double phi_init = 0.0;
  // Normalized description (p6 = 1, apsis start (r0, 0), curvature Kn + r^2/2).
  double K_norm = 0.0;
  double r0 = 0.0;
  int half_periods = 0;
  double length_norm = 0.0;  // L = total normalized length
  double sigma62 = 0.0;      // 1 / (w gain of the period-1 curve)
};

struct UniversalCurve {
  CurveKind kind = CurveKind::Circle;
  double eps = 0.0;
  ControlSignal controls;
  /// Displacement of the top coordinate per period on the matching model:
  /// |y| on the Heisenberg model, w on the 4-2 model, w on the 6-2 model.
  double w_gain = 0.0;
  std::vector<double> weights;  // MultiFreq
  ElasticaParams elastica;      // Elastica
  DanceParams dance;            // SixTwoDance
  double phase = 0.0;           // Circle
};

/// u(t) = (cos(2 pi t / eps + phase), sin(2 pi t / eps + phase)).
UniversalCurve circle_controls(double eps, double phase = 0.0);

/// u_{2j-1} = -sqrt(j l_j / S) sin(2 pi j t / eps), u_{2j} = sqrt(j l_j / S) cos(2 pi j t / eps),
/// S = sum j l_j, and u_p = 0 for odd p. Needs floor(p / 2) positive weights.
UniversalCurve multifreq_controls(double eps, const std::vector<double>& weights, int p);

struct Phi0Result {
  double phi0_deg = 0.0;
  double k = 0.0;
  double K = 0.0;
  double E = 0.0;
  double residual = 0.0;  // 2 E(k) - K(k)
  int iterations = 0;
};

/// Root of 2E(k) - K(k) = 0 with k = sin(phi0 / 2), by bisection on (90, 180) degrees.
Phi0Result find_phi0();

/// Printed frame: u = (1 - 2 dn^2, -2 k sn dn) at K(1 + 4t/eps); the nonzero
/// third-order moment then sits on x2. Rotated frame: the same curve turned by
/// +90 degrees, u' = (-u2, u1), which puts the moment on x1 as the 4-2 model
/// (w' = delta x1 a) and the 5-2 model (z' = x2 a, w' = delta x1 a) expect.
enum class ElasticaFrame { Printed, Rotated };

UniversalCurve elastica_controls(double eps, ElasticaFrame frame = ElasticaFrame::Rotated);

/// Printed closed form x1(t), x2(t) (Printed frame), or its +90 degree rotation.
Eigen::Vector2d elastica_position(double eps, double t, ElasticaFrame frame = ElasticaFrame::Printed);

/// w gain of the unit-period rotated elastica on the 4-2 model with delta = 1.
double elastica_unit_gain();

struct ShootOptions {
  double tolerance = 1e-10;   // on the normalized half-period residuals
  double closure_tol = 1e-8;  // on the period-1 closure residuals
  double period_tol = 1e-6;   // on the reduced-state periodicity
  int table_points = 20000;   // samples of the control angle over one period
};

/// Diagnostics of a shot dance, all measured on the period-1 curve of the
/// printed 6-2 system by adaptive integration.
struct DanceReport {
  std::vector<double> closure;      // x1, x2, y, z1, z2 at t = 1
  std::vector<double> periodicity;  // x1, x2, phi mod 2 pi, lambda, mu
  double h1_drift = 0.0;            // max relative drift of H1
  double curvature_defect = 0.0;    // max |phi' - K - (l^2 + m^2) / (2 p6)|
  double w_gain = 0.0;
  std::vector<double> sigma_rescaled;  // sigma at periods 0.5, 1, 2
  int starts = 0;
  int converged = 0;
};

/// Finds the closed 6-2 extremal of least normalized length (largest w gain on
/// the ball-trailer model) by multi-start Levenberg-Marquardt shooting on the
/// half-period map, then verifies it on the printed system.
/// Throws ShootingFailed when no start converges.
UniversalCurve six_two_shoot(double eps = 1.0, const ShootOptions& opts = {},
                             DanceReport* report = nullptr);

/// Dance controls at period eps from known parameters (no shooting).
UniversalCurve dance_controls(const DanceParams& params, double eps, int table_points = 20000);

/// Verifies a dance on the printed system (see DanceReport).
DanceReport verify_dance(const DanceParams& params);

/// Period-eps parameters of the same curve (weighted rescaling).
DanceParams rescale_dance(const DanceParams& params, double eps);

/// H1 = -p6 lb - (p6 / 2) (K + (lb^2 + mb^2) / (2 p6))^2. Throws DomainError for p6 = 0.
double reduced_h1(double lambda_bar, double mu_bar, double K, double p6);

/// (lb, mb) = (cos(phi) l - sin(phi) m, sin(phi) l + cos(phi) m).
Eigen::Vector2d rotate_lambda_mu(double lambda, double mu, double phi);

/// H = ybar + 1/2 int_0^{xbar^2 + ybar^2} k(s) ds, constant along
/// x' = cos(phi), y' = sin(phi), phi' = k(x^2 + y^2).
/// Throws NumericFailure when the quadrature does not converge.
double first_integral_radial(const std::function<double(double)>& kfun, double x, double y, double phi);

/// Control transformations used to steer with the universal curves.
ControlSignal rotate_controls(const ControlSignal& u, double angle);
/// The same loop traversed backwards: u(t) -> -u(T - t).
ControlSignal reverse_controls(const ControlSignal& u);
/// Time rescaling to a new duration: u(t) -> u(t * T / new_duration).
ControlSignal rescale_controls(const ControlSignal& u, double new_duration);

/// Planar trace x(t) = int u of a two-control signal, `samples` + 1 points.
std::vector<Eigen::Vector2d> planar_trace(const ControlSignal& u, int samples);

/// CSV with columns t,u1,u2,x1,x2 (%.17g).
void write_curve_csv(const UniversalCurve& c, const std::string& path, int samples = 1000);

/// Dance parameters persisted as JSON.
void save_dance(const DanceParams& params, const DanceReport& report, const std::string& path);
DanceParams load_dance(const std::string& path);
/// Path of the dance artifact shipped with the sources.
std::string default_dance_path();

}  // namespace nhmp
