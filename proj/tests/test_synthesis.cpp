#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nhmp/errors.hpp"
#include "nhmp/models.hpp"
#include "nhmp/ode.hpp"
#include "nhmp/synthesis.hpp"

using namespace nhmp;

namespace {

double max_norm_defect(const ControlSignal& u, int samples) {
  double worst = 0.0;
  for (int i = 0; i <= samples; ++i) worst = std::max(worst, std::abs(u.u(u.duration * i / samples).norm() - 1.0));
  return worst;
}

// Signed area (x2 dx1 - x1 dx2) / 2 of a traced polygon.
double green_area(const std::vector<Eigen::Vector2d>& tr) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const Eigen::Vector2d m = 0.5 * (tr[i] + tr[i + 1]), d = tr[i + 1] - tr[i];
    a += 0.5 * (m.y() * d.x() - m.x() * d.y());
  }
  return a;
}

const DanceParams& artifact() {
  static const DanceParams p = load_dance(default_dance_path());
  return p;
}

}  // namespace

TEST_CASE("circle controls") {
  const UniversalCurve c = circle_controls(2.0 * M_PI);
  const auto tr = planar_trace(c.controls, 4000);
  CHECK((tr.back() - tr.front()).norm() <= 1e-9);
  double radius = 0.0;
  for (const auto& p : tr) radius = std::max(radius, (p - Eigen::Vector2d(0.0, 1.0)).norm());
  CHECK(radius == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(max_norm_defect(c.controls, 10000) <= 1e-9);

  const UniversalCurve c1 = circle_controls(1.0);
  const Vec end = integrate_endpoint(make_nilpotent(contact_model()), c1.controls, Vec::Zero(3), 1e-4);
  CHECK(std::abs(end[2]) == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-9));
  CHECK(c1.w_gain == doctest::Approx(1.0 / (4.0 * M_PI)));
  CHECK(c1.controls.duration == 1.0);

  const UniversalCurve ph = circle_controls(1.0, 0.7);
  CHECK(ph.controls.u(0.0)[0] == doctest::Approx(std::cos(0.7)));
  CHECK_THROWS_AS(circle_controls(0.0), DomainError);
}

TEST_CASE("multi-frequency controls") {
  const UniversalCurve one = multifreq_controls(1.0, {1.0}, 2);
  const UniversalCurve circ = circle_controls(1.0, 0.5 * M_PI);
  for (double t : {0.0, 0.13, 0.5, 0.77}) CHECK((one.controls.u(t) - circ.controls.u(t)).norm() <= 1e-12);

  const UniversalCurve m5 = multifreq_controls(0.8, {1.0, 3.0}, 5);
  CHECK(m5.controls.p == 5);
  CHECK(max_norm_defect(m5.controls, 10000) <= 1e-9);
  for (int i = 0; i <= 100; ++i) CHECK(m5.controls.u(0.008 * i)[4] == 0.0);
  CHECK(max_norm_defect(multifreq_controls(1.0, {0.2, 5.0, 1.0}, 6).controls, 10000) <= 1e-9);
  CHECK_THROWS_AS(multifreq_controls(1.0, {1.0, 0.0}, 4), DomainError);
}

TEST_CASE("elastica angle") {
  const Phi0Result r = find_phi0();
  CHECK(r.residual <= 1e-10);
  CHECK(r.phi0_deg == doctest::Approx(130.70991071).epsilon(1e-9));
  CHECK(std::abs(r.phi0_deg - 130.0) < 1.0);
  CHECK(r.k == doctest::Approx(std::sin(r.phi0_deg * M_PI / 360.0)));
}

TEST_CASE("elastica controls and closed form") {
  const UniversalCurve c = elastica_controls(1.0);
  CHECK(max_norm_defect(c.controls, 10000) <= 1e-9);

  const Vec e4 = integrate_endpoint(make_nilpotent(four_two()), c.controls, Vec::Zero(4), 1.0 / 20000);
  CHECK(e4.head<3>().norm() <= 1e-6);
  const Vec e5 = integrate_endpoint(make_nilpotent(five_two()), c.controls, Vec::Zero(5), 1.0 / 20000);
  CHECK(e5.head<4>().norm() <= 1e-6);

  CHECK(std::abs(green_area(planar_trace(c.controls, 20000))) <= 1e-6);

  // The unit-period w gain agrees with an RK4 integration of the 4-2 model.
  CHECK(elastica_unit_gain() == doctest::Approx(0.0058007097).epsilon(1e-8));
  CHECK(std::abs(e4[3]) == doctest::Approx(elastica_unit_gain()).epsilon(1e-7));
  CHECK(elastica_controls(0.5).w_gain == doctest::Approx(0.125 * elastica_unit_gain()));

  const double eps = 0.8;
  CHECK(std::abs(elastica_position(eps, 0.0)[1]) <= 1e-15);
  CHECK((elastica_position(eps, eps) - elastica_position(eps, 0.0)).norm() <= 1e-8);
  const UniversalCurve printed = elastica_controls(eps, ElasticaFrame::Printed);
  const double h = 1e-5;
  for (double t : {0.05, 0.2, 0.4, 0.61, 0.75}) {
    const Eigen::Vector2d d = (elastica_position(eps, t + h) - elastica_position(eps, t - h)) / (2 * h);
    CHECK((d - Eigen::Vector2d(printed.controls.u(t))).norm() <= 1e-6);
  }
}

TEST_CASE("dance artifact") {
  const DanceParams& p = artifact();
  CHECK(p.half_periods == 4);
  CHECK(p.sigma62 == doctest::Approx(1846.5272839342317).epsilon(1e-9));
  const DanceReport r = verify_dance(p);
  for (double c : r.closure) CHECK(std::abs(c) <= 1e-8);
  for (double c : r.periodicity) CHECK(std::abs(c) <= 1e-6);
  CHECK(r.h1_drift <= 1e-8);
  CHECK(r.w_gain > 0.0);
  for (double s : r.sigma_rescaled) CHECK(std::abs(s / p.sigma62 - 1.0) <= 1e-3);

  // Independent route: RK4 on the 6-2 model with the tabulated controls.
  const UniversalCurve c = dance_controls(p, 1.0);
  CHECK(max_norm_defect(c.controls, 10000) <= 1e-9);
  const Vec end = integrate_endpoint(make_nilpotent(six_two()), c.controls, Vec::Zero(6), 1.0 / 40000);
  CHECK(end.head<5>().norm() <= 1e-6);
  CHECK(std::abs(end[5]) == doctest::Approx(1.0 / p.sigma62).epsilon(1e-5));
  CHECK(dance_controls(p, 0.5).w_gain == doctest::Approx(std::pow(0.5, 4) / p.sigma62).epsilon(1e-9));
}

TEST_CASE("reduced Hamiltonian") {
  CHECK(reduced_h1(0.0, 0.0, 0.0, 2.0) == 0.0);
  CHECK_THROWS_AS(reduced_h1(1.0, 1.0, 1.0, 0.0), DomainError);

  // Along x' = sin(phi), x2' = cos(phi), phi' = K + (l^2 + m^2) / (2 p6) the rotated
  // multipliers follow the Hamiltonian field (dH/dmb, -dH/dlb).
  const double p4 = 0.3, p5 = -0.2, p6 = 1.7, K = -0.4;
  auto rhs = [&](double, const Vec& s) {
    const double l = 1.5 * p4 + p6 * s[0], m = 1.5 * p5 + p6 * s[1];
    return Vec((Vec(3) << std::sin(s[2]), std::cos(s[2]), K + (l * l + m * m) / (2 * p6)).finished());
  };
  auto bars = [&](const Vec& s) {
    return rotate_lambda_mu(1.5 * p4 + p6 * s[0], 1.5 * p5 + p6 * s[1], s[2]);
  };
  const Vec s0 = (Vec(3) << 0.1, 0.25, 0.9).finished();
  const double dt = 1e-4, h = 1e-6;
  const Eigen::Vector2d rate = (bars(ode::rk4(rhs, 0, s0, dt, 4)) - bars(ode::rk4(rhs, 0, s0, -dt, 4))) / (2 * dt);
  const Eigen::Vector2d b = bars(s0);
  const double dHdl = (reduced_h1(b[0] + h, b[1], K, p6) - reduced_h1(b[0] - h, b[1], K, p6)) / (2 * h);
  const double dHdm = (reduced_h1(b[0], b[1] + h, K, p6) - reduced_h1(b[0], b[1] - h, K, p6)) / (2 * h);
  CHECK(rate[0] == doctest::Approx(dHdm).epsilon(1e-6));
  CHECK(rate[1] == doctest::Approx(-dHdl).epsilon(1e-6));
}

TEST_CASE("radial first integral") {
  auto drift = [](const std::function<double(double)>& k, double T, int steps) {
    auto rhs = [&](double, const Vec& s) {
      return Vec((Vec(3) << std::cos(s[2]), std::sin(s[2]), k(s[0] * s[0] + s[1] * s[1])).finished());
    };
    Vec s = (Vec(3) << 0.3, -0.2, 0.4).finished();
    const double H0 = first_integral_radial(k, s[0], s[1], s[2]);
    double worst = 0.0;
    const int chunks = 50;
    for (int c = 0; c < chunks; ++c) {
      s = ode::rk4(rhs, 0, s, T / chunks, steps / chunks);
      worst = std::max(worst, std::abs(first_integral_radial(k, s[0], s[1], s[2]) - H0));
    }
    return worst;
  };
  const double x = 0.7, y = -0.3, phi = 1.1;
  CHECK(first_integral_radial([](double) { return 0.0; }, x, y, phi) ==
        doctest::Approx(-x * std::sin(phi) + y * std::cos(phi)));
  CHECK(drift([](double) { return 0.0; }, 5.0, 500) <= 1e-12);
  CHECK(drift([](double) { return 1.0; }, 100.0, 100000) <= 1e-9);
  CHECK(drift([](double s) { return s; }, 20.0, 40000) <= 1e-8);
}

TEST_CASE("control transformations") {
  const UniversalCurve c = circle_controls(1.0, 0.3);
  const ControlSignal r = rotate_controls(c.controls, 0.5);
  CHECK((r.u(0.2) - Vec(Eigen::Rotation2Dd(0.5) * Eigen::Vector2d(c.controls.u(0.2)))).norm() <= 1e-15);
  const ControlSignal b = reverse_controls(c.controls);
  CHECK((b.u(0.2) + c.controls.u(0.8)).norm() <= 1e-15);
  const ControlFrame f = make_nilpotent(contact_model());
  const Vec fwd = integrate_endpoint(f, c.controls, Vec::Zero(3), 1e-4);
  const Vec bwd = integrate_endpoint(f, b, Vec::Zero(3), 1e-4);
  CHECK(bwd[2] == doctest::Approx(-fwd[2]).epsilon(1e-9));
  const ControlSignal s = rescale_controls(c.controls, 0.25);
  CHECK(s.duration == 0.25);
  CHECK((s.u(0.1) - c.controls.u(0.4)).norm() <= 1e-15);
}

TEST_CASE("dance persistence and curve csv") {
  const DanceParams& p = artifact();
  const std::string path = "test_synthesis_dance.json";
  DanceReport rep;
  rep.sigma_rescaled = {p.sigma62, p.sigma62, p.sigma62};
  save_dance(p, rep, path);
  const DanceParams q = load_dance(path);
  CHECK(q.K_norm == p.K_norm);
  CHECK(q.r0 == p.r0);
  CHECK(q.length_norm == p.length_norm);
  CHECK(q.sigma62 == p.sigma62);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_dance("no/such/dance.json"), InvalidInput);

  const std::string csv = "test_synthesis_curve.csv";
  write_curve_csv(circle_controls(1.0), csv, 100);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,u1,u2,x1,x2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 101);
  std::remove(csv.c_str());
}
