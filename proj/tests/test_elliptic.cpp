#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nhmp/elliptic.hpp"
#include "nhmp/errors.hpp"

using namespace nhmp;
using namespace nhmp::elliptic;

namespace {

double quad(const std::function<double(double)>& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  if (a > b) return -integrator.integrate(f, b, a);
  return integrator.integrate(f, a, b);
}

// sn, cn, dn by integrating their defining ODE system from u = 0.
std::array<double, 3> ode_sn_cn_dn(double u, double k) {
  using State = std::array<double, 3>;
  State s{0.0, 1.0, 1.0};
  auto rhs = [k](const State& y, State& d, double) {
    d[0] = y[1] * y[2];
    d[1] = -y[0] * y[2];
    d[2] = -k * k * y[0] * y[1];
  };
  namespace odeint = boost::numeric::odeint;
  odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, s,
                             0.0, u, 1e-3);
  return s;
}

}  // namespace

TEST_CASE("complete K") {
  CHECK(complete_K(Modulus(0.0)) == doctest::Approx(M_PI / 2).epsilon(1e-15));
  const double k = std::sin(65.346 * M_PI / 180);
  const double q = quad([k](double t) { return 1.0 / std::sqrt(1 - k * k * std::sin(t) * std::sin(t)); }, 0,
                        M_PI / 2);
  CHECK(std::abs(complete_K(Modulus(k)) - q) <= 1e-10);
  CHECK(complete_K(Modulus(0.5)) < complete_K(Modulus(0.9)));
  CHECK_THROWS_AS(Modulus(1.0), DomainError);
  CHECK_THROWS_AS(Modulus(-0.1), DomainError);
}

TEST_CASE("complete E against quadrature") {
  for (double k : {0.0, 0.3, 0.6, 0.9, 0.99}) {
    const double q =
        quad([k](double t) { return std::sqrt(1 - k * k * std::sin(t) * std::sin(t)); }, 0, M_PI / 2);
    CHECK(std::abs(complete_E(Modulus(k)) - q) <= 1e-12);
  }
}

TEST_CASE("sn cn dn degenerate modulus and identities") {
  for (double u : {-3.0, 0.0, 0.4, 7.0}) {
    const auto r = jacobi_sn_cn_dn(u, Modulus(0.0));
    CHECK(r.sn == doctest::Approx(std::sin(u)));
    CHECK(r.cn == doctest::Approx(std::cos(u)));
    CHECK(r.dn == 1.0);
  }
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> U(-20, 20), Kd(0, 0.999);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Modulus m(Kd(gen));
    const auto r = jacobi_sn_cn_dn(U(gen), m);
    worst = std::max(worst, std::abs(r.sn * r.sn + r.cn * r.cn - 1));
    worst = std::max(worst, std::abs(r.dn * r.dn + m.k2 * r.sn * r.sn - 1));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("sn cn dn match the defining ODE") {
  for (double k : {0.3, 0.7, 0.95}) {
    const Modulus m(k);
    for (double u : {0.5, 1.7, 4.0}) {
      const auto ref = ode_sn_cn_dn(u, k);
      const auto r = jacobi_sn_cn_dn(u, m);
      CHECK(std::abs(r.sn - ref[0]) <= 1e-10);
      CHECK(std::abs(r.cn - ref[1]) <= 1e-10);
      CHECK(std::abs(r.dn - ref[2]) <= 1e-10);
    }
  }
  const Modulus m(0.7);
  CHECK(jacobi_sn_cn_dn(complete_K(m), m).sn == doctest::Approx(1.0).epsilon(1e-12));
  const auto at_K = ode_sn_cn_dn(complete_K(m), 0.7);
  CHECK(std::abs(at_K[0] - 1.0) <= 1e-10);
}

TEST_CASE("derivatives and periodicity") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> U(-5, 5), Kd(0, 0.95);
  for (int i = 0; i < 50; ++i) {
    const Modulus m(Kd(gen));
    const double u = U(gen), h = 1e-5;
    const auto r = jacobi_sn_cn_dn(u, m);
    const auto p = jacobi_sn_cn_dn(u + h, m), q = jacobi_sn_cn_dn(u - h, m);
    CHECK(std::abs((p.sn - q.sn) / (2 * h) - r.cn * r.dn) <= 1e-6);
    CHECK(std::abs((p.cn - q.cn) / (2 * h) + r.sn * r.dn) <= 1e-6);
    CHECK(std::abs((p.dn - q.dn) / (2 * h) + m.k2 * r.sn * r.cn) <= 1e-6);
    const double K4 = 4 * complete_K(m);
    CHECK(std::abs(jacobi_sn_cn_dn(u + K4, m).sn - r.sn) <= 1e-9);
  }
}

TEST_CASE("Jacobi epsilon") {
  CHECK(jacobi_epsilon(1.3, Modulus(0.0)) == 1.3);
  CHECK(jacobi_epsilon(0.0, Modulus(0.8)) == 0.0);
  const Modulus m(0.6);
  const double q = quad([](double t) { return std::sqrt(1 - 0.36 * std::sin(t) * std::sin(t)); }, 0, M_PI / 2);
  CHECK(std::abs(jacobi_epsilon(complete_K(m), m) - q) <= 1e-9);
  for (double k : {0.2, 0.76, 0.95})
    for (double u : {-2.0, 0.3, 1.9, 6.5}) {
      const Modulus mk(k);
      const double ref = quad(
          [&](double v) {
            const double d = jacobi_sn_cn_dn(v, mk).dn;
            return d * d;
          },
          0, u);
      CHECK(std::abs(jacobi_epsilon(u, mk) - ref) <= 1e-10);
    }
}
