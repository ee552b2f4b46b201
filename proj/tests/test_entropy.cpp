#include <cmath>

#include "doctest.h"
#include "nhmp/entropy.hpp"
#include "nhmp/errors.hpp"
#include "nhmp/models.hpp"
#include "nhmp/synthesis.hpp"

using namespace nhmp;

TEST_CASE("contact metric complexity") {
  const EntropyEstimate mc = mc_contact([](double) { return 1.0; }, 1.0);
  CHECK(mc.exponent == 2);
  CHECK(mc.value(0.1) == doctest::Approx(200.0).epsilon(1e-12));

  // chi -> infinity at the tangency t = 1: int (1 - t) dt = 1/2
  const EntropyEstimate tan = mc_contact([](double t) { return 1.0 / (1.0 - t); }, 1.0, {1.0});
  CHECK(tan.integral_value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(tan.value(0.1) == doctest::Approx(100.0).epsilon(1e-10));

  CHECK_THROWS_AS(mc_contact([](double t) { return t - 0.5; }, 1.0), SingularInvariant);
}

TEST_CASE("entropy from metric complexity") {
  EntropyEstimate mc = mc_contact([](double) { return 1.0; }, 1.0);
  CHECK(mc.coefficient == doctest::Approx(2.0));
  const EntropyEstimate e = entropy_from_mc(mc);
  CHECK(e.coefficient == doctest::Approx(4.0 * M_PI));
  CHECK(e.from_mc);
  CHECK_THROWS_AS(entropy_from_mc(e), ContractError);
  CHECK_THROWS_AS(entropy_from_mc(entropy_42_52([](double) { return 1.0; }, 1.0)), ContractError);
}

TEST_CASE("logarithmic case") {
  const EntropyEstimate e = entropy_log({1.0}, 2);
  CHECK(e.logarithmic);
  CHECK(e.value(std::exp(-1.0)) == doctest::Approx(2.0 * std::exp(2.0)).epsilon(1e-12));
  CHECK(entropy_log({1.0, 2.0}, 2).integral_value == doctest::Approx(1.5));
  CHECK(entropy_log({1.0, 2.0}, 3).value(0.1) == doctest::Approx(1.5 * entropy_log({1.0}, 3).value(0.1)));
  CHECK_THROWS_AS(entropy_log({}, 2), ContractError);
  CHECK_THROWS_AS(entropy_log({1.0, -1.0}, 2), DomainError);
}

TEST_CASE("free case") {
  const double eps = 0.1;
  const EntropyEstimate one = entropy_free_case([](double) { return std::vector<double>{1.0}; }, 1.0);
  CHECK(one.value(eps) == doctest::Approx(2.0 * M_PI / (eps * eps)).epsilon(1e-12));
  const EntropyEstimate two = entropy_free_case([](double) { return std::vector<double>{1.0, 1.0}; }, 1.0);
  CHECK(two.integral_value == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(entropy_free_case([](double) { return std::vector<double>{1.0, 0.0}; }, 1.0), DomainError);

  // r = 1 with weight lambda(t) against the contact formula with chi = 2 lambda
  auto lam = [](double t) { return 1.0 + 0.5 * std::sin(3.0 * t); };
  const EntropyEstimate fr = entropy_free_case([&](double t) { return std::vector<double>{lam(t)}; }, 2.0);
  const EntropyEstimate via = entropy_from_mc(mc_contact([&](double t) { return 2.0 * lam(t); }, 2.0));
  CHECK(std::abs(fr.value(eps) / via.value(eps) - 1.0) <= 1e-9);
}

TEST_CASE("4-2 and 5-2 formula") {
  const EntropyEstimate e = entropy_42_52([](double) { return 1.0; }, 1.0);
  CHECK(e.exponent == 3);
  CHECK(e.value(1.0) == doctest::Approx(258.485).epsilon(1e-5));
  CHECK(e.value(1.0) == doctest::Approx(1.5 / kSigma42).epsilon(1e-14));
  CHECK(entropy_42_52([](double) { return 2.0; }, 1.0).value(1.0) == doctest::Approx(0.5 * e.value(1.0)));
  CHECK_THROWS_AS(entropy_42_52([](double t) { return t - 0.3; }, 1.0), SingularInvariant);
}

TEST_CASE("6-2 formula") {
  const double sigma = load_dance(default_dance_path()).sigma62;
  const EntropyEstimate e = entropy_62([](double) { return 1.0; }, 1.0, sigma);
  CHECK(e.exponent == 4);
  CHECK(e.value(0.5) == doctest::Approx(sigma * 16.0).epsilon(1e-14));
  // w -> c w with delta -> c delta leaves int dw / delta unchanged
  const double c = 3.7;
  auto delta = [](double w) { return 1.0 + 0.3 * std::cos(w); };
  const EntropyEstimate a = entropy_62(delta, 2.0, sigma);
  const EntropyEstimate b = entropy_62([&](double w) { return c * delta(w / c); }, 2.0 * c, sigma);
  CHECK(std::abs(a.value(0.2) - b.value(0.2)) <= 1e-12 * a.value(0.2));
  CHECK_THROWS_AS(entropy_62([](double) { return 1.0; }, 1.0, 0.0), DomainError);
  // short intervals, as used by the 6-2 benchmarks
  CHECK(entropy_62([](double) { return 1.0; }, 1e-4, sigma).integral_value == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(entropy_42_52([](double) { return 2.0; }, 1e-6).integral_value == doctest::Approx(5e-7).epsilon(1e-12));
}

TEST_CASE("homogeneity and quadrature stability") {
  auto chi = [](double t) { return 2.0 + std::sin(t); };
  const std::vector<EntropyEstimate> all = {
      mc_contact(chi, 1.0), entropy_42_52(chi, 1.0), entropy_62(chi, 1.0, 1846.5),
      entropy_free_case([](double t) { return std::vector<double>{1.0 + t, 2.0}; }, 1.0)};
  for (const EntropyEstimate& e : all) CHECK(e.value(0.05) / e.value(0.1) == doctest::Approx(std::pow(2.0, e.exponent)));
  const EntropyEstimate lg = entropy_log({1.0}, 3);
  CHECK(lg.value(0.05) / lg.value(0.1) == doctest::Approx(8.0 * std::log(0.05) / std::log(0.1)));

  CHECK(std::abs(mc_contact(chi, 1.0, {}, 1e-10).integral_value - mc_contact(chi, 1.0, {}, 5e-11).integral_value) < 1e-8);
  CHECK(std::abs(entropy_42_52(chi, 1.0, 1e-10).integral_value - entropy_42_52(chi, 1.0, 5e-11).integral_value) < 1e-8);
}

TEST_CASE("realized entropy") {
  const ControlFrame f = make_nilpotent(contact_model());
  ControlSignal line{2, 1.0, [](double) { return Vec((Vec(2) << 1.0, 0.0).finished()); }};
  const Trajectory a = integrate(f, line, Vec::Zero(3), 0.01);
  CHECK(measure_realized_entropy(a, 0.1) == doctest::Approx(10.0).epsilon(1e-12));
  const Trajectory b = integrate(f, circle_controls(0.7).controls, a.back(), 0.001);
  Trajectory ab = a;
  ab.append(b);
  CHECK(measure_realized_entropy(ab, 0.1) ==
        doctest::Approx(measure_realized_entropy(a, 0.1) + measure_realized_entropy(b, 0.1)).epsilon(1e-12));
  CHECK_THROWS_AS(measure_realized_entropy(a, 0.0), DomainError);
}

TEST_CASE("estimate json round trip") {
  const EntropyEstimate e = entropy_from_mc(mc_contact([](double t) { return 1.0 + t; }, 1.0));
  const EntropyEstimate r = entropy_from_json(to_json(e));
  CHECK(r.coefficient == e.coefficient);
  CHECK(r.exponent == e.exponent);
  CHECK(r.logarithmic == e.logarithmic);
  CHECK(r.integral_value == e.integral_value);
  CHECK(r.formula_id == e.formula_id);
  CHECK(r.from_mc);
  CHECK_THROWS_AS(entropy_from_json("{\"coefficient\": 1"), InvalidInput);
}
