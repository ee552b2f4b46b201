#include <cmath>
#include <random>

#include "doctest.h"
#include "nhmp/errors.hpp"
#include "nhmp/invariants.hpp"
#include "nhmp/models.hpp"
#include "test_util.hpp"

using namespace nhmp;

TEST_CASE("annihilator of the 6-2 model at the origin is dw") {
  const ControlFrame f = make_nilpotent(six_two());
  const Vec omega = annihilator_form(f, Vec::Zero(6), 3);
  CHECK(std::abs(std::abs(omega[5]) - 1.0) < 1e-9);
  CHECK(omega.head<5>().norm() < 1e-9);
}

TEST_CASE("annihilator of the unicycle distribution") {
  const ControlFrame uni = make_system({SystemKind::Unicycle});
  const Vec at = (Vec(3) << 0.2, 0.1, 0.8).finished();
  const Vec omega = annihilator_form(uni, at, 1);
  CHECK(std::abs(omega.dot(uni.fields[0].eval(at))) < 1e-12);
  CHECK(std::abs(omega.dot(uni.fields[1].eval(at))) < 1e-12);
  CHECK(omega.norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(annihilator_form(uni, at, 2), NotCorankOne);
}

TEST_CASE("annihilator of the ball with a trailer kills F1, F2, H, I, J") {
  const ControlFrame bt = make_system({SystemKind::BallTrailer, 1.0});
  std::mt19937_64 gen(2);
  for (int i = 0; i < 3; ++i) {
    const Vec x = test::random_state(bt, gen);
    const Vec omega = annihilator_form(bt, x, 3);
    for (const char* w : {"1", "2", "[1,2]", "[1,[1,2]]", "[2,[1,2]]"}) {
      const Vec v = bt.intrinsic(x, bracket_word(bt, BracketWord::parse(w), x));
      CHECK(std::abs(omega.dot(v)) <= 1e-6);
    }
  }
}

TEST_CASE("curvature matrix of the ball with a trailer") {
  for (double L : {0.5, 1.0, 2.0}) {
    const ControlFrame bt = make_system({SystemKind::BallTrailer, L});
    Vec x = Vec::Zero(12);
    set_rotation(x, 2, Eigen::Matrix3d::Identity());
    const CurvatureMatrix cm = curvature_matrix_A(bt, x);
    CHECK(std::abs(cm.A(0, 1)) <= 1e-5 * std::abs(cm.A(0, 0)));
    CHECK(std::abs(cm.A(1, 0)) <= 1e-5 * std::abs(cm.A(0, 0)));
    CHECK(cm.A(0, 0) == doctest::Approx(cm.A(1, 1)).epsilon(1e-5));
  }
  const ControlFrame bt = make_system({SystemKind::BallTrailer, 1.0});
  std::mt19937_64 gen(9);
  for (int i = 0; i < 10; ++i) {
    const Vec x = test::random_state(bt, gen);
    const CurvatureMatrix cm = curvature_matrix_A(bt, x);
    CHECK(cm.symmetry_defect <= 1e-5);
    CHECK(eigen_ratio_r(cm.A) == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("curvature matrix of the 6-2 model is the matrix of Q") {
  Eigen::Matrix2d Q;
  Q << 2.0, 0.5, 0.5, 1.0;
  const ControlFrame f = make_nilpotent(six_two({}, [Q](double) { return Q; }));
  const CurvatureMatrix cm = curvature_matrix_A(f, Vec::Zero(6));
  const Eigen::Matrix2d An = cm.A / cm.A.norm();
  const Eigen::Matrix2d Qn = Q / Q.norm();
  CHECK(std::min((An - Qn).norm(), (An + Qn).norm()) <= 1e-6);
  CHECK(eigen_ratio_r(cm.A) == doctest::Approx(eigen_ratio_r(Q)).epsilon(1e-6));
}

TEST_CASE("eigen ratio") {
  CHECK(eigen_ratio_r(Eigen::Matrix2d::Identity()) == 1.0);
  CHECK(eigen_ratio_r(Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix()) == 0.5);
  CHECK(eigen_ratio_r(Eigen::Vector2d(-3, 1).asDiagonal().toDenseMatrix()) == doctest::Approx(-1.0 / 3));
  CHECK_THROWS_AS(eigen_ratio_r(Eigen::Matrix2d::Zero()), DomainError);
}

TEST_CASE("gauge and scale invariance of r") {
  const ControlFrame bt = make_system({SystemKind::BallTrailer, 1.0});
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> U(-M_PI, M_PI);
  Eigen::Matrix2d Q;
  Q << 2.0, 0.3, 0.3, -1.0;
  const ControlFrame f = make_nilpotent(six_two({}, [Q](double) { return Q; }));
  const double r0 = eigen_ratio_r(curvature_matrix_A(f, Vec::Zero(6)).A);
  for (int i = 0; i < 10; ++i) {
    const double a = U(gen);
    ControlFrame g = f;
    const VectorField F1 = f.fields[0], F2 = f.fields[1];
    g.fields[0] = VectorField{6, [=](const Vec& x) { return Vec(std::cos(a) * F1.eval(x) + std::sin(a) * F2.eval(x)); }};
    g.fields[1] = VectorField{6, [=](const Vec& x) { return Vec(-std::sin(a) * F1.eval(x) + std::cos(a) * F2.eval(x)); }};
    const CurvatureMatrix cm = curvature_matrix_A(g, Vec::Zero(6));
    CHECK(std::abs(eigen_ratio_r(cm.A) - r0) <= 1e-5);
    // scaling omega scales A: r is unchanged (bitwise for power-of-two factors)
    CHECK(eigen_ratio_r(-4.0 * cm.A) == eigen_ratio_r(cm.A));
    CHECK(eigen_ratio_r(-3.7 * cm.A) == doctest::Approx(eigen_ratio_r(cm.A)).epsilon(1e-14));
  }
}

TEST_CASE("contact invariant chi") {
  const ControlFrame h = make_nilpotent(contact_model());
  Curve axis{1.0, [](double t) { return Vec((Vec(3) << 0, 0, t).finished()); },
             [](double) { return Vec((Vec(3) << 0, 0, 1).finished()); }};
  for (double t : {0.0, 0.5, 1.0}) CHECK(chi_contact(h, axis, t) == doctest::Approx(1.0).epsilon(1e-12));
  const ControlFrame hc = make_nilpotent(contact_model(2.5));
  CHECK(chi_contact(hc, axis, 0.3) == doctest::Approx(2.5).epsilon(1e-12));

  // Unicycle along (t, 0, pi/2): Delta = span{(0,1,0),(0,0,1)}, Gamma' = e_x,
  // omega = dx, [F1,F2] = (-sin th, cos th, 0) => chi = 1.
  const ControlFrame uni = make_system({SystemKind::Unicycle});
  Curve line{1.0, [](double t) { return Vec((Vec(3) << t, 0, M_PI / 2).finished()); },
             [](double) { return Vec((Vec(3) << 1, 0, 0).finished()); }};
  CHECK(std::abs(chi_contact(uni, line, 0.4) - 1.0) <= 1e-6);
  // Tangent to Delta: infinite chi.
  Curve tang{1.0, [](double t) { return Vec((Vec(3) << t, 0, 0).finished()); },
             [](double) { return Vec((Vec(3) << 1, 0, 0).finished()); }};
  CHECK(std::isinf(chi_contact(uni, tang, 0.2)));
}

TEST_CASE("corank <= 3 invariant") {
  Mat A0 = Mat::Zero(4, 4), A1 = Mat::Zero(4, 4);
  A0(0, 1) = 2;
  A0(1, 0) = -2;
  A1(2, 3) = 1;
  A1(3, 2) = -1;
  const ChiResult r0 = chi_corank_le3({A0});
  CHECK(r0.chi == doctest::Approx(2.0));
  CHECK(r0.lambda_star.size() == 0);
  const ChiResult r1 = chi_corank_le3({A0, A1});
  // brute-force oracle over lambda in [-10, 10]
  double brute = 1e300;
  for (double l = -10; l <= 10; l += 1e-3) brute = std::min(brute, std::max(2.0, std::abs(l)));
  CHECK(r1.chi == doctest::Approx(brute).epsilon(1e-9));
  CHECK(std::abs(r1.lambda_star[0]) <= 2.0);
  CHECK((r1.principal_plane.transpose() * r1.principal_plane - Eigen::Matrix2d::Identity()).norm() <= 1e-9);

  // orthogonal conjugation invariance
  std::mt19937_64 gen(8);
  std::normal_distribution<double> N;
  Mat B0 = Mat::Zero(4, 4), B1 = Mat::Zero(4, 4), B2 = Mat::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      B0(i, j) = N(gen);
      B1(i, j) = N(gen);
      B2(i, j) = N(gen);
    }
  B0 -= Mat(B0.transpose());
  B1 -= Mat(B1.transpose());
  B2 -= Mat(B2.transpose());
  Mat G(4, 4);
  for (int i = 0; i < 16; ++i) G(i) = N(gen);
  const Mat O = Eigen::HouseholderQR<Mat>(G).householderQ();
  const double c1 = chi_corank_le3({B0, B1, B2}).chi;
  const double c2 = chi_corank_le3({O * B0 * O.transpose(), O * B1 * O.transpose(), O * B2 * O.transpose()}).chi;
  CHECK(std::abs(c1 - c2) <= 1e-9);

  CHECK_THROWS_AS(chi_corank_le3({Mat::Identity(2, 2)}), DomainError);
}

TEST_CASE("zeros of chi") {
  std::vector<double> t, c, v;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(i * 0.01);
    c.push_back(t.back() - 0.503);
    v.push_back(2.0 * std::abs(t.back() - 0.503));
  }
  const auto z = find_chi_zeros(t, c);
  REQUIRE(z.size() == 1);
  CHECK(z[0].rho == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(z[0].t == doctest::Approx(0.503).epsilon(1e-9));
  const auto zv = find_chi_zeros(t, v);
  REQUIRE(zv.size() == 1);
  CHECK(zv[0].rho == doctest::Approx(2.0).epsilon(1e-9));
}
