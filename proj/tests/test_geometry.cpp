#include <cmath>
#include <random>

#include "doctest.h"
#include "nhmp/errors.hpp"
#include "nhmp/geometry.hpp"
#include "nhmp/models.hpp"
#include "test_util.hpp"

using namespace nhmp;

TEST_CASE("unicycle straight and rotation endpoints") {
  const ControlFrame uni = make_system({SystemKind::Unicycle});
  const Vec x0 = Vec::Zero(3);
  ControlSignal straight{2, 1.0, [](double) { return Vec((Vec(2) << 1, 0).finished()); }};
  const Trajectory tr = integrate(uni, straight, x0, 1e-2);
  CHECK(tr.back()[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(tr.back()[1]) < 1e-14);
  CHECK(tr.length() == doctest::Approx(1.0));

  ControlSignal turn{2, M_PI / 2, [](double) { return Vec((Vec(2) << 0, 1).finished()); }};
  const Vec e = integrate_endpoint(uni, turn, x0, 1e-2);
  CHECK(e.head<2>().norm() < 1e-14);
  CHECK(e[2] == doctest::Approx(M_PI / 2).epsilon(1e-14));
}

TEST_CASE("integrate rejects bad input") {
  const ControlFrame uni = make_system({SystemKind::Unicycle});
  ControlSignal u{2, 1.0, [](double) { return Vec(Vec::Zero(2)); }};
  CHECK_THROWS_AS(integrate(uni, u, Vec::Zero(4), 1e-2), InvalidInput);
  CHECK_THROWS_AS(integrate(uni, u, Vec::Zero(3), 0.0), InvalidInput);
  ControlSignal bad{2, 1.0, [](double t) {
                      return Vec((Vec(2) << (t > 0.5 ? NAN : 1.0), 0).finished());
                    }};
  try {
    integrate(uni, bad, Vec::Zero(3), 0.1);
    FAIL("expected divergence");
  } catch (const IntegrationDiverged& e) {
    CHECK(e.last_valid_time() >= 0.3);
    CHECK(e.last_valid_time() <= 0.5);
  }
}

TEST_CASE("ball on plane rotation returns to identity after 2 pi") {
  const ControlFrame ball = make_system({SystemKind::BallPlate});
  Vec x0 = Vec::Zero(11);
  set_rotation(x0, 2, Eigen::Matrix3d::Identity());
  ControlSignal u{2, 2 * M_PI, [](double) { return Vec((Vec(2) << 1, 0).finished()); }};
  const Trajectory tr = integrate(ball, u, x0, 1e-3);
  // closed form: R(t) = exp(t G1)
  const Eigen::Matrix3d G1 = ball.rotation->generators[0];
  for (std::size_t i = 0; i < tr.size(); i += 500) {
    const Eigen::Matrix3d oracle = Eigen::AngleAxisd(tr.times[i], vee(G1).normalized()).toRotationMatrix();
    CHECK((rotation_at(tr.states[i], 2) - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK((rotation_at(tr.back(), 2) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rotation stays orthogonal over long runs") {
  const ControlFrame bt = make_system({SystemKind::BallTrailer, 1.0});
  Vec x0 = Vec::Zero(12);
  set_rotation(x0, 2, Eigen::Matrix3d::Identity());
  ControlSignal u{2, 100.0, [](double t) {
                    return Vec((Vec(2) << std::cos(3 * t + std::sin(t)), std::sin(3 * t + std::sin(t))).finished());
                  }};
  const Vec e = integrate_endpoint(bt, u, x0, 1e-3);
  const Eigen::Matrix3d R = rotation_at(e, 2);
  CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("RK4 order on the unicycle circle") {
  const ControlFrame uni = make_system({SystemKind::Unicycle});
  ControlSignal u{2, 2.0, [](double t) { return Vec((Vec(2) << 1.0, 1.0 + 0.5 * t).finished()); }};
  // theta = t + t^2/4; reference by a much finer grid
  const Vec ref = integrate_endpoint(uni, u, Vec::Zero(3), 1e-4);
  std::vector<double> hs{0.2, 0.1, 0.05, 0.025}, errs;
  for (double h : hs) errs.push_back((integrate_endpoint(uni, u, Vec::Zero(3), h) - ref).norm());
  const double slope = test::loglog_slope(hs, errs);
  CHECK(slope == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("brackets of constant fields vanish and unicycle bracket") {
  VectorField X{2, [](const Vec&) { return Vec((Vec(2) << 1, 0).finished()); }};
  VectorField Y{2, [](const Vec&) { return Vec((Vec(2) << 0, 1).finished()); }};
  CHECK(lie_bracket(X, Y, Vec::Zero(2)).norm() < 1e-12);

  const ControlFrame uni = make_system({SystemKind::Unicycle});
  for (double th : {0.0, 0.7, -2.0}) {
    const Vec at = (Vec(3) << 0.3, -0.1, th).finished();
    const Vec b = lie_bracket(uni.fields[0], uni.fields[1], at);
    // DF1 F2 - DF2 F1 = (-sin th, cos th, 0)
    CHECK(b[0] == doctest::Approx(-std::sin(th)).epsilon(1e-12));
    CHECK(b[1] == doctest::Approx(std::cos(th)).epsilon(1e-12));
    CHECK(std::abs(b[2]) < 1e-12);
  }
  CHECK_THROWS_AS(lie_bracket(X, Y, Vec::Zero(2), 0.0), InvalidInput);
}

TEST_CASE("finite-difference Jacobians agree with analytic ones") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (auto kind : {SystemKind::Unicycle, SystemKind::CarTrailer, SystemKind::BallPlate, SystemKind::BallTrailer}) {
    const ControlFrame f = make_system({kind, 1.3});
    for (int trial = 0; trial < 5; ++trial) {
      const Vec x = test::random_state(f, gen);
      for (const auto& F : f.fields) {
        const Mat J = F.jacobian(x);
        const double h = 1e-5 * (1 + x.norm());
        for (int j = 0; j < f.dim; ++j) {
          const Vec e = Vec::Unit(f.dim, j);
          const Vec fd = (F.eval(x + h * e) - F.eval(x - h * e)) / (2 * h);
          CHECK((fd - J.col(j)).norm() <= 1e-6 * (1 + J.col(j).norm()));
        }
      }
    }
  }
}

TEST_CASE("bracket words parse and evaluate") {
  const BracketWord w = BracketWord::parse("[1,[1,2]]");
  CHECK(w.length() == 3);
  CHECK(w.to_string() == "[1,[1,2]]");
  CHECK_THROWS_AS(BracketWord::parse("[1,2"), InvalidInput);
  const ControlFrame uni = make_system({SystemKind::Unicycle});
  CHECK_THROWS_AS(bracket_word(uni, BracketWord::parse("[1,3]"), Vec::Zero(3)), InvalidInput);
  const Vec f1 = bracket_word(uni, BracketWord::leaf(1), Vec::Zero(3));
  CHECK((f1 - uni.fields[0].eval(Vec::Zero(3))).norm() == 0.0);
  CHECK(flag_words(2, 3).size() == 5);
}

TEST_CASE("growth vectors of the benchmark systems") {
  using V = std::vector<int>;
  CHECK(growth_vector(make_system({SystemKind::Unicycle}), Vec::Zero(3), 2) == V{2, 3});
  Vec ct = Vec::Zero(4);
  ct[2] = M_PI / 2;
  CHECK(growth_vector(make_system({SystemKind::CarTrailer}), ct, 3) == V{2, 3, 4});
  Vec bp = Vec::Zero(11);
  set_rotation(bp, 2, Eigen::Matrix3d::Identity());
  CHECK(growth_vector(make_system({SystemKind::BallPlate}), bp, 3) == V{2, 3, 5});
  std::mt19937_64 gen(3);
  const ControlFrame bt = make_system({SystemKind::BallTrailer, 1.0});
  for (int i = 0; i < 3; ++i)
    CHECK(growth_vector(bt, test::random_state(bt, gen), 4) == V{2, 3, 5, 6});
}

TEST_CASE("ambiguous rank is reported") {
  Mat M(2, 2);
  M << 1, 0, 0, 1e-7;
  CHECK_THROWS_AS(numeric_rank(M, 1e-7), AmbiguousRank);
  M(1, 1) = 1e-3;
  CHECK(numeric_rank(M, 1e-7) == 2);
  M(1, 1) = 1e-12;
  CHECK(numeric_rank(M, 1e-7) == 1);
}

TEST_CASE("Jacobi identity for the ball with a trailer") {
  const ControlFrame bt = make_system({SystemKind::BallTrailer, 1.0});
  std::mt19937_64 gen(11);
  const VectorField& F1 = bt.fields[0];
  const VectorField& F2 = bt.fields[1];
  const VectorField H = bracket_field(F1, F2);
  const VectorField a = bracket_field(F1, bracket_field(F2, H));
  const VectorField b = bracket_field(F2, bracket_field(H, F1));
  const VectorField c = bracket_field(H, bracket_field(F1, F2));
  for (int i = 0; i < 10; ++i) {
    const Vec x = test::random_state(bt, gen);
    CHECK((a.eval(x) + b.eval(x) + c.eval(x)).norm() <= 1e-5);
  }
}
