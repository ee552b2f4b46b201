#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nhmp/geometry.hpp"

namespace nhmp {

enum class SystemKind { Unicycle, CarTrailer, BallPlate, BallTrailer };

struct SystemSpec {
  SystemKind kind = SystemKind::Unicycle;
  double L = 1.0;  // trailer length, BallTrailer only
};

/// Benchmark systems with analytic Jacobians.
///  - Unicycle     (x, y, theta)
///  - CarTrailer   (x, y, theta, phi)
///  - BallPlate    (x, y, R00..R22)
///  - BallTrailer  (x, y, R00..R22, theta)
ControlFrame make_system(const SystemSpec& spec);

SystemKind parse_system_kind(const std::string& name);
std::string to_string(SystemKind kind);

enum class Family { Contact, OneStepFree, FourTwo, FiveTwo, SixTwo };

Family parse_family(const std::string& name);
std::string to_string(Family family);

using ScalarFn = std::function<double(double)>;
using QuadFn = std::function<Eigen::Matrix2d(double)>;

/// Explicit polynomial normal form. Every non-x row is m_j(state) * a with
/// a = (x2 u1 - x1 u2) / 2, except for OneStepFree where each pair (i<j)
/// contributes (x_j u_i - x_i u_j) / 2.
struct NilpotentModel {
  Family family = Family::Contact;
  int p = 2;                   // OneStepFree only
  ScalarFn delta;              // main invariant; empty means 1
  QuadFn Q;                    // SixTwo only; empty means delta(w) * I
  double w_min = -1e3;         // interval on which delta must not vanish
  double w_max = 1e3;

  int dim() const;
  /// Weights of the state coordinates under the dilation (x,y,z,w) -> (e x, e^2 y, ...).
  std::vector<int> weights() const;
  std::vector<std::string> coordinate_names() const;
  double delta_at(double w) const { return delta ? delta(w) : 1.0; }
  Eigen::Matrix2d Q_at(double w) const;
};

NilpotentModel contact_model(double scale = 1.0);
NilpotentModel one_step_free(int p);
NilpotentModel four_two(ScalarFn delta = {});
NilpotentModel five_two(ScalarFn delta = {});
/// Q_w = delta(w) I, the ball-with-trailer instantiation when Q is empty.
NilpotentModel six_two(ScalarFn delta = {}, QuadFn Q = {});

/// Frame of the model. Throws SingularInvariant when delta vanishes on
/// [w_min, w_max] (sampled) and InvalidInput for bad parameters.
ControlFrame make_nilpotent(const NilpotentModel& model);

/// Magnitudes of the remainder terms added by make_perturbed.
struct Magnitudes {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;
  double w = 1.0;
};

/// The model plus random polynomial remainders of the orders allowed by the
/// normal form: x rows get beta * (x2^2 u1 - x1 x2 u2, x1^2 u2 - x1 x2 u1),
/// the other rows rho_j * a, with beta, rho_j random weighted-homogeneous
/// polynomials. Contact/OneStepFree use the two-step orders.
ControlFrame make_perturbed(const NilpotentModel& base, const Magnitudes& mags, std::uint64_t seed);

/// Weighted degree of the remainder polynomial multiplying a in row j
/// (row index in state order); the x rows report the degree of beta.
int remainder_degree(const NilpotentModel& base, int row);

/// Flat key = value configuration file ('#' comments). Keys are returned
/// verbatim; values keep inner whitespace.
std::map<std::string, std::string> read_config(const std::string& path);

/// Weighted dilation of a state: coordinate i is multiplied by s^weights[i].
Vec dilate(const Vec& x, const std::vector<int>& weights, double s);

}  // namespace nhmp
