#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nhmp/geometry.hpp"

namespace nhmp {

/// sigma of the 4-2 / 5-2 entropy formula.
inline constexpr double kSigma42 = 0.00580305;

/// E(eps) = coefficient * (logarithmic ? -ln(eps) : 1) / eps^exponent.
struct EntropyEstimate {
  double coefficient = 0.0;
  int exponent = 2;
  bool logarithmic = false;
  double integral_value = 0.0;  // the integral (or sum) entering the formula
  std::string formula_id;       // "mc-contact", "entropy-2pi-mc", "log", "free", "42-52", "62"
  bool from_mc = false;         // produced by entropy_from_mc

  double value(double eps) const;
};

using ScalarFunction = std::function<double(double)>;

/// MC(eps) ~ (2 / eps^2) int_0^T dt / chi(t). chi may blow up (tangency) at
/// the listed parameters, where the interval is split. Throws
/// SingularInvariant when chi vanishes on [0, T] (use entropy_log).
EntropyEstimate mc_contact(const ScalarFunction& chi, double T, const std::vector<double>& tangency = {},
                           double tol = 1e-12);

/// E = 2 pi MC for the one-step case. Throws ContractError for any other
/// input, including an estimate already converted.
EntropyEstimate entropy_from_mc(const EntropyEstimate& mc);

/// E ~ -2 (ln eps / eps^p) sum 1 / rho_i. Throws ContractError for an empty
/// list and DomainError for rho <= 0.
EntropyEstimate entropy_log(const std::vector<double>& rho, int p);

/// E ~ (2 pi / eps^2) int_0^T (sum_j j l_j / sum_j l_j^2) dtheta for the free case.
EntropyEstimate entropy_free_case(const std::function<std::vector<double>(double)>& weights, double T,
                                  double tol = 1e-12);

/// E = (3 / (2 sigma eps^3)) int_0^T dt / delta(t), sigma = kSigma42.
EntropyEstimate entropy_42_52(const ScalarFunction& delta, double T, double tol = 1e-12);

/// E = (sigma62 / eps^4) int_0^T dw / delta(w).
EntropyEstimate entropy_62(const ScalarFunction& delta, double T, double sigma62, double tol = 1e-12);

/// Realized interpolation entropy: arclength / eps.
double measure_realized_entropy(const Trajectory& traj, double eps);

std::string to_json(const EntropyEstimate& e);
EntropyEstimate entropy_from_json(const std::string& text);

}  // namespace nhmp
