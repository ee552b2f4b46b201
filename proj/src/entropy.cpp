#include "nhmp/entropy.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "nhmp/errors.hpp"

namespace nhmp {

double EntropyEstimate::value(double eps) const {
  if (!(eps > 0.0)) throw DomainError("EntropyEstimate::value: eps must be positive");
  const double v = coefficient / std::pow(eps, exponent);
  return logarithmic ? -std::log(eps) * v : v;
}

namespace {

// Adaptive Gauss-Kronrod over [a, b] split at the given interior points.
double integrate(const ScalarFunction& f, double a, double b, std::vector<double> splits, double tol) {
  std::vector<double> pts{a};
  std::sort(splits.begin(), splits.end());
  for (double s : splits)
    if (s > a && s < b) pts.push_back(s);
  pts.push_back(b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    // on [0, 1] so that the absolute rounding floor of the error estimate does
    // not depend on the interval length
    const double lo = pts[i], h = pts[i + 1] - pts[i];
    double err = 0.0;
    const double v = h * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                             [&](double u) { return f(lo + h * u); }, 0.0, 1.0, 25, tol, &err);
    if (!std::isfinite(v) || h * err > std::max(1e3 * tol, 1e-8) * (h + std::abs(v)))
      throw NumericFailure("quadrature did not converge on [" + std::to_string(pts[i]) + ", " +
                           std::to_string(pts[i + 1]) + "]");
    total += v;
  }
  return total;
}

void check_interval(double T, const char* who) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError(std::string(who) + ": T must be positive");
}

// Samples f on a grid and on the quadrature nodes' neighbourhood to detect zeros.
void require_nonvanishing(const ScalarFunction& f, double T, const std::vector<double>& allowed_inf,
                          const std::string& who, const std::string& advice) {
  const int n = 2000;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i <= n; ++i) {
    const double t = T * i / n;
    bool skip = false;
    for (double s : allowed_inf) skip = skip || std::abs(t - s) < 1e-12 * (1.0 + T);
    if (skip) continue;
    const double v = f(t);
    if (std::isnan(v)) throw NumericFailure(who + ": invariant is NaN at t = " + std::to_string(t));
    if (v == 0.0 || (!std::isnan(prev) && (v > 0) != (prev > 0)))
      throw SingularInvariant(who + ": invariant vanishes near t = " + std::to_string(t) + "; " + advice);
    prev = v;
  }
}

}  // namespace

EntropyEstimate mc_contact(const ScalarFunction& chi, double T, const std::vector<double>& tangency, double tol) {
  check_interval(T, "mc_contact");
  require_nonvanishing(chi, T, tangency, "mc_contact", "use entropy_log with the crossing slopes");
  const double I = integrate(
      [&](double t) {
        const double c = chi(t);
        if (std::isinf(c)) return 0.0;
        return 1.0 / std::abs(c);
      },
      0.0, T, tangency, tol);
  EntropyEstimate e;
  e.coefficient = 2.0 * I;
  e.exponent = 2;
  e.integral_value = I;
  e.formula_id = "mc-contact";
  return e;
}

EntropyEstimate entropy_from_mc(const EntropyEstimate& mc) {
  if (mc.from_mc || mc.formula_id == "entropy-2pi-mc")
    throw ContractError("entropy_from_mc: estimate is already an entropy (2 pi applied once)");
  if (mc.formula_id != "mc-contact" || mc.exponent != 2 || mc.logarithmic)
    throw ContractError("entropy_from_mc: needs a one-step metric complexity estimate, got '" + mc.formula_id +
                        "'");
  EntropyEstimate e = mc;
  e.coefficient = 2.0 * M_PI * mc.coefficient;
  e.formula_id = "entropy-2pi-mc";
  e.from_mc = true;
  return e;
}

EntropyEstimate entropy_log(const std::vector<double>& rho, int p) {
  if (rho.empty()) throw ContractError("entropy_log: no singular points; use the regular formula");
  if (p < 2 || p > 4) throw DomainError("entropy_log: exponent must be 2, 3 or 4");
  double s = 0.0;
  for (double r : rho) {
    if (!(r > 0.0)) throw DomainError("entropy_log: rho values must be positive");
    s += 1.0 / r;
  }
  EntropyEstimate e;
  e.coefficient = 2.0 * s;
  e.exponent = p;
  e.logarithmic = true;
  e.integral_value = s;
  e.formula_id = "log";
  return e;
}

EntropyEstimate entropy_free_case(const std::function<std::vector<double>(double)>& weights, double T, double tol) {
  check_interval(T, "entropy_free_case");
  auto integrand = [&](double th) {
    const std::vector<double> l = weights(th);
    if (l.empty()) throw InvalidInput("entropy_free_case: empty weight list");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < l.size(); ++j) {
      if (!(l[j] > 0.0)) throw DomainError("entropy_free_case: weights must be positive");
      num += static_cast<double>(j + 1) * l[j];
      den += l[j] * l[j];
    }
    return num / den;
  };
  const double I = integrate(integrand, 0.0, T, {}, tol);
  EntropyEstimate e;
  e.coefficient = 2.0 * M_PI * I;
  e.exponent = 2;
  e.integral_value = I;
  e.formula_id = "free";
  return e;
}

EntropyEstimate entropy_42_52(const ScalarFunction& delta, double T, double tol) {
  check_interval(T, "entropy_42_52");
  require_nonvanishing(delta, T, {}, "entropy_42_52", "use entropy_log (logarithmic case)");
  const double I = integrate([&](double t) { return 1.0 / std::abs(delta(t)); }, 0.0, T, {}, tol);
  EntropyEstimate e;
  e.coefficient = 3.0 / (2.0 * kSigma42) * I;
  e.exponent = 3;
  e.integral_value = I;
  e.formula_id = "42-52";
  return e;
}

EntropyEstimate entropy_62(const ScalarFunction& delta, double T, double sigma62, double tol) {
  check_interval(T, "entropy_62");
  if (!(sigma62 > 0.0)) throw DomainError("entropy_62: sigma62 must be positive");
  require_nonvanishing(delta, T, {}, "entropy_62", "use entropy_log (logarithmic case)");
  const double I = integrate([&](double w) { return 1.0 / std::abs(delta(w)); }, 0.0, T, {}, tol);
  EntropyEstimate e;
  e.coefficient = sigma62 * I;
  e.exponent = 4;
  e.integral_value = I;
  e.formula_id = "62";
  return e;
}

double measure_realized_entropy(const Trajectory& traj, double eps) {
  if (!(eps > 0.0)) throw DomainError("measure_realized_entropy: eps must be positive");
  return traj.length() / eps;
}

std::string to_json(const EntropyEstimate& e) {
  nlohmann::ordered_json j;
  j["formula_id"] = e.formula_id;
  j["coefficient"] = e.coefficient;
  j["exponent"] = e.exponent;
  j["logarithmic"] = e.logarithmic;
  j["integral_value"] = e.integral_value;
  j["from_mc"] = e.from_mc;
  return j.dump();
}

EntropyEstimate entropy_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    EntropyEstimate e;
    e.formula_id = j.at("formula_id").get<std::string>();
    e.coefficient = j.at("coefficient").get<double>();
    e.exponent = j.at("exponent").get<int>();
    e.logarithmic = j.at("logarithmic").get<bool>();
    e.integral_value = j.at("integral_value").get<double>();
    e.from_mc = j.value("from_mc", false);
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("entropy_from_json: ") + ex.what());
  }
}

}  // namespace nhmp
