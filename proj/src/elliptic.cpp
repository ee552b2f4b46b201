#include "nhmp/elliptic.hpp"

#include <array>
#include <cmath>

#include "nhmp/errors.hpp"

namespace nhmp::elliptic {

Modulus::Modulus(double k_) : k(k_), k2(k_ * k_) {
  if (!(k_ >= 0.0 && k_ < 1.0)) throw DomainError("elliptic modulus must satisfy 0 <= k < 1");
}

namespace {

constexpr int kMaxLevels = 40;

// Descending AGM sequence a_n, c_n with a_0 = 1, b_0 = k', c_0 = k.
struct Agm {
  std::array<double, kMaxLevels + 1> a{}, c{};
  int N = 0;

  explicit Agm(const Modulus& m) {
    double an = 1.0, bn = std::sqrt((1.0 - m.k) * (1.0 + m.k));
    a[0] = an;
    c[0] = m.k;
    int n = 0;
    while (std::abs(an - bn) >= 1e-15 * an && n < kMaxLevels) {
      const double a1 = 0.5 * (an + bn);
      const double b1 = std::sqrt(an * bn);
      ++n;
      c[n] = 0.5 * (an - bn);
      a[n] = a1;
      an = a1;
      bn = b1;
    }
    N = n;
  }

  double K() const { return M_PI / (2.0 * a[N]); }

  // Phases phi_N .. phi_0 of the backward recursion for argument u.
  std::array<double, kMaxLevels + 1> phases(double u) const {
    std::array<double, kMaxLevels + 1> phi{};
    phi[N] = std::ldexp(a[N] * u, N);
    for (int n = N; n > 0; --n) phi[n - 1] = 0.5 * (phi[n] + std::asin(c[n] / a[n] * std::sin(phi[n])));
    return phi;
  }
};

}  // namespace

double complete_K(const Modulus& m) { return Agm(m).K(); }

double complete_E(const Modulus& m) {
  const Agm g(m);
  double s = 0.5 * g.c[0] * g.c[0];
  for (int n = 1; n <= g.N; ++n) s += std::ldexp(g.c[n] * g.c[n], n - 1);
  return g.K() * (1.0 - s);
}

double jacobi_am(double u, const Modulus& m) {
  if (!std::isfinite(u)) throw DomainError("jacobi_am: non-finite argument");
  const Agm g(m);
  return g.phases(u)[0];
}

SnCnDn jacobi_sn_cn_dn(double u, const Modulus& m) {
  if (!std::isfinite(u)) throw DomainError("jacobi_sn_cn_dn: non-finite argument");
  const Agm g(m);
  if (g.N == 0) return {std::sin(u), std::cos(u), 1.0};
  const auto phi = g.phases(u);
  const double sn = std::sin(phi[0]);
  const double cn = std::cos(phi[0]);
  // dn = sqrt(1 - k^2 sn^2) is positive for k < 1; the product form loses
  // accuracy when cos(phi1 - phi0) is tiny, so use the identity directly.
  const double dn = std::sqrt(std::max(0.0, 1.0 - m.k2 * sn * sn));
  return {sn, cn, dn};
}

double jacobi_epsilon(double u, const Modulus& m) {
  if (!std::isfinite(u)) throw DomainError("jacobi_epsilon: non-finite argument");
  const Agm g(m);
  if (g.N == 0) return u;
  const auto phi = g.phases(u);
  // E(u) = u E/K + Z(u), Jacobi zeta from the same AGM phases.
  double zeta = 0.0;
  for (int n = 1; n <= g.N; ++n) zeta += g.c[n] * std::sin(phi[n]);
  double s = 0.5 * g.c[0] * g.c[0];
  for (int n = 1; n <= g.N; ++n) s += std::ldexp(g.c[n] * g.c[n], n - 1);
  return u * (1.0 - s) + zeta;
}

}  // namespace nhmp::elliptic
