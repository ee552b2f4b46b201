#pragma once

namespace nhmp::elliptic {

/// Modulus k with 0 <= k < 1.
struct Modulus {
  double k = 0.0;
  double k2 = 0.0;

  explicit Modulus(double k_);
};

struct SnCnDn {
  double sn, cn, dn;
};

/// Complete integral of the first kind K(k) by the arithmetic-geometric mean.
double complete_K(const Modulus& m);
/// Complete integral of the second kind E(k).
double complete_E(const Modulus& m);

/// Jacobi sn, cn, dn by the descending Landen (AGM) scheme.
SnCnDn jacobi_sn_cn_dn(double u, const Modulus& m);

/// Amplitude am(u, k).
double jacobi_am(double u, const Modulus& m);

/// Jacobi epsilon function E(u, k) = integral_0^u dn^2(v, k) dv.
double jacobi_epsilon(double u, const Modulus& m);

}  // namespace nhmp::elliptic
