#include "nhmp/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nhmp/errors.hpp"

namespace nhmp {

Vec annihilator_form(const ControlFrame& system, const Vec& at, int level, const Vec* transversal,
                     const RankOptions& opts) {
  if (level < 1) throw InvalidInput("annihilator_form: level must be >= 1");
  system.check_state(at);
  const int n = system.intrinsic_dim();
  const auto words = flag_words(system.rank(), level);
  Mat M(n, static_cast<Eigen::Index>(words.size()));
  for (std::size_t j = 0; j < words.size(); ++j)
    M.col(static_cast<Eigen::Index>(j)) = system.intrinsic(at, bracket_word(system, words[j], at, opts.h));
  const int rank = numeric_rank(M, opts.relative_threshold);
  if (n - rank != 1)
    throw NotCorankOne("annihilator_form: flag level " + std::to_string(level) + " has codimension " +
                       std::to_string(n - rank) + ", expected 1");
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU);
  Vec omega = svd.matrixU().col(n - 1);
  double s = 0.0;
  if (transversal) {
    if (transversal->size() != n) throw InvalidInput("annihilator_form: transversal has wrong size");
    s = omega.dot(*transversal);
  }
  if (s == 0.0) {
    Eigen::Index idx;
    omega.cwiseAbs().maxCoeff(&idx);
    s = omega[idx];
  }
  if (s < 0) omega = -omega;
  return omega;
}

CurvatureMatrix curvature_matrix_A(const ControlFrame& system, const Vec& at, double h) {
  if (system.rank() != 2) throw InvalidInput("curvature_matrix_A: needs a rank-2 frame");
  RankOptions opts;
  opts.h = h;
  const Vec omega = annihilator_form(system, at, 3, nullptr, opts);
  const VectorField& F1 = system.fields[0];
  const VectorField& F2 = system.fields[1];
  const VectorField H = bracket_field(F1, F2, h);
  const VectorField I = bracket_field(F1, H, h);
  const VectorField J = bracket_field(F2, H, h);
  auto w = [&](const VectorField& X, const VectorField& Y) {
    return omega.dot(system.intrinsic(at, lie_bracket(X, Y, at, h)));
  };
  CurvatureMatrix out;
  out.A << w(F1, I), w(F2, I), w(F1, J), w(F2, J);
  out.symmetry_defect = std::abs(out.A(0, 1) - out.A(1, 0));
  return out;
}

double eigen_ratio_r(const Eigen::Matrix2d& A) {
  const Eigen::Matrix2d S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S, Eigen::EigenvaluesOnly);
  double l1 = es.eigenvalues()[0], l2 = es.eigenvalues()[1];
  if (std::abs(l1) < 1e-10 && std::abs(l2) < 1e-10)
    throw DomainError("eigen_ratio_r: both eigenvalues vanish (degenerate matrix)");
  if (std::abs(l1) > std::abs(l2)) std::swap(l1, l2);
  return l1 / l2;
}

double chi_contact(const ControlFrame& system, const Curve& gamma, double t, double h) {
  if (system.dim != 3 || system.rank() != 2)
    throw InvalidInput("chi_contact: needs a rank-2 frame on a 3-dimensional space");
  const Vec at = gamma.point(t);
  const Vec tangent = system.intrinsic(at, gamma.derivative(t));
  RankOptions opts;
  opts.h = h;
  const Vec omega = annihilator_form(system, at, 1, &tangent, opts);
  const double s = omega.dot(tangent);
  if (std::abs(s) <= 1e-12 * (1.0 + tangent.norm())) return std::numeric_limits<double>::infinity();
  const Vec b = system.intrinsic(at, lie_bracket(system.fields[0], system.fields[1], at, h));
  return std::abs(omega.dot(b)) / std::abs(s);
}

namespace {

double spectral_norm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()[0];
}

// Nelder-Mead on R^d, d <= 2.
Vec nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, double scale) {
  const int d = static_cast<int>(x0.size());
  std::vector<Vec> s(d + 1, x0);
  std::vector<double> fs(d + 1);
  for (int i = 0; i < d; ++i) s[i + 1][i] += scale;
  for (int i = 0; i <= d; ++i) fs[i] = f(s[i]);
  for (int iter = 0; iter < 5000; ++iter) {
    std::vector<int> idx(d + 1);
    for (int i = 0; i <= d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = idx[0], worst = idx[d], second = idx[d - 1];
    double size = 0.0;
    for (int i = 0; i <= d; ++i) size = std::max(size, (s[i] - s[best]).norm());
    if (fs[worst] - fs[best] <= 1e-15 * (1.0 + std::abs(fs[best])) && size <= 1e-12 * (1.0 + s[best].norm()))
      break;
    if (size <= 1e-14 * (1.0 + s[best].norm())) break;
    Vec c = Vec::Zero(d);
    for (int i = 0; i <= d; ++i)
      if (i != worst) c += s[i];
    c /= d;
    const Vec xr = c + (c - s[worst]);
    const double fr = f(xr);
    if (fr < fs[best]) {
      const Vec xe = c + 2.0 * (c - s[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        s[worst] = xe;
        fs[worst] = fe;
      } else {
        s[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second]) {
      s[worst] = xr;
      fs[worst] = fr;
    } else {
      const bool outside = fr < fs[worst];
      const Vec xc = outside ? Vec(c + 0.5 * (xr - c)) : Vec(c + 0.5 * (s[worst] - c));
      const double fc = f(xc);
      if (fc < std::min(fr, fs[worst])) {
        s[worst] = xc;
        fs[worst] = fc;
      } else {
        for (int i = 0; i <= d; ++i)
          if (i != best) {
            s[i] = s[best] + 0.5 * (s[i] - s[best]);
            fs[i] = f(s[i]);
          }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= d; ++i)
    if (fs[i] < fs[best]) best = i;
  return s[best];
}

}  // namespace

ChiResult chi_corank_le3(const std::vector<Mat>& family) {
  if (family.empty()) throw InvalidInput("chi_corank_le3: empty family");
  const int d = static_cast<int>(family.size()) - 1;
  if (d > 2) throw InvalidInput("chi_corank_le3: at most two parameters (corank <= 3)");
  const Eigen::Index p = family[0].rows();
  for (const Mat& A : family) {
    if (A.rows() != p || A.cols() != p) throw InvalidInput("chi_corank_le3: matrices must be p x p");
    if ((A + A.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + A.cwiseAbs().maxCoeff()))
      throw DomainError("chi_corank_le3: matrices must be skew-symmetric");
  }
  auto at = [&](const Vec& l) {
    Mat A = family[0];
    for (int i = 0; i < d; ++i) A += l[i] * family[i + 1];
    return A;
  };
  auto f = [&](const Vec& l) { return spectral_norm(at(l)); };

  Vec best = Vec::Zero(d);
  if (d > 0) {
    // Parameter scale: ratio of the constant term to the directions.
    double scale = 1.0;
    double dir = 0.0;
    for (int i = 1; i <= d; ++i) dir = std::max(dir, spectral_norm(family[i]));
    if (dir == 0.0) throw DomainError("chi_corank_le3: degenerate family (zero direction)");
    scale = std::max(1.0, spectral_norm(family[0])) / dir;
    std::vector<std::pair<double, Vec>> starts;
    const int g = 7;
    for (int i = 0; i < (d == 1 ? g : g * g); ++i) {
      Vec l(d);
      l[0] = scale * (-3.0 + 6.0 * (i % g) / (g - 1));
      if (d == 2) l[1] = scale * (-3.0 + 6.0 * (i / g) / (g - 1));
      starts.emplace_back(f(l), l);
    }
    std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double fbest = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 3; ++s) {
      Vec l = nelder_mead(f, starts[s].second, 0.5 * scale);
      l = nelder_mead(f, l, 0.01 * scale);  // restart from the converged point
      const double v = f(l);
      if (v < fbest) {
        fbest = v;
        best = l;
      }
    }
    if (best.norm() > 1e6)
      throw DomainError("chi_corank_le3: infimum escapes to infinity (degenerate family)");
  }
  ChiResult out;
  out.lambda_star = best;
  const Mat A = at(best);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  out.chi = svd.singularValues()[0];
  out.principal_plane = svd.matrixV().leftCols(std::min<Eigen::Index>(2, p));
  if (p >= 2) {
    // Orthonormalize the pair explicitly (degenerate singular values may mix).
    Eigen::HouseholderQR<Mat> qr(out.principal_plane);
    out.principal_plane = qr.householderQ() * Mat::Identity(p, 2);
  }
  return out;
}

std::vector<ZeroCrossing> find_chi_zeros(const std::vector<double>& t, const std::vector<double>& chi, double tol) {
  if (t.size() != chi.size()) throw InvalidInput("find_chi_zeros: size mismatch");
  std::vector<ZeroCrossing> out;
  const std::size_t n = t.size();
  if (n < 2) return out;
  double mx = 0.0;
  for (double c : chi) mx = std::max(mx, std::abs(c));
  if (mx == 0.0) return out;
  bool nonneg = true;
  for (double c : chi) nonneg = nonneg && c >= 0.0;

  if (!nonneg) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (chi[i] == 0.0 && i > 0 && i + 1 < n) {
        out.push_back({t[i], std::abs((chi[i + 1] - chi[i - 1]) / (t[i + 1] - t[i - 1]))});
      } else if (chi[i] * chi[i + 1] < 0.0) {
        const double s = (chi[i + 1] - chi[i]) / (t[i + 1] - t[i]);
        out.push_back({t[i] - chi[i] / s, std::abs(s)});
      }
    }
    return out;
  }
  for (std::size_t i = 2; i + 2 < n; ++i) {
    if (!(chi[i] <= chi[i - 1] && chi[i] <= chi[i + 1])) continue;
    const double sl = (chi[i - 1] - chi[i - 2]) / (t[i - 1] - t[i - 2]);
    const double sr = (chi[i + 2] - chi[i + 1]) / (t[i + 2] - t[i + 1]);
    if (!(sl < 0.0 && sr > 0.0)) continue;
    // Intersection of the two one-sided lines.
    const double ts = (chi[i + 1] - sr * t[i + 1] - chi[i - 1] + sl * t[i - 1]) / (sl - sr);
    const double v = chi[i - 1] + sl * (ts - t[i - 1]);
    if (std::abs(v) <= tol * mx) out.push_back({ts, 0.5 * (std::abs(sl) + std::abs(sr))});
  }
  return out;
}

}  // namespace nhmp
