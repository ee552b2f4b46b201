#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nhmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Smooth vector field on R^n. `jacobian` is optional; when empty, derivatives
/// are taken by central differences.
struct VectorField {
  int dim = 0;
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> jacobian;
  /// Bracket nesting depth: 1 for frame fields, |w| for a bracket word w.
  int depth = 1;

  Vec operator()(const Vec& x) const { return eval(x); }
  bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

/// Nine consecutive state entries holding a row-major 3x3 rotation matrix R
/// that evolves as dR/dt = (sum_i u_i G_i) R.
struct RotationBlock {
  int offset = 0;
  std::vector<Eigen::Matrix3d> generators;
};

/// Orthonormal frame F_1..F_p of a driftless control system x' = sum F_i(x) u_i.
struct ControlFrame {
  std::string name;
  int dim = 0;
  std::vector<VectorField> fields;
  std::optional<RotationBlock> rotation;

  int rank() const { return static_cast<int>(fields.size()); }
  Vec velocity(const Vec& x, const Vec& u) const;

  /// Dimension of the state manifold: rotation blocks count for 3, not 9.
  int intrinsic_dim() const { return rotation ? dim - 6 : dim; }
  /// Maps a tangent vector at x to intrinsic coordinates: plain entries are
  /// kept, a rotation-block tangent V is replaced by the axial vector of V R^T.
  Vec intrinsic(const Vec& x, const Vec& v) const;

  /// Throws InvalidInput when x has the wrong size.
  void check_state(const Vec& x) const;
};

/// Rotation matrix stored at `offset` of x.
Eigen::Matrix3d rotation_at(const Vec& x, int offset);
void set_rotation(Vec& x, int offset, const Eigen::Matrix3d& R);
Eigen::Matrix3d hat(const Eigen::Vector3d& w);
Eigen::Vector3d vee(const Eigen::Matrix3d& skew);
/// Exponential of a skew-symmetric matrix (Rodrigues).
Eigen::Matrix3d exp_so3(const Eigen::Matrix3d& skew);

/// Control u(t) defined on [0, duration].
struct ControlSignal {
  int p = 0;
  double duration = 0.0;
  std::function<Vec(double)> u;
};

/// Sampled admissible curve.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<double> arclength;

  std::size_t size() const { return times.size(); }
  const Vec& back() const { return states.back(); }
  double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
  /// Appends `other`, shifting its time and arclength; the first sample of
  /// `other` is dropped when it coincides with the current endpoint.
  void append(const Trajectory& other);
};

/// Parametrized (usually non-admissible) curve Gamma: [0, T] -> R^n.
struct Curve {
  double T = 1.0;
  std::function<Vec(double)> point;
  std::function<Vec(double)> derivative;
};

/// Integrates x' = sum F_i(x) u_i(t) with fixed step (shortened so that the
/// grid ends exactly at u.duration). Plain coordinates use RK4; a rotation
/// block is advanced by the exponential of a fourth-order Magnus increment,
/// which keeps R orthogonal.
Trajectory integrate(const ControlFrame& system, const ControlSignal& u, const Vec& x0,
                     double step);
/// Same scheme, endpoint only.
Vec integrate_endpoint(const ControlFrame& system, const ControlSignal& u, const Vec& x0,
                       double step);

/// Lie bracket [X, Y](at) = DX(at) Y(at) - DY(at) X(at).
/// Analytic Jacobians are used when present; otherwise central differences
/// with step h (1 + |at|), scaled up with the field's nesting depth, and one
/// Richardson extrapolation level.
Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& at, double h = 1e-4);

/// The field at -> [X, Y](at) as a closure.
VectorField bracket_field(VectorField X, VectorField Y, double h = 1e-4);

/// Iterated bracket word over the frame letters 1..p, e.g. "[1,[1,2]]".
struct BracketWord {
  int letter = 0;                   // 1-based letter when leaf
  std::vector<BracketWord> parts;   // exactly two when composite

  static BracketWord leaf(int i);
  static BracketWord bracket(BracketWord a, BracketWord b);
  static BracketWord parse(const std::string& text);

  bool is_leaf() const { return parts.empty(); }
  int length() const;
  std::string to_string() const;
};

VectorField word_field(const ControlFrame& system, const BracketWord& word, double h = 1e-4);
Vec bracket_word(const ControlFrame& system, const BracketWord& word, const Vec& at,
                 double h = 1e-4);

/// Right-nested words [a1,[a2,...[a_{m-1},a_m]]] with a_{m-1} < a_m, for m = 1..max_length.
/// Their spans give the flag Delta, Delta', Delta'', ...
std::vector<BracketWord> flag_words(int p, int max_length);

struct RankOptions {
  double relative_threshold = 1e-7;
  double h = 1e-4;
};

/// (dim Delta, dim Delta', ...) at a point, up to bracket length `depth`.
/// Throws AmbiguousRank when a singular value lies within a factor 10 of the cutoff.
std::vector<int> growth_vector(const ControlFrame& system, const Vec& at, int depth,
                               const RankOptions& opts = {});

/// Numeric rank with the same ambiguity rule as growth_vector.
int numeric_rank(const Mat& columns, double relative_threshold);

}  // namespace nhmp
