#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nhmp/geometry.hpp"
#include "nhmp/models.hpp"
#include "nhmp/synthesis.hpp"

namespace nhmp {

enum class CaseTag { OneStepContact, CorankLe3, FourTwo, FiveTwo, SixTwo, Unsupported };

std::string to_string(CaseTag tag);

/// Curve Gamma on [0, gamma.T] to interpolate with the system's admissible curves.
struct MotionPlanningProblem {
  std::string name;
  ControlFrame system;
  Curve gamma;
  /// Isolated parameters where Gamma may be tangent to the distribution.
  std::vector<double> singular_params;
};

struct Classification {
  CaseTag tag = CaseTag::Unsupported;
  std::vector<double> params;
  std::vector<std::vector<int>> growth;  // per sampled parameter
  std::string diagnostic;
};

/// Case from growth vectors sampled along Gamma; mixed growth is Unsupported.
/// AmbiguousRank propagates.
Classification classify_case(const MotionPlanningProblem& problem, int samples = 5, const RankOptions& opts = {});

/// Intrinsic difference `to - from`; rotation blocks use the axial vector of
/// log(R_to R_from^T).
Vec state_difference(const ControlFrame& system, const Vec& from, const Vec& to);

/// Rotation logarithm (axial vector) of a rotation matrix.
Eigen::Vector3d log_so3(const Eigen::Matrix3d& R);

/// Frozen-frame chart at a point: F1, F2 and the independent bracket words,
/// selected level by level, as a basis of the tangent space.
struct BracketChart {
  int n = 0;
  int p = 2;
  int max_level = 0;
  Mat basis;                             // n x n, selected columns
  std::vector<int> level;                // level of each column
  std::vector<std::string> words;        // word of each column
  std::vector<Mat> G;                    // G[k]: coefficients per unit free-model coordinate of level k
  Eigen::PartialPivLU<Mat> lu;

  Vec coefficients(const Vec& d) const { return lu.solve(d); }
  std::vector<int> rows(int lev) const;
};

/// Throws ContractError when F1..Fp and brackets up to length 4 do not span.
BracketChart make_chart(const ControlFrame& system, const Vec& at, double h = 1e-4);

struct CorrectionOptions {
  int max_passes = 3;
  double min_length = 1e-7;  // relative to eps: smaller corrections are skipped
  int steps_per_loop = 128;
};

struct Correction {
  double length = 0.0;
  Vec end;
  Vec residual;  // intrinsic deviation left at the end
  int primitives = 0;
  Trajectory trajectory;
};

/// Greedy layered steering from `from` towards `target`: weight-1 deviations by
/// a straight segment, weight 2 by a circle, weight 3 by an elastica loop,
/// weight 4 by a dance loop, in the chart of the current point. Throws
/// ModificationOverflow when the appended length reaches eps^(1 + alpha).
Correction epsilon_modification(const ControlFrame& system, const Vec& from, const Vec& target, double eps,
                                double alpha = 0.5, const CorrectionOptions& opts = {});

struct PlannedSegment {
  double eps_i = 0.0;
  double main_length = 0.0;
  double correction_length = 0.0;
  double s_start = 0.0;
  double s_end = 0.0;
  double theta = 0.0;
  int orientation = 1;
};

struct SynthesisPlan {
  CaseTag tag = CaseTag::Unsupported;
  CurveKind curve = CurveKind::Circle;
  int top_level = 0;
  double epsilon = 0.0;
  double alpha = 0.5;
  double total_length = 0.0;
  std::vector<PlannedSegment> segments;
};

struct InterpolationReport {
  double eps = 0.0;
  double worst_gap = 0.0;    // max over length-eps windows of the distance to Gamma
  double tube_radius = 0.0;  // max distance of the trajectory to Gamma
  double realized_entropy = 0.0;
  double gap_tolerance = 0.0;
  bool interpolates = false;  // worst_gap <= gap_tolerance
  bool budget_ok = true;      // every eps_i in [eps, eps (1 + eps^alpha))
  std::vector<double> eps_i;
  std::string distance = "ambient-euclidean";
};

/// Windows of arclength eps slid over the trajectory; distances to Gamma are
/// ambient Euclidean (an upper bound for the local search used).
/// gap_tolerance < 0 selects eps.
InterpolationReport verify_interpolation(const Trajectory& traj, const Curve& gamma, double eps,
                                         double gap_tolerance = -1.0);

struct PlanOptions {
  std::size_t max_segments = 1'000'000;
  int steps_per_loop = 64;       // circle; the elastica uses 2x, the dance 16x
  int record_stride = 1;         // keep every n-th integration sample
  bool verify = true;
  CorrectionOptions correction;
  std::optional<DanceParams> dance;  // default: the shipped artifact
};

struct PlanResult {
  SynthesisPlan plan;
  Trajectory trajectory;
  InterpolationReport report;
  Classification classification;
};

/// Asymptotic optimal synthesis with eps-modification (p = 2 families and
/// one-step frames). Throws ContractError for Unsupported cases and
/// ModificationOverflow when a segment leaves the budget.
PlanResult plan(const MotionPlanningProblem& problem, double eps, double alpha = 0.5, const PlanOptions& opts = {});

struct ErrorOrder {
  std::vector<std::string> blocks;
  std::vector<double> slopes;    // NaN when excluded
  std::vector<bool> excluded;
  std::vector<std::vector<double>> gaps;  // [block][eps index]
  std::vector<std::string> notes;
};

/// Runs the model and a perturbation from the same point with the control
/// rescaled to each eps, and fits log-log slopes of the endpoint gaps per
/// weight block. Blocks whose gaps fall below 1e-13 are excluded.
ErrorOrder cosimulate_error_order(const NilpotentModel& base, const ControlFrame& perturbed,
                                  const UniversalCurve& control, const std::vector<double>& eps_list,
                                  const Vec* start = nullptr);

/// Benchmark problems.
MotionPlanningProblem nilpotent_benchmark(const NilpotentModel& model, double T);
/// Car with a trailer sliding sideways: Gamma(s) = (s, 0, pi/2, 0).
MotionPlanningProblem parking_problem(double T);
/// Ball on a plane dragged without rotation: Gamma(s) = (s, 0, Id).
MotionPlanningProblem ball_plate_problem(double T);
/// Ball with a trailer: Gamma(s) = (s, 0, Id, theta0).
MotionPlanningProblem ball_trailer_problem(double T, double L = 1.0, double theta0 = 0.0);

std::string to_json(const SynthesisPlan& plan);
std::string to_json(const InterpolationReport& report);
InterpolationReport report_from_json(const std::string& text);
SynthesisPlan plan_from_json(const std::string& text);

}  // namespace nhmp
