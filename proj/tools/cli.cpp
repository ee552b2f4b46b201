#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "nhmp/entropy.hpp"
#include "nhmp/errors.hpp"
#include "nhmp/invariants.hpp"
#include "nhmp/io.hpp"
#include "nhmp/models.hpp"
#include "nhmp/planner.hpp"
#include "nhmp/synthesis.hpp"

namespace nhmp::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class UnsupportedCase : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string out_dir = ".";
  std::vector<std::string> formats;
  std::uint64_t seed = 0;
};

struct SimulateArgs {
  std::string system = "unicycle";
  std::string curve;
  std::string controls_file;
  double eps = 0.0;
  int periods = 1;
  double step = 0.0;
  bool frozen = false;
  int p = 3;
  double L = 1.0;
  std::vector<double> weights;
  std::vector<double> x0;
  std::vector<std::string> pairs;
};

struct PlanArgs {
  std::string problem;
  double eps = 0.0;
  double alpha = 0.5;
  double T = 0.0;
  double L = 1.0;
  double theta0 = 0.0;
  double delta = 1.0;
  int p = 3;
  int stride = 1;
  double gap_tol = -1.0;
};

struct EntropyArgs {
  std::string kase;
  double delta = 1.0;
  double T = 1.0;
  double eps = 0.0;
  std::vector<double> rho;
  int p = 2;
  std::vector<double> weights;
  double sigma62 = 0.0;
  bool measure = false;
  bool log = false;
};

struct InvariantsArgs {
  std::string system;
  double L = 1.0;
  int p = 3;
  double T = 1.0;
  int samples = 11;
};

struct ShootArgs {
  std::string out;
  int table_points = 20000;
};

bool wants(const Common& c, const std::string& f) {
  return std::find(c.formats.begin(), c.formats.end(), f) != c.formats.end();
}

std::string file_in(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

std::vector<double> to_vector(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

NilpotentModel model_by_name(const std::string& name, int p, double delta) {
  const ScalarFn d = delta == 1.0 ? ScalarFn{} : ScalarFn([delta](double) { return delta; });
  switch (parse_family(name)) {
    case Family::Contact: return contact_model(delta);
    case Family::OneStepFree: return one_step_free(p);
    case Family::FourTwo: return four_two(d);
    case Family::FiveTwo: return five_two(d);
    case Family::SixTwo: return six_two(d);
  }
  throw InvalidInput("unknown model family '" + name + "'");
}

// System by name: benchmark systems first, then model families.
ControlFrame system_by_name(const std::string& name, double L, int p, double delta = 1.0) {
  try {
    return make_system({parse_system_kind(name), L});
  } catch (const InvalidInput&) {
  }
  return make_nilpotent(model_by_name(name, p, delta));
}

Vec default_start(const ControlFrame& sys) {
  Vec x = Vec::Zero(sys.dim);
  if (sys.rotation) set_rotation(x, sys.rotation->offset, Eigen::Matrix3d::Identity());
  return x;
}

ControlFrame frozen_frame(const ControlFrame& sys, const Vec& at) {
  ControlFrame f = sys;
  f.rotation.reset();
  for (auto& F : f.fields) {
    const Vec v = F.eval(at);
    const int n = sys.dim;
    F.eval = [v](const Vec&) { return v; };
    F.jacobian = [n](const Vec&) { return Mat(Mat::Zero(n, n)); };
  }
  return f;
}

ControlSignal read_controls(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("control file '" + path + "' is empty");
  std::vector<double> t;
  std::vector<Vec> u;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidInput("control file '" + path + "': bad number '" + cell + "'");
      }
    }
    if (row.size() < 2) throw InvalidInput("control file '" + path + "': need columns t,u1,...");
    if (!u.empty() && static_cast<int>(row.size()) - 1 != u.front().size())
      throw InvalidInput("control file '" + path + "': ragged rows");
    if (!t.empty() && !(row[0] > t.back())) throw InvalidInput("control file '" + path + "': t must increase");
    t.push_back(row[0]);
    u.push_back(Eigen::Map<Vec>(row.data() + 1, row.size() - 1));
  }
  if (t.size() < 2) throw InvalidInput("control file '" + path + "': need at least two rows");
  ControlSignal s;
  s.p = static_cast<int>(u.front().size());
  s.duration = t.back() - t.front();
  const double t0 = t.front();
  s.u = [t, u, t0](double tt) {
    const double x = tt + t0;
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = std::clamp<std::size_t>(it - t.begin(), 1, t.size() - 1);
    const double a = std::clamp((x - t[i - 1]) / (t[i] - t[i - 1]), 0.0, 1.0);
    return Vec((1 - a) * u[i - 1] + a * u[i]);
  };
  return s;
}

UniversalCurve curve_by_name(const std::string& name, double eps, const std::vector<double>& weights, int p) {
  if (name == "circle") return circle_controls(eps);
  if (name == "multifreq") return multifreq_controls(eps, weights, p);
  if (name == "elastica") return elastica_controls(eps);
  if (name == "dance") return dance_controls(load_dance(default_dance_path()), eps);
  throw InvalidInput("unknown curve '" + name + "' (circle, multifreq, elastica, dance)");
}

ControlSignal repeat(const ControlSignal& u, int n) {
  if (n < 1) throw InvalidInput("periods must be positive");
  ControlSignal r = u;
  r.duration = u.duration * n;
  const auto f = u.u;
  const double T = u.duration;
  r.u = [f, T](double t) { return f(std::min(t - T * std::floor(t / T), T)); };
  return r;
}

std::pair<int, int> parse_pair(const std::string& s, int n) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw InvalidInput("pair '" + s + "' must read i,j");
  int i = 0, j = 0;
  try {
    i = std::stoi(s.substr(0, comma));
    j = std::stoi(s.substr(comma + 1));
  } catch (const std::exception&) {
    throw InvalidInput("pair '" + s + "' must read i,j");
  }
  if (i < 1 || j < 1 || i > n || j > n) throw InvalidInput("pair '" + s + "' out of range");
  return {i - 1, j - 1};
}

Polyline closed_trace(const ControlSignal& u, int samples = 2000) {
  const auto tr = planar_trace(u, samples);
  return Polyline(tr.begin(), tr.end());
}

// At most n points, endpoints kept.
Polyline thin(const Polyline& pts, std::size_t n = 20000) {
  if (pts.size() <= n) return pts;
  Polyline out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pts[i * (pts.size() - 1) / (n - 1)]);
  return out;
}

Polyline gamma_trace(const Curve& g, int i, int j, int samples = 200) {
  Polyline out;
  for (int k = 0; k <= samples; ++k) {
    const Vec x = g.point(g.T * k / samples);
    out.emplace_back(x[i], x[j]);
  }
  return out;
}

// --- commands -----------------------------------------------------------

int cmd_simulate(const SimulateArgs& a, const Common& c, std::ostream& out) {
  if (!(a.eps > 0.0)) throw InvalidInput("--eps must be positive");
  const ControlFrame sys = system_by_name(a.system, a.L, a.p);
  ControlSignal u;
  std::string curve = a.curve;
  if (!a.controls_file.empty()) {
    u = rescale_controls(read_controls(a.controls_file), a.eps);
    curve = "file";
  } else {
    if (curve.empty()) throw InvalidInput("one of --curve or --controls is required");
    u = curve_by_name(curve, a.eps, a.weights, sys.rank()).controls;
  }
  if (u.p != sys.rank())
    throw InvalidInput("controls have " + std::to_string(u.p) + " components, system has " +
                       std::to_string(sys.rank()));
  u = repeat(u, a.periods);
  Vec x0 = default_start(sys);
  if (!a.x0.empty()) {
    if (static_cast<int>(a.x0.size()) != sys.dim) throw InvalidInput("--x0 has the wrong size");
    x0 = Eigen::Map<const Vec>(a.x0.data(), a.x0.size());
  }
  const ControlFrame run_sys = a.frozen ? frozen_frame(sys, x0) : sys;
  const double step = a.step > 0.0 ? a.step : a.eps / 1000.0;
  const Trajectory tr = integrate(run_sys, u, x0, step);
  json summary;
  summary["command"] = "simulate";
  summary["system"] = a.system;
  summary["curve"] = curve;
  summary["eps"] = a.eps;
  summary["periods"] = a.periods;
  summary["frozen"] = a.frozen;
  summary["seed"] = c.seed;
  summary["samples"] = tr.size();
  summary["final_state"] = to_vector(tr.back());
  summary["closure"] = (tr.back() - x0).norm();
  json files = json::array();
  if (wants(c, "csv")) {
    const std::string f = file_in(c, "trajectory.csv");
    write_text(f, trajectory_csv(tr));
    files.push_back(f);
  }
  if (wants(c, "svg")) {
    std::vector<Polyline> lines;
    const std::vector<std::string> pairs = a.pairs.empty() ? std::vector<std::string>{"1,2"} : a.pairs;
    for (const auto& s : pairs) {
      const auto [i, j] = parse_pair(s, sys.dim);
      lines.push_back(thin(project(tr, i, j)));
    }
    const std::string f = file_in(c, "trajectory.svg");
    write_text(f, svg_polylines(lines, {}, 600, 600, "simulate " + a.system + " " + curve));
    files.push_back(f);
  }
  if (wants(c, "json")) {
    const std::string f = file_in(c, "simulate.json");
    write_text(f, summary.dump(2) + "\n");
    files.push_back(f);
  }
  summary["files"] = files;
  out << summary.dump(2) << "\n";
  return kOk;
}

MotionPlanningProblem problem_by_name(const PlanArgs& a, double& T) {
  const std::string& n = a.problem;
  auto pick = [&](double d) { return a.T > 0.0 ? a.T : d; };
  if (n == "parking") return T = pick(0.01), parking_problem(T);
  if (n == "ball-plate") return T = pick(0.01), ball_plate_problem(T);
  if (n == "ball-trailer") return T = pick(1e-4), ball_trailer_problem(T, a.L, a.theta0);
  const Family f = parse_family(n);
  double d = 0.1;
  if (f == Family::FourTwo || f == Family::FiveTwo) d = 0.01;
  if (f == Family::SixTwo) d = 1e-4;
  T = pick(d);
  MotionPlanningProblem pb = nilpotent_benchmark(model_by_name(n, a.p, a.delta), T);
  return pb;
}

int cmd_plan(const PlanArgs& a, const Common& c, std::ostream& out) {
  if (!(a.eps > 0.0)) throw InvalidInput("--eps must be positive");
  double T = 0.0;
  const MotionPlanningProblem pb = problem_by_name(a, T);
  const Classification cl = classify_case(pb);
  if (cl.tag == CaseTag::Unsupported) throw UnsupportedCase("unsupported case: " + cl.diagnostic);
  PlanOptions opts;
  opts.record_stride = a.stride;
  PlanResult r = plan(pb, a.eps, a.alpha, opts);
  if (a.gap_tol >= 0.0) {
    r.report.gap_tolerance = a.gap_tol;
    r.report.interpolates = r.report.worst_gap <= a.gap_tol;
  }
  json files = json::array();
  if (wants(c, "json")) {
    const std::string fp = file_in(c, "plan.json"), fr = file_in(c, "report.json");
    write_text(fp, to_json(r.plan) + "\n");
    write_text(fr, to_json(r.report) + "\n");
    files.push_back(fp);
    files.push_back(fr);
  }
  if (wants(c, "csv")) {
    const std::string f = file_in(c, "trajectory.csv");
    write_text(f, trajectory_csv(r.trajectory));
    files.push_back(f);
  }
  if (wants(c, "svg")) {
    auto emit = [&](const std::string& name, const std::string& svg) {
      const std::string f = file_in(c, name);
      write_text(f, svg);
      files.push_back(f);
    };
    const std::vector<SvgStyle> styles = {{"black", 1.0}, {"red", 1.0}};
    UniversalCurve uc = r.plan.curve == CurveKind::Elastica      ? elastica_controls(a.eps)
                        : r.plan.curve == CurveKind::SixTwoDance ? dance_controls(load_dance(default_dance_path()), a.eps)
                                                                 : circle_controls(a.eps);
    if (pb.system.rank() == 2) emit("universal_curve.svg", svg_polylines({closed_trace(uc.controls)}, styles, 600, 600,
                                                                       "universal curve: " + to_string(uc.kind)));
    const Polyline traj_xy = thin(project(r.trajectory, 0, 1));
    const Polyline gamma_xy = gamma_trace(pb.gamma, 0, 1);
    emit("plan_xy.svg", svg_polylines({traj_xy, gamma_xy}, styles, 600, 600, "trajectory and Gamma"));
    if (a.problem == "parking")
      emit("figure1_parking.svg",
           svg_polylines({traj_xy, gamma_xy}, styles, 800, 300, "parking of the car with a trailer", false));
    if (a.problem == "ball-plate")
      emit("figure2_rolling.svg",
           svg_polylines({traj_xy, gamma_xy}, styles, 800, 300, "approximating rolling with slipping", false));
    if (r.plan.curve == CurveKind::SixTwoDance)
      emit("figure6_dance.svg", svg_polylines({closed_trace(uc.controls)}, styles, 600, 600, "dance of minimum entropy"));
    if (a.problem == "ball-trailer")
      emit("figure7_ball_trailer.svg",
           svg_polylines({traj_xy, gamma_xy}, styles, 800, 300, "parking the ball with a trailer", false));
  }
  json summary;
  summary["command"] = "plan";
  summary["problem"] = a.problem;
  summary["tag"] = to_string(r.plan.tag);
  summary["curve"] = to_string(r.plan.curve);
  summary["eps"] = a.eps;
  summary["alpha"] = a.alpha;
  summary["T"] = T;
  summary["seed"] = c.seed;
  summary["segments"] = r.plan.segments.size();
  summary["total_length"] = r.plan.total_length;
  summary["realized_entropy"] = r.report.realized_entropy;
  summary["worst_gap"] = r.report.worst_gap;
  summary["tube_radius"] = r.report.tube_radius;
  summary["interpolates"] = r.report.interpolates;
  summary["budget_ok"] = r.report.budget_ok;
  summary["files"] = files;
  out << summary.dump(2) << "\n";
  return kOk;
}

EntropyEstimate formula(const EntropyArgs& a, double& sigma62) {
  const double d = a.delta;
  const ScalarFunction delta = [d](double) { return d; };
  if (a.kase == "log") return entropy_log(a.rho, a.p);
  if (a.kase == "contact") return entropy_from_mc(mc_contact([d](double) { return std::abs(d); }, a.T));
  if (a.kase == "free") {
    const std::vector<double> w = a.weights;
    return entropy_free_case([w](double) { return w; }, a.T);
  }
  if (a.kase == "42" || a.kase == "52") return entropy_42_52(delta, a.T);
  if (a.kase == "62") {
    sigma62 = a.sigma62 > 0.0 ? a.sigma62 : load_dance(default_dance_path()).sigma62;
    return entropy_62(delta, a.T, sigma62);
  }
  throw InvalidInput("unknown case '" + a.kase + "' (contact, free, 42, 52, 62, log)");
}

int cmd_entropy(const EntropyArgs& a, const Common& c, std::ostream& out) {
  if (a.delta == 0.0 && a.kase != "log" && !a.log)
    throw SingularInvariant("the invariant vanishes identically; rerun with --case log --rho ... --p ...");
  double sigma62 = 0.0;
  EntropyEstimate e;
  try {
    e = formula(a, sigma62);
  } catch (const SingularInvariant& ex) {
    throw SingularInvariant(std::string(ex.what()) + " (pass --case log with the crossing slopes --rho)");
  }
  json j = json::parse(to_json(e));
  j["seed"] = c.seed;
  if (sigma62 > 0.0) j["sigma62"] = sigma62;
  if (a.eps > 0.0) j["value"] = e.value(a.eps);
  if (a.measure) {
    if (!(a.eps > 0.0)) throw InvalidInput("--measure needs --eps");
    std::string family;
    if (a.kase == "contact") family = "contact";
    if (a.kase == "42") family = "four-two";
    if (a.kase == "52") family = "five-two";
    if (a.kase == "62") family = "six-two";
    if (family.empty()) throw InvalidInput("--measure supports the contact, 42, 52 and 62 cases");
    PlanArgs pa;
    pa.problem = family;
    pa.T = a.T;
    pa.delta = a.delta;
    double T = 0.0;
    PlanOptions opts;
    opts.verify = false;
    const PlanResult r = plan(problem_by_name(pa, T), a.eps, 0.5, opts);
    j["realized"] = r.report.realized_entropy;
    j["ratio"] = r.report.realized_entropy / e.value(a.eps);
  }
  if (wants(c, "json")) write_text(file_in(c, "entropy.json"), j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return kOk;
}

struct Anchor {
  ControlFrame system;
  Curve gamma;
};

Anchor anchor_for(const InvariantsArgs& a) {
  Anchor an;
  try {
    const SystemKind k = parse_system_kind(a.system);
    switch (k) {
      case SystemKind::Unicycle: {
        an.system = make_system({k, a.L});
        const Vec dir = Vec::Unit(3, 1);
        an.gamma.T = a.T;
        an.gamma.point = [dir](double s) { return Vec(s * dir); };
        an.gamma.derivative = [dir](double) { return dir; };
        return an;
      }
      case SystemKind::CarTrailer: {
        const MotionPlanningProblem pb = parking_problem(a.T);
        return {pb.system, pb.gamma};
      }
      case SystemKind::BallPlate: {
        const MotionPlanningProblem pb = ball_plate_problem(a.T);
        return {pb.system, pb.gamma};
      }
      case SystemKind::BallTrailer: {
        const MotionPlanningProblem pb = ball_trailer_problem(a.T, a.L);
        return {pb.system, pb.gamma};
      }
    }
  } catch (const InvalidInput&) {
  }
  const MotionPlanningProblem pb = nilpotent_benchmark(model_by_name(a.system, a.p, 1.0), a.T);
  return {pb.system, pb.gamma};
}

int cmd_invariants(const InvariantsArgs& a, const Common& c, std::ostream& out) {
  const Anchor an = anchor_for(a);
  const Vec x = an.gamma.point(0.0);
  std::vector<int> g = growth_vector(an.system, x, 4);
  while (g.size() > 1 && g[g.size() - 2] == g.back()) g.pop_back();
  json j;
  j["command"] = "invariants";
  j["system"] = a.system;
  j["seed"] = c.seed;
  j["growth"] = g;
  if (g.size() >= 3 && g[0] == 2 && g[1] == 3 && g[2] == 5 && an.system.intrinsic_dim() == 6) {
    const CurvatureMatrix A = curvature_matrix_A(an.system, x);
    j["A"] = {{A.A(0, 0), A.A(0, 1)}, {A.A(1, 0), A.A(1, 1)}};
    j["A_symmetry_defect"] = A.symmetry_defect;
    j["r"] = eigen_ratio_r(A.A);
  }
  if (g.size() == 2 && g[1] == g[0] + 1) {
    json chi = json::array();
    const int n = std::max(2, a.samples);
    for (int i = 0; i < n; ++i) {
      const double t = a.T * i / (n - 1);
      chi.push_back({{"t", t}, {"chi", chi_contact(an.system, an.gamma, t)}});
    }
    j["chi"] = chi;
  }
  if (wants(c, "json")) write_text(file_in(c, "invariants.json"), j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return kOk;
}

int cmd_shoot(const ShootArgs& a, const Common& c, std::ostream& out) {
  ShootOptions opts;
  opts.table_points = a.table_points;
  DanceReport rep;
  const UniversalCurve d = six_two_shoot(1.0, opts, &rep);
  const std::string path = a.out.empty() ? default_dance_path() : a.out;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  save_dance(d.dance, rep, path);
  json j;
  j["command"] = "shoot";
  j["seed"] = c.seed;
  j["sigma62"] = d.dance.sigma62;
  j["K_norm"] = d.dance.K_norm;
  j["r0"] = d.dance.r0;
  j["half_periods"] = d.dance.half_periods;
  j["closure"] = rep.closure;
  j["periodicity"] = rep.periodicity;
  j["h1_drift"] = rep.h1_drift;
  j["sigma_rescaled"] = rep.sigma_rescaled;
  j["file"] = path;
  out << j.dump(2) << "\n";
  return kOk;
}

// Config file entries become flags placed before the user's own flags; keys
// given on the command line are skipped so that flags win.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  const auto cfg = read_config(path);
  auto given = [&](const std::string& key) {
    for (const auto& s : args)
      if (s == "--" + key || s.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  for (const auto& [k, v] : cfg) {
    if (k == "command" || given(k)) continue;
    if (v == "true") {
      out.push_back("--" + k);
    } else if (v != "false") {
      out.push_back("--" + k);
      out.push_back(v);
    }
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonholonomic motion planning: synthesis, entropy and invariants"};
  app.require_subcommand(1);
  Common common;
  SimulateArgs sim;
  PlanArgs pl;
  EntropyArgs en;
  InvariantsArgs inv;
  ShootArgs sh;
  std::string config;

  auto add_common = [&](CLI::App* s, std::vector<std::string> default_formats) {
    common.formats = default_formats;
    s->add_option("--out", common.out_dir, "Output directory");
    s->add_option("--format", common.formats, "Output formats (csv, json, svg)")->delimiter(',');
    s->add_option("--seed", common.seed, "Seed recorded in the outputs");
    s->add_option("--config", config, "key = value file; flags win");
  };

  CLI::App* s_sim = app.add_subcommand("simulate", "Integrate a system under a universal curve or a control file");
  s_sim->add_option("--system", sim.system, "unicycle, car-trailer, ball-plate, ball-trailer or a model family");
  s_sim->add_option("--curve", sim.curve, "circle, multifreq, elastica, dance");
  s_sim->add_option("--controls", sim.controls_file, "CSV with columns t,u1,...");
  s_sim->add_option("--eps", sim.eps, "Period")->required();
  s_sim->add_option("--periods", sim.periods, "Number of periods");
  s_sim->add_option("--step", sim.step, "Integration step (default eps/1000)");
  s_sim->add_flag("--frozen", sim.frozen, "Freeze the frame at the start point");
  s_sim->add_option("--p", sim.p, "Controls of the one-step free model");
  s_sim->add_option("--L", sim.L, "Trailer length");
  s_sim->add_option("--weights", sim.weights, "Multi-frequency weights")->delimiter(',');
  s_sim->add_option("--x0", sim.x0, "Initial state")->delimiter(',');
  s_sim->add_option("--pair", sim.pairs, "Coordinate pair i,j (1-based) for the SVG; repeatable");
  add_common(s_sim, {"csv"});

  CLI::App* s_plan = app.add_subcommand("plan", "Asymptotic optimal synthesis with eps-modification");
  s_plan->add_option("--problem", pl.problem,
                     "parking, ball-plate, ball-trailer, contact, one-step-free, four-two, five-two, six-two")
      ->required();
  s_plan->add_option("--eps", pl.eps, "Interpolation accuracy")->required();
  s_plan->add_option("--alpha", pl.alpha, "Budget exponent");
  s_plan->add_option("--T", pl.T, "Length of Gamma's parameter interval");
  s_plan->add_option("--L", pl.L, "Trailer length");
  s_plan->add_option("--theta0", pl.theta0, "Trailer angle along Gamma");
  s_plan->add_option("--delta", pl.delta, "Constant invariant of the model families");
  s_plan->add_option("--p", pl.p, "Controls of the one-step free model");
  s_plan->add_option("--stride", pl.stride, "Keep every n-th trajectory sample");
  s_plan->add_option("--gap-tol", pl.gap_tol, "Interpolation gap tolerance (default eps)");
  add_common(s_plan, {"csv", "json", "svg"});

  CLI::App* s_ent = app.add_subcommand("entropy", "Entropy formulas");
  s_ent->add_option("--case", en.kase, "contact, free, 42, 52, 62, log")->required();
  s_ent->add_option("--delta", en.delta, "Constant invariant (delta or chi)");
  s_ent->add_option("--T", en.T, "Length of Gamma's parameter interval");
  s_ent->add_option("--eps", en.eps, "Evaluate at eps");
  s_ent->add_option("--rho", en.rho, "Crossing slopes (log case)")->delimiter(',');
  s_ent->add_option("--p", en.p, "Exponent of the log case");
  s_ent->add_option("--weights", en.weights, "Weights of the free case")->delimiter(',');
  s_ent->add_option("--sigma62", en.sigma62, "Override of the 6-2 constant");
  s_ent->add_flag("--measure", en.measure, "Also run the planner and print the realized/formula ratio");
  s_ent->add_flag("--log", en.log, "Accept a vanishing invariant (logarithmic case)");
  add_common(s_ent, {});

  CLI::App* s_inv = app.add_subcommand("invariants", "Growth vector, curvature matrix, r and chi");
  s_inv->add_option("--system", inv.system, "System or model family")->required();
  s_inv->add_option("--L", inv.L, "Trailer length");
  s_inv->add_option("--p", inv.p, "Controls of the one-step free model");
  s_inv->add_option("--T", inv.T, "Length of Gamma's parameter interval");
  s_inv->add_option("--samples", inv.samples, "chi samples along Gamma");
  add_common(s_inv, {});

  CLI::App* s_shoot = app.add_subcommand("shoot", "Shoot the 6-2 dance and write its parameters");
  s_shoot->add_option("--file", sh.out, "Output JSON (default: the shipped artifact)");
  s_shoot->add_option("--table-points", sh.table_points, "Samples of the control angle");
  add_common(s_shoot, {});

  try {
    const std::vector<std::string> args = merge_config(raw_args);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    // add_common resets the default formats; restore per subcommand after parsing
    app.parse(static_cast<int>(argv.size()), argv.data());
    const bool formats_given = [&] {
      for (CLI::App* s : app.get_subcommands())
        if (s->get_option("--format")->count() > 0) return true;
      return false;
    }();
    if (!formats_given) {
      if (s_sim->parsed()) common.formats = {"csv"};
      if (s_plan->parsed()) common.formats = {"csv", "json", "svg"};
      if (s_ent->parsed() || s_inv->parsed() || s_shoot->parsed()) common.formats = {};
    }
    if (s_sim->parsed()) return cmd_simulate(sim, common, out);
    if (s_plan->parsed()) return cmd_plan(pl, common, out);
    if (s_ent->parsed()) return cmd_entropy(en, common, out);
    if (s_inv->parsed()) return cmd_invariants(inv, common, out);
    if (s_shoot->parsed()) return cmd_shoot(sh, common, out);
    return kUsage;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnsupportedCase& e) {
    err << e.what() << "\n";
    return kUnsupported;
  } catch (const AmbiguousRank& e) {
    err << "ambiguous rank: " << e.what() << "\n";
    return kAmbiguous;
  } catch (const ShootingFailed& e) {
    err << "shooting failed: " << e.what() << "\n";
    return kShooting;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const SingularInvariant& e) {
    err << "singular invariant: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace nhmp::cli
