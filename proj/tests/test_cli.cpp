#include <cmath>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "nhmp/entropy.hpp"
#include "nhmp/io.hpp"
#include "nhmp/planner.hpp"

using namespace nhmp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
  nlohmann::json summary() const { return nlohmann::json::parse(out); }
};

Run nhmp_run(std::vector<std::string> args) {
  args.insert(args.begin(), "nhmp");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nhmp_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("cli simulate") {
  const std::string dir = fresh_dir("simulate");
  const Run r = nhmp_run({"simulate", "--system", "unicycle", "--curve", "circle", "--eps", "0.5", "--frozen", "--out",
                          dir, "--format", "csv,svg", "--pair", "1,2", "--pair", "1,3"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.summary()["closure"].get<double>() <= 1e-9);

  const std::string csv = read_text(dir + "/trajectory.csv");
  std::istringstream in(csv);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "t,x1,x2,x3,u1,u2");
  CHECK(first.rfind("0,", 0) == 0);
  // %.17g: 0.0005 prints with 17 significant digits
  CHECK(second.rfind("0.00050000000000000001,", 0) == 0);

  const std::string svg = read_text(dir + "/trajectory.svg");
  CHECK(svg_polyline_count(svg) == 2);
  CHECK(svg_polylines_read(svg).size() == 2);
}

TEST_CASE("cli usage errors and exit codes") {
  CHECK(nhmp_run({"simulate", "--system", "unicycle", "--curve", "circle"}).code == cli::kUsage);
  CHECK(nhmp_run({"simulate", "--system", "boat", "--eps", "1"}).code == cli::kUsage);
  CHECK(nhmp_run({"simulate", "--system", "unicycle", "--curve", "spiral", "--eps", "1"}).code == cli::kUsage);
  CHECK(nhmp_run({"simulate", "--system", "unicycle", "--controls", "/no/such.csv", "--eps", "1"}).code == cli::kUsage);
  CHECK(nhmp_run({"frobnicate"}).code == cli::kUsage);
  CHECK(nhmp_run({}).code == cli::kUsage);
  CHECK(nhmp_run({"--help"}).code == cli::kOk);

  const Run unsupported = nhmp_run({"plan", "--problem", "onestep", "--p", "4", "--eps", "0.1", "--format", "json",
                                    "--out", fresh_dir("unsupported")});
  CHECK(unsupported.code == cli::kUnsupported);
  CHECK(unsupported.err.find("(4,10)") != std::string::npos);

  const Run singular = nhmp_run({"entropy", "--case", "42", "--delta", "0", "--T", "1"});
  CHECK(singular.code == cli::kUsage);
  CHECK(singular.err.find("--case log") != std::string::npos);
}

TEST_CASE("cli config file") {
  const std::string dir = fresh_dir("config");
  const std::string cfg = dir + "/run.cfg";
  write_text(cfg, "# defaults\nsystem = unicycle\ncurve = circle\neps = 0.5\nfrozen = true\nformat = json\n");
  const Run a = nhmp_run({"simulate", "--config", cfg, "--out", dir});
  REQUIRE(a.code == cli::kOk);
  CHECK(a.summary()["eps"].get<double>() == 0.5);
  CHECK(a.summary()["frozen"].get<bool>());
  CHECK(fs::exists(dir + "/simulate.json"));
  const Run b = nhmp_run({"simulate", "--config", cfg, "--eps", "0.25", "--out", dir});
  REQUIRE(b.code == cli::kOk);
  CHECK(b.summary()["eps"].get<double>() == 0.25);
}

TEST_CASE("cli entropy") {
  const Run r = nhmp_run({"entropy", "--case", "42", "--delta", "1", "--T", "1", "--eps", "1"});
  REQUIRE(r.code == cli::kOk);
  CHECK(std::abs(r.summary()["value"].get<double>() - 258.485) <= 1e-3);
  CHECK(entropy_from_json(r.out).exponent == 3);

  const Run lg = nhmp_run({"entropy", "--case", "log", "--rho", "1", "--p", "2", "--eps", "0.36787944117144233"});
  REQUIRE(lg.code == cli::kOk);
  CHECK(lg.summary()["value"].get<double>() == doctest::Approx(2.0 * std::exp(2.0)).epsilon(1e-12));

  const Run m = nhmp_run({"entropy", "--case", "contact", "--T", "0.05", "--eps", "0.05", "--measure"});
  REQUIRE(m.code == cli::kOk);
  const double ratio = m.summary()["ratio"].get<double>();
  CHECK(ratio >= 0.9);
  CHECK(ratio <= 1.1);
}

TEST_CASE("cli invariants") {
  const Run bt = nhmp_run({"invariants", "--system", "ball-trailer"});
  REQUIRE(bt.code == cli::kOk);
  CHECK(bt.summary()["growth"] == nlohmann::json({2, 3, 5, 6}));
  CHECK(std::abs(bt.summary()["r"].get<double>() - 1.0) <= 1e-4);
  CHECK(nhmp_run({"invariants", "--system", "unicycle"}).summary()["growth"] == nlohmann::json({2, 3}));
  CHECK(nhmp_run({"invariants", "--system", "car-trailer"}).summary()["growth"] == nlohmann::json({2, 3, 4}));
}

TEST_CASE("cli plan outputs round trip and are deterministic") {
  const std::string d1 = fresh_dir("plan1"), d2 = fresh_dir("plan2");
  const std::vector<std::string> args = {"plan", "--problem", "parking", "--eps", "0.1", "--T", "0.002", "--seed", "7"};
  auto with_out = [&](const std::string& d) {
    std::vector<std::string> a = args;
    a.insert(a.end(), {"--out", d});
    return a;
  };
  const Run r1 = nhmp_run(with_out(d1));
  REQUIRE(r1.code == cli::kOk);
  REQUIRE(nhmp_run(with_out(d2)).code == cli::kOk);

  const InterpolationReport rep = report_from_json(read_text(d1 + "/report.json"));
  CHECK(rep.worst_gap <= 0.2);
  CHECK(rep.budget_ok);
  const SynthesisPlan p = plan_from_json(read_text(d1 + "/plan.json"));
  CHECK(p.tag == CaseTag::FourTwo);
  CHECK(to_json(p) + "\n" == read_text(d1 + "/plan.json"));
  CHECK(to_json(rep) + "\n" == read_text(d1 + "/report.json"));

  for (const char* f : {"plan.json", "report.json", "trajectory.csv", "plan_xy.svg", "universal_curve.svg",
                        "figure1_parking.svg"}) {
    INFO(f);
    REQUIRE(fs::exists(d1 + "/" + f));
    CHECK(read_text(d1 + "/" + f) == read_text(d2 + "/" + f));
  }
  CHECK(svg_polyline_count(read_text(d1 + "/figure1_parking.svg")) == 2);
}
