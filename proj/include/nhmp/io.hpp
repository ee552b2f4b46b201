#pragma once

#include <string>
#include <vector>

#include "nhmp/geometry.hpp"

namespace nhmp {

using Polyline = std::vector<Eigen::Vector2d>;

/// CSV with header t,<state names>,<control names> and %.17g numbers.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_names = {});
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

struct SvgStyle {
  std::string stroke = "black";
  double width = 1.0;
};

/// SVG document with one <polyline> per entry, fitted to a width x height
/// canvas; without equal_aspect each axis is stretched separately.
std::string svg_polylines(const std::vector<Polyline>& lines, const std::vector<SvgStyle>& styles = {},
                          double width = 600.0, double height = 600.0, const std::string& title = "",
                          bool equal_aspect = true);

/// Counts <polyline elements of a document and checks that it is closed by </svg>.
int svg_polyline_count(const std::string& svg);
/// Canvas coordinates of every <polyline>, with y flipped back to point up.
std::vector<Polyline> svg_polylines_read(const std::string& svg);

/// Projection of trajectory states on coordinates (i, j).
Polyline project(const Trajectory& traj, int i, int j);

double diameter(const Polyline& pts);
/// |last - first| relative to the diameter.
double closure_gap(const Polyline& pts);

struct Symmetry {
  double asymmetry = 0.0;  // relative to the diameter
  double axis_angle = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
};

/// Best reflection axis through the centroid: the reflected curve is compared
/// with the curve by the max point-to-polyline distance.
Symmetry reflection_symmetry(const Polyline& closed_curve);

/// Proper crossings between non-adjacent segments.
int self_crossings(const Polyline& pts);

}  // namespace nhmp
