#pragma once

// Top-down episode plot: plants, midline midpoints (black), fitted midline
// (cyan) and the robot trajectory (dashed red).

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "vinerow/episode.hpp"
#include "vinerow/eval.hpp"
#include "vinerow/world.hpp"

namespace vinerow::plot {

namespace detail {

inline std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

inline void write_episode_svg(std::ostream& os, const sim::World& world,
                              const eval::Midline& midline, const sim::EpisodeLog& log,
                              const std::string& title = "") {
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  double xmax = -xmin;
  double ymax = -xmin;
  auto grow = [&](geom::Vec2 p) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  };
  for (const auto& row : world.rows) {
    for (const auto& p : row.plants) grow(p);
  }
  for (const auto& s : log.steps) grow(s.pose.position());
  const double margin = 1.0;
  xmin -= margin;
  ymin -= margin;
  xmax += margin;
  ymax += margin;
  const double scale = 1000.0 / std::max(xmax - xmin, 1e-6);
  const double width = 1000.0;
  const double height = std::max(100.0, (ymax - ymin) * scale);
  auto px = [&](double x) { return detail::f3((x - xmin) * scale); };
  auto py = [&](double y) { return detail::f3((ymax - y) * scale); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::f3(width)
     << "\" height=\"" << detail::f3(height) << "\" viewBox=\"0 0 " << detail::f3(width) << ' '
     << detail::f3(height) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
       << "</text>\n";
  }
  for (const auto& row : world.rows) {
    const double side = row.canopy_halfwidth * 2.0 * scale;
    for (const auto& p : row.plants) {
      os << "<rect x=\"" << detail::f3((p.x - xmin) * scale - side / 2) << "\" y=\""
         << detail::f3((ymax - p.y) * scale - side / 2) << "\" width=\"" << detail::f3(side)
         << "\" height=\"" << detail::f3(side) << "\" fill=\"#3a7d2c\"/>\n";
    }
  }
  for (const auto& m : midline.midpoints) {
    os << "<circle cx=\"" << px(m.x) << "\" cy=\"" << py(m.y) << "\" r=\"2\" fill=\"black\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"cyan\" stroke-width=\"2\" points=\"";
  const int samples = 400;
  for (int k = 0; k <= samples; ++k) {
    const double t = midline.t_min + (midline.t_max - midline.t_min) * k / samples;
    const auto p = midline.point(t);
    os << px(p.x) << ',' << py(p.y) << ' ';
  }
  os << "\"/>\n";
  if (!log.steps.empty()) {
    os << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"2\" stroke-dasharray=\"8,5\" "
          "points=\"";
    for (const auto& s : log.steps) os << px(s.pose.x) << ',' << py(s.pose.y) << ' ';
    os << px(log.final_pose.x) << ',' << py(log.final_pose.y) << "\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace vinerow::plot
