#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "aims/evaluation.hpp"
#include "aims/log_io.hpp"

namespace aims {

struct PlotInput {
  std::vector<Trajectory> trajectories;
  std::vector<std::string> labels;
  std::optional<Trajectory> ground_truth;
  std::optional<std::vector<DiagnosticsRow>> diagnostics;
};

namespace plot_detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace plot_detail

/// Static SVG: XY top view with one polyline per trajectory (equal axis
/// scaling) and, with diagnostics, a smoothed degeneracy strip below it.
inline std::string render_svg(const PlotInput& in) {
  using plot_detail::num;
  const double W = 800.0;
  const double H = 600.0;
  const double margin = 40.0;
  const double strip_h = in.diagnostics ? 180.0 : 0.0;
  const double total_h = H + strip_h;

  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  auto extend = [&](const Trajectory& t) {
    for (const auto& r : t) {
      xmin = std::min(xmin, r.p.x());
      xmax = std::max(xmax, r.p.x());
      ymin = std::min(ymin, r.p.y());
      ymax = std::max(ymax, r.p.y());
    }
  };
  for (const auto& t : in.trajectories) extend(t);
  if (in.ground_truth) extend(*in.ground_truth);
  if (!std::isfinite(xmin)) {
    xmin = ymin = 0.0;
    xmax = ymax = 1.0;
  }
  const double dx = xmax - xmin;
  const double dy = ymax - ymin;
  const double avail_w = W - 2.0 * margin;
  const double avail_h = H - 2.0 * margin;
  double scale = 1.0;
  if (dx > 0.0 || dy > 0.0) {
    scale = std::min(dx > 0.0 ? avail_w / dx : std::numeric_limits<double>::infinity(),
                     dy > 0.0 ? avail_h / dy : std::numeric_limits<double>::infinity());
  }
  // centre the data in the plot area
  const double ox = margin + 0.5 * (avail_w - dx * scale);
  const double oy = margin + 0.5 * (avail_h - dy * scale);
  auto sx = [&](double x) { return ox + (x - xmin) * scale; };
  auto sy = [&](double y) { return oy + (ymax - y) * scale; };

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(total_h) +
         "\" viewBox=\"0 0 " + num(W) + " " + num(total_h) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(total_h) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(margin) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">XY top view, " +
         num(dx) + " m x " + num(dy) + " m</text>\n";

  auto polyline = [&](const Trajectory& t, const std::string& cls, const char* color, const std::string& label) {
    if (t.size() == 1) {
      svg += "<circle class=\"" + cls + "\" cx=\"" + num(sx(t[0].p.x())) + "\" cy=\"" + num(sy(t[0].p.y())) +
             "\" r=\"3\" fill=\"" + color + "\"><title>" + plot_detail::escape(label) + "</title></circle>\n";
      return;
    }
    svg += "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) svg += ' ';
      svg += num(sx(t[i].p.x())) + "," + num(sy(t[i].p.y()));
    }
    svg += "\"><title>" + plot_detail::escape(label) + "</title></polyline>\n";
  };
  if (in.ground_truth && !in.ground_truth->empty()) polyline(*in.ground_truth, "gt", "#000000", "ground truth");
  for (std::size_t i = 0; i < in.trajectories.size(); ++i) {
    if (in.trajectories[i].empty()) continue;
    const std::string label = i < in.labels.size() ? in.labels[i] : "trajectory " + std::to_string(i);
    polyline(in.trajectories[i], "traj", plot_detail::kPalette[i % 6], label);
  }

  if (in.diagnostics) {
    const auto& d = *in.diagnostics;
    const double top = H + 10.0;
    const double h = strip_h - 40.0;
    svg += "<text x=\"" + num(margin) + "\" y=\"" + num(top) +
           "\" font-family=\"sans-serif\" font-size=\"12\">smoothed degeneracy index vs time</text>\n";
    svg += "<rect x=\"" + num(margin) + "\" y=\"" + num(top + 8.0) + "\" width=\"" + num(avail_w) + "\" height=\"" +
           num(h) + "\" fill=\"none\" stroke=\"#888888\"/>\n";
    if (!d.empty()) {
      const double t0 = d.front().t;
      const double span = std::max(d.back().t - t0, 1e-9);
      svg += "<polyline class=\"dsmooth\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" points=\"";
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (i) svg += ' ';
        const double x = margin + (d[i].t - t0) / span * avail_w;
        const double y = top + 8.0 + (1.0 - std::clamp(d[i].d_smooth, 0.0, 1.0)) * h;
        svg += num(x) + "," + num(y);
      }
      svg += "\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace aims
