#pragma once

/// \file
/// CSV, JSON and SVG writers for run artifacts. Every SVG is written next to a CSV holding the
/// exact plotted data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemofront/errors.hpp"
#include "chemofront/evolution.hpp"
#include "chemofront/levelset.hpp"
#include "chemofront/theory.hpp"

namespace chemofront::io {

/// %.17g: round-trips every double.
[[nodiscard]] inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

[[nodiscard]] inline std::string num(const std::optional<double>& x) { return x ? num(*x) : ""; }

namespace detail {
inline std::ofstream open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}
}  // namespace detail

/// Header `x,u,v,vx`, one row per node.
inline void write_profile_csv(const std::filesystem::path& path, const Snapshot& snap) {
  auto out = detail::open(path);
  out << "x,u,v,vx\n";
  for (std::size_t i = 0; i < snap.grid.n; ++i)
    out << num(snap.grid.x(i)) << ',' << num(snap.u[i]) << ',' << num(snap.v[i]) << ','
        << num(snap.vx[i]) << '\n';
}

/// Header `t,omega,min_x,max_x,count,avg_speed`; absent values are empty fields.
inline void write_series_csv(const std::filesystem::path& path,
                             std::span<const LevelSetSeries> series) {
  auto out = detail::open(path);
  out << "t,omega,min_x,max_x,count,avg_speed\n";
  for (const auto& s : series)
    for (const auto& r : s.records) {
      std::optional<double> speed;
      if (r.min_x && r.t > 0.0) speed = *r.min_x / r.t;
      out << num(r.t) << ',' << num(r.omega) << ',' << num(r.min_x) << ',' << num(r.max_x) << ','
          << r.crossing_count << ',' << num(speed) << '\n';
    }
}

/// Header `x,branch,residual,included`.
inline void write_residual_csv(const std::filesystem::path& path, const ResidualReport& rep) {
  auto out = detail::open(path);
  out << "x,branch,residual,included\n";
  for (const auto& r : rep.rows)
    out << num(r.x) << ',' << branch_name(r.branch) << ',' << num(r.residual) << ','
        << (r.included ? 1 : 0) << '\n';
}

/// Header `t,eta,min_x,max_x,zeta,pass`.
inline void write_containment_csv(const std::filesystem::path& path,
                                  const ContainmentReport& rep) {
  auto out = detail::open(path);
  out << "t,eta,min_x,max_x,zeta,pass\n";
  for (const auto& r : rep.rows)
    out << num(r.t) << ',' << num(r.eta) << ',' << num(r.min_x) << ',' << num(r.max_x) << ','
        << num(r.zeta) << ',' << (r.pass ? 1 : 0) << '\n';
}

[[nodiscard]] inline nlohmann::json fit_json(const AsymptoticFit& fit, double omega) {
  nlohmann::json j;
  j["omega"] = omega;
  j["law"] = fit.law.name();
  if (fit.law.kind == FitLaw::Kind::Power) j["exponent"] = fit.law.exponent;
  j["rate"] = fit.rate_estimate;
  j["residual"] = fit.residual;
  j["window"] = {fit.t_lo, fit.t_hi};
  j["samples"] = fit.samples;
  j["mismatch_warning"] = fit.mismatch_warning;
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = detail::open(path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------------------------
// Plots

struct Polyline {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline const char* palette(std::size_t k) {
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[k % (sizeof colors / sizeof *colors)];
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Writes `stem.svg` and `stem.csv` (columns series,x,y). Non-finite points are dropped from
/// the drawing but kept in the CSV.
inline void write_plot(const std::filesystem::path& stem, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       std::span<const Polyline> lines) {
  {
    auto csv = detail::open(stem.string() + ".csv");
    csv << "series,x,y\n";
    for (const auto& l : lines)
      for (const auto& [x, y] : l.points) csv << l.label << ',' << num(x) << ',' << num(y) << '\n';
  }
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& l : lines)
    for (const auto& [x, y] : l.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 1.0 : 0.0;
    x1 = x0 + 2.0;
  }
  if (!(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 - 1.0 : 0.0;
    y1 = y0 + 2.0;
  }
  constexpr double W = 720, H = 480, ml = 70, mr = 160, mt = 40, mb = 50;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

  auto svg = detail::open(stem.string() + ".svg");
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << detail::escape(title)
      << "</text>\n";
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\""
      << H - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.4g", xv);
    std::snprintf(by, sizeof by, "%.4g", yv);
    svg << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">"
        << bx << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << by
        << "</text>\n";
  }
  svg << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
      << detail::escape(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\">" << detail::escape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < lines.size(); ++k) {
    svg << "<polyline fill=\"none\" stroke=\"" << detail::palette(k)
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : lines[k].points)
      if (std::isfinite(x) && std::isfinite(y)) svg << px(x) << ',' << py(y) << ' ';
    svg << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(k + 1);
    svg << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - mr + 30
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << detail::palette(k) << "\"/>\n";
    svg << "<text x=\"" << W - mr + 34 << "\" y=\"" << ly << "\">"
        << detail::escape(lines[k].label) << "</text>\n";
  }
  svg << "</svg>\n";
}

}  // namespace chemofront::io
