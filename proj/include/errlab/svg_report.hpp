// Deterministic SVG summary plot: mean MSE against replicate days, one
// series per (preparation, model), train and test panels side by side.
// Coordinates round to two decimals so the byte stream is stable across
// platforms and reruns.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "errlab/errors.hpp"
#include "errlab/experiments.hpp"

namespace errlab {

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  // Avoid the two textual zeros.
  if (std::string(buf) == "-0.00") return "0.00";
  return buf;
}

inline const char* series_color(std::size_t i) {
  static const char* palette[] = {"#1b6ca8", "#c8491d", "#2e8540", "#7b4fa6",
                                  "#b0801a", "#3a8f8a", "#a33f6f", "#5c5c5c"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace detail

// One polyline per (preparation, model) series, sorted by name for a stable
// legend. Throws MalformedResults when the table has no successful rows.
inline std::string render_report_svg(const ResultTable& table) {
  struct Point {
    std::size_t days;
    double train, test;
  };
  std::map<std::string, std::map<std::size_t, std::pair<double, std::size_t>>> train_acc,
      test_acc;
  for (const auto& r : table.rows) {
    if (r.failed) continue;
    const std::string key = r.preparation + " / " + r.model;
    auto& tr = train_acc[key][r.days];
    tr.first += r.train_mse;
    tr.second += 1;
    auto& te = test_acc[key][r.days];
    te.first += r.test_mse;
    te.second += 1;
  }
  if (train_acc.empty())
    throw MalformedResults("render_report_svg: no successful rows to plot");

  std::vector<std::string> names;
  for (const auto& [name, pts] : train_acc) names.push_back(name);

  std::vector<std::vector<Point>> series(names.size());
  double lo = 1e300, hi = -1e300;
  std::size_t dlo = static_cast<std::size_t>(-1), dhi = 0;
  for (std::size_t s = 0; s < names.size(); ++s) {
    for (const auto& [days, acc] : train_acc[names[s]]) {
      Point pt;
      pt.days = days;
      pt.train = acc.first / static_cast<double>(acc.second);
      const auto& te = test_acc[names[s]][days];
      pt.test = te.first / static_cast<double>(te.second);
      series[s].push_back(pt);
      lo = std::min({lo, pt.train, pt.test});
      hi = std::max({hi, pt.train, pt.test});
      dlo = std::min(dlo, days);
      dhi = std::max(dhi, days);
    }
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  if (dhi == dlo) ++dhi;

  // Layout: two 360x300 panels with shared y scale, 40px legend rows below.
  const double panel_w = 360, panel_h = 300, margin = 50, gap = 40;
  const double total_w = margin * 2 + panel_w * 2 + gap;
  const double legend_h = 22.0 * static_cast<double>(names.size()) + 20.0;
  const double total_h = margin * 2 + panel_h + legend_h;

  const auto xpos = [&](double panel_x0, std::size_t days) {
    return panel_x0 +
           panel_w * (static_cast<double>(days - dlo) / static_cast<double>(dhi - dlo));
  };
  const auto ypos = [&](double v) {
    return margin + panel_h * (1.0 - (v - lo) / (hi - lo));
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt2(total_w) +
         "\" height=\"" + detail::fmt2(total_h) + "\" viewBox=\"0 0 " +
         detail::fmt2(total_w) + " " + detail::fmt2(total_h) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  const double panels_x0[2] = {margin, margin + panel_w + gap};
  const char* panel_titles[2] = {"train MSE", "test MSE"};
  for (int pnl = 0; pnl < 2; ++pnl) {
    const double x0 = panels_x0[pnl];
    svg += "<rect x=\"" + detail::fmt2(x0) + "\" y=\"" + detail::fmt2(margin) +
           "\" width=\"" + detail::fmt2(panel_w) + "\" height=\"" + detail::fmt2(panel_h) +
           "\" fill=\"none\" stroke=\"#444444\"/>\n";
    svg += "<text x=\"" + detail::fmt2(x0 + panel_w / 2) + "\" y=\"" +
           detail::fmt2(margin - 12) +
           "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">" +
           panel_titles[pnl] + "</text>\n";
    // y axis labels at lo and hi, x axis labels at every distinct day
    svg += "<text x=\"" + detail::fmt2(x0 - 6) + "\" y=\"" + detail::fmt2(ypos(lo)) +
           "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
           detail::fmt2(lo) + "</text>\n";
    svg += "<text x=\"" + detail::fmt2(x0 - 6) + "\" y=\"" + detail::fmt2(ypos(hi) + 10) +
           "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
           detail::fmt2(hi) + "</text>\n";
    std::vector<std::size_t> days_seen;
    for (const auto& sv : series)
      for (const auto& pt : sv) days_seen.push_back(pt.days);
    std::sort(days_seen.begin(), days_seen.end());
    days_seen.erase(std::unique(days_seen.begin(), days_seen.end()), days_seen.end());
    for (std::size_t d : days_seen) {
      svg += "<text x=\"" + detail::fmt2(xpos(x0, d)) + "\" y=\"" +
             detail::fmt2(margin + panel_h + 16) +
             "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">" +
             std::to_string(d) + "</text>\n";
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
      std::string pts;
      for (const auto& pt : series[s]) {
        const double v = pnl == 0 ? pt.train : pt.test;
        if (!pts.empty()) pts += " ";
        pts += detail::fmt2(xpos(x0, pt.days)) + "," + detail::fmt2(ypos(v));
      }
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(detail::series_color(s)) +
             "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      for (const auto& pt : series[s]) {
        const double v = pnl == 0 ? pt.train : pt.test;
        svg += "<circle cx=\"" + detail::fmt2(xpos(x0, pt.days)) + "\" cy=\"" +
               detail::fmt2(ypos(v)) + "\" r=\"2.50\" fill=\"" +
               std::string(detail::series_color(s)) + "\"/>\n";
      }
    }
  }

  const double leg_y0 = margin + panel_h + 40;
  for (std::size_t s = 0; s < names.size(); ++s) {
    const double y = leg_y0 + 22.0 * static_cast<double>(s);
    svg += "<rect x=\"" + detail::fmt2(margin) + "\" y=\"" + detail::fmt2(y - 9) +
           "\" width=\"18.00\" height=\"10.00\" fill=\"" +
           std::string(detail::series_color(s)) + "\"/>\n";
    svg += "<text x=\"" + detail::fmt2(margin + 26) + "\" y=\"" + detail::fmt2(y) +
           "\" font-family=\"monospace\" font-size=\"12\">" + names[s] + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline void write_report_svg(const ResultTable& table, const std::string& path) {
  const std::string svg = render_report_svg(table);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_report_svg: cannot open " + path);
  out << svg;
}

// FNV-1a over the rendered bytes; handy for pinning plot output in tests.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace errlab
