#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "capbandit/error.hpp"
#include "capbandit/harness.hpp"

namespace capbandit {

struct PlotOptions {
  int width = 640;
  int height = 420;
  std::string title = "Error rate by capacity";
};

namespace plot_detail {

inline std::string num(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
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

// Colour-blind friendly palette, cycled by series index.
inline const char* colour(std::size_t i) {
  static const char* palette[] = {"#0072B2", "#D55E00", "#009E73", "#CC79A7",
                                  "#E69F00", "#56B4E9", "#000000", "#999999"};
  return palette[i % (sizeof palette / sizeof *palette)];
}

inline const char* dash_for(const std::string& policy) {
  if (policy == "random") return "6 4";
  if (policy.rfind("offline", 0) == 0) return "2 3";
  return nullptr;
}

}  // namespace plot_detail

/// Writes an SVG line chart of mean error against capacity. Two-agent tables
/// use alpha_1 on the x axis; wider profiles use their position in the grid.
/// Series with one point are drawn as markers only.
inline void write_sweep_svg(std::ostream& out, const SweepTable& table,
                            const PlotOptions& opt = {}) {
  using namespace plot_detail;
  if (table.rows.empty()) throw Error(ErrorKind::EmptyTable, "nothing to plot");

  const bool two_agent = std::all_of(table.rows.begin(), table.rows.end(), [](const auto& r) {
    return r.profile.size() == 2 && !r.profile.has_free_agent();
  });
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::vector<std::string> labels;  // profile labels, for the index axis
  for (const auto& r : table.rows) {
    const std::string label = profile_label(r.profile);
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
      labels.push_back(label);
      it = labels.end() - 1;
    }
    const double x = two_agent ? r.profile.alphas[0] : static_cast<double>(it - labels.begin());
    if (!series.count(r.policy)) order.push_back(r.policy);
    series[r.policy].emplace_back(x, r.mean_error);
  }
  for (auto& [name, pts] : series) std::stable_sort(pts.begin(), pts.end());

  const double x_lo = 0.0;
  const double x_hi = two_agent ? 1.0 : std::max(1.0, static_cast<double>(labels.size() - 1));
  double y_lo = 1.0, y_hi = 0.0;
  for (const auto& r : table.rows) {
    y_lo = std::min(y_lo, r.mean_error);
    y_hi = std::max(y_hi, r.mean_error);
  }
  y_lo = std::max(0.0, std::floor(y_lo * 20.0 - 1e-9) / 20.0);
  y_hi = std::min(1.0, std::ceil(y_hi * 20.0 + 1e-9) / 20.0);
  if (y_hi <= y_lo) y_hi = std::min(1.0, y_lo + 0.05);
  if (y_hi <= y_lo) y_lo = y_hi - 0.05;

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  const auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  const auto sy = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * ph; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
      << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(left + pw / 2, 1) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(opt.title) << "</text>\n";

  // Axes and ticks.
  out << "<g stroke=\"#444\" stroke-width=\"1\">\n"
      << "<line x1=\"" << num(left, 1) << "\" y1=\"" << num(top + ph, 1) << "\" x2=\""
      << num(left + pw, 1) << "\" y2=\"" << num(top + ph, 1) << "\"/>\n"
      << "<line x1=\"" << num(left, 1) << "\" y1=\"" << num(top, 1) << "\" x2=\"" << num(left, 1)
      << "\" y2=\"" << num(top + ph, 1) << "\"/>\n</g>\n";
  out << "<g class=\"ticks\">\n";
  const int x_ticks = two_agent ? 5 : static_cast<int>(labels.size()) - 1;
  for (int i = 0; i <= std::max(x_ticks, 0); ++i) {
    const double x = x_ticks > 0 ? x_lo + (x_hi - x_lo) * i / x_ticks : x_lo;
    const std::string text = two_agent ? num(x, 1) : escape(labels[static_cast<std::size_t>(i)]);
    out << "<line x1=\"" << num(sx(x), 1) << "\" y1=\"" << num(top + ph, 1) << "\" x2=\""
        << num(sx(x), 1) << "\" y2=\"" << num(top + ph + 5, 1) << "\" stroke=\"#444\"/>"
        << "<text x=\"" << num(sx(x), 1) << "\" y=\"" << num(top + ph + 18, 1)
        << "\" text-anchor=\"middle\">" << text << "</text>\n";
  }
  const int y_ticks = 5;
  for (int i = 0; i <= y_ticks; ++i) {
    const double y = y_lo + (y_hi - y_lo) * i / y_ticks;
    out << "<line x1=\"" << num(left - 5, 1) << "\" y1=\"" << num(sy(y), 1) << "\" x2=\""
        << num(left, 1) << "\" y2=\"" << num(sy(y), 1) << "\" stroke=\"#444\"/>"
        << "<text x=\"" << num(left - 8, 1) << "\" y=\"" << num(sy(y) + 4, 1)
        << "\" text-anchor=\"end\">" << num(y, 3) << "</text>\n";
  }
  out << "</g>\n";
  out << "<text class=\"axis-label\" x=\"" << num(left + pw / 2, 1) << "\" y=\""
      << num(opt.height - 12.0, 1) << "\" text-anchor=\"middle\">"
      << (two_agent ? "capacity of agent 1 (alpha_1)" : "capacity profile") << "</text>\n"
      << "<text class=\"axis-label\" x=\"18\" y=\"" << num(top + ph / 2, 1)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << num(top + ph / 2, 1)
      << ")\">mean error rate</text>\n";

  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& name = order[k];
    const auto& pts = series[name];
    const char* dash = dash_for(name);
    out << "<g class=\"series\" data-policy=\"" << escape(name) << "\">\n";
    if (pts.size() >= 2) {
      out << "<polyline fill=\"none\" stroke=\"" << colour(k) << "\" stroke-width=\"2\"";
      if (dash) out << " stroke-dasharray=\"" << dash << '"';
      out << " points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i)
        out << (i ? " " : "") << num(sx(pts[i].first), 2) << ',' << num(sy(pts[i].second), 2);
      out << "\"/>\n";
    } else {
      for (const auto& [x, y] : pts)
        out << "<circle cx=\"" << num(sx(x), 2) << "\" cy=\"" << num(sy(y), 2)
            << "\" r=\"4\" fill=\"" << colour(k) << "\"/>\n";
    }
    out << "</g>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    const double lx = left + pw + 15;
    out << "<line x1=\"" << num(lx, 1) << "\" y1=\"" << num(ly, 1) << "\" x2=\"" << num(lx + 24, 1)
        << "\" y2=\"" << num(ly, 1) << "\" stroke=\"" << colour(k) << "\" stroke-width=\"2\"";
    if (dash) out << " stroke-dasharray=\"" << dash << '"';
    out << "/><text x=\"" << num(lx + 30, 1) << "\" y=\"" << num(ly + 4, 1) << "\">"
        << escape(name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace capbandit
