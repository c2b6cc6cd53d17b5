#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfl/io.hpp"

namespace dpfl {

struct Curve {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  int width = 760;
  int height = 480;
  bool log_y = false;
  std::string title;
  std::string x_label = "iteration";
  std::string y_label = "coefficient";
};

namespace detail_svg {

inline std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// round to a 1/2/5 ladder for tick spacing
inline double nice_step(double span, int ticks) {
  const double raw = span / std::max(1, ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

}  // namespace detail_svg

// Self-contained SVG line chart; no runtime rendering dependency.
inline std::string render_line_chart(const std::vector<Curve>& curves, const PlotOptions& opt) {
  if (curves.empty()) throw std::invalid_argument("render_line_chart: no curves");
  for (const auto& c : curves)
    if (c.x.empty() || c.x.size() != c.y.size())
      throw std::invalid_argument("render_line_chart: curve '" + c.label + "' empty or ragged");

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      const double yv = c.y[i];
      if (opt.log_y && yv <= 0) continue;
      xmin = std::min(xmin, c.x[i]);
      xmax = std::max(xmax, c.x[i]);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  if (!(xmin <= xmax) || !(ymin <= ymax))
    throw std::invalid_argument("render_line_chart: no plottable points");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + (ymin == 0 ? 1 : std::abs(ymin) * 0.1);

  const double ml = 72, mr = 16, mt = opt.title.empty() ? 16 : 34, mb = 46;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  auto tx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto ty = [&](double y) {
    if (opt.log_y)
      return mt + ph - (std::log10(y) - std::log10(ymin)) /
                          (std::log10(ymax) - std::log10(ymin)) * ph;
    return mt + ph - (y - ymin) / (ymax - ymin) * ph;
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
    << opt.height << "\" viewBox=\"0 0 " << opt.width << " " << opt.height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    s << "<text x=\"" << opt.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << detail_svg::esc(opt.title) << "</text>\n";

  // axes
  s << "<g stroke=\"#222\" stroke-width=\"1\">";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
    << mt + ph << "\"/>";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
    << "\"/></g>\n";

  // x ticks
  const double xstep = detail_svg::nice_step(xmax - xmin, 6);
  s << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9 * xstep; x += xstep) {
    s << "<line x1=\"" << tx(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << tx(x) << "\" y2=\""
      << mt + ph + 4 << "\" stroke=\"#222\"/>";
    s << "<text x=\"" << tx(x) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
      << fmt9(x) << "</text>\n";
  }
  // y ticks
  if (opt.log_y) {
    const int e0 = static_cast<int>(std::floor(std::log10(ymin)));
    const int e1 = static_cast<int>(std::ceil(std::log10(ymax)));
    for (int e = e0; e <= e1; ++e) {
      const double y = std::pow(10.0, e);
      if (y < ymin || y > ymax) continue;
      s << "<line x1=\"" << ml - 4 << "\" y1=\"" << ty(y) << "\" x2=\"" << ml << "\" y2=\"" << ty(y)
        << "\" stroke=\"#222\"/>";
      s << "<text x=\"" << ml - 7 << "\" y=\"" << ty(y) + 4 << "\" text-anchor=\"end\">1e" << e
        << "</text>\n";
    }
  } else {
    const double ystep = detail_svg::nice_step(ymax - ymin, 6);
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9 * ystep; y += ystep) {
      s << "<line x1=\"" << ml - 4 << "\" y1=\"" << ty(y) << "\" x2=\"" << ml << "\" y2=\"" << ty(y)
        << "\" stroke=\"#222\"/>";
      s << "<text x=\"" << ml - 7 << "\" y=\"" << ty(y) + 4 << "\" text-anchor=\"end\">" << fmt9(y)
        << "</text>\n";
    }
  }
  s << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opt.height - 8
    << "\" text-anchor=\"middle\">" << detail_svg::esc(opt.x_label) << "</text>\n";
  s << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << mt + ph / 2 << ")\">" << detail_svg::esc(opt.y_label) << "</text>\n";
  s << "</g>\n";

  // curves
  for (const auto& c : curves) {
    s << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.6\"";
    if (c.dashed) s << " stroke-dasharray=\"6 4\"";
    s << " points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (opt.log_y && c.y[i] <= 0) continue;
      s << tx(c.x[i]) << ',' << ty(c.y[i]) << ' ';
    }
    s << "\"/>\n";
  }

  // legend
  double ly = mt + 12;
  s << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (const auto& c : curves) {
    const double lx = ml + 12;
    s << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 26 << "\" y2=\""
      << ly - 4 << "\" stroke=\"" << c.color << "\" stroke-width=\"1.6\""
      << (c.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>";
    s << "<text x=\"" << lx + 32 << "\" y=\"" << ly << "\">" << detail_svg::esc(c.label)
      << "</text>\n";
    ly += 16;
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

inline const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

// Fig-style panel from run CSVs: per file, max Gamma (solid-ish color pair)
// and max |Phi|; multiple files overlay with distinct hues.
inline std::string plot_runs_svg(const std::vector<std::string>& csv_texts,
                                 const std::vector<std::string>& labels, const PlotOptions& opt) {
  if (csv_texts.empty()) throw std::invalid_argument("plot: no input CSVs");
  std::vector<Curve> curves;
  for (std::size_t f = 0; f < csv_texts.size(); ++f) {
    const auto rows = parse_run_csv(csv_texts[f]);
    if (rows.empty()) throw std::runtime_error("plot: CSV has no data rows");
    Curve gamma, phi;
    const std::string tag = labels.size() > f ? labels[f] : ("run" + std::to_string(f));
    gamma.label = tag + " max Gamma";
    gamma.color = kPalette[(2 * f) % 8];
    phi.label = tag + " max |Phi|";
    phi.color = kPalette[(2 * f + 1) % 8];
    phi.dashed = true;
    for (const auto& r : rows) {
      gamma.x.push_back(r.t);
      gamma.y.push_back(r.max_gamma);
      phi.x.push_back(r.t);
      phi.y.push_back(r.max_abs_phi);
    }
    curves.push_back(std::move(gamma));
    curves.push_back(std::move(phi));
  }
  return render_line_chart(curves, opt);
}

}  // namespace dpfl
