#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <utility>

#include "lrhess/bench.hpp"

namespace lrhess {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 30, kBottom = 60;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Axis {
  double lo, hi;
  bool log;
  std::vector<double> ticks;
};

class Canvas {
 public:
  Canvas(Axis x, Axis y) : x_(std::move(x)), y_(std::move(y)) {}

  double px(double v) const { return kLeft + frac(x_, v) * (kWidth - kLeft - kRight); }
  double py(double v) const { return kHeight - kBottom - frac(y_, v) * (kHeight - kTop - kBottom); }

  std::string render(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<Series>& series) const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    s << "<g stroke=\"black\" fill=\"none\">\n";
    s << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\""
      << fmt(y0) << "\"/>\n";
    s << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\""
      << fmt(y1) << "\"/>\n";
    s << "</g>\n<g font-size=\"11\">\n";
    for (double t : x_.ticks) {
      const double x = px(t);
      s << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x) << "\" y2=\""
        << fmt(y0 + 5) << "\" stroke=\"black\"/>\n";
      s << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">"
        << label(t) << "</text>\n";
    }
    for (double t : y_.ticks) {
      const double y = py(t);
      s << "<line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x0) << "\" y2=\""
        << fmt(y) << "\" stroke=\"black\"/>\n";
      s << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">"
        << label(t) << "</text>\n";
    }
    s << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(kHeight - 20)
      << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    s << "<text x=\"18\" y=\"" << fmt((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fmt((y0 + y1) / 2) << ")\">" << ylabel << "</text>\n";
    s << "</g>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
      const char* color = kColors[k % std::size(kColors)];
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < series[k].points.size(); ++i) {
        const auto [x, y] = series[k].points[i];
        s << (i ? " " : "") << fmt(px(x)) << ',' << fmt(py(y));
      }
      s << "\"/>\n";
      for (const auto& [x, y] : series[k].points)
        s << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
      s << "<line x1=\"" << fmt(x1 + 15) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(x1 + 40)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      s << "<text x=\"" << fmt(x1 + 46) << "\" y=\"" << fmt(ly + 4) << "\" font-size=\"11\">"
        << series[k].name << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
  }

 private:
  static double frac(const Axis& a, double v) {
    if (a.log) return (std::log10(v) - std::log10(a.lo)) / (std::log10(a.hi) - std::log10(a.lo));
    return (v - a.lo) / (a.hi - a.lo);
  }
  Axis x_, y_;
};

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

Axis linear_axis(double lo, double hi) {
  if (!(hi > lo)) hi = lo + 1.0;
  const double step = nice_step(hi - lo);
  Axis a{std::floor(lo / step) * step, std::ceil(hi / step) * step, false, {}};
  for (double t = a.lo; t <= a.hi + 0.5 * step; t += step) a.ticks.push_back(t);
  return a;
}

Axis log_axis(double lo, double hi) {
  double a = std::floor(std::log10(lo));
  double b = std::ceil(std::log10(hi));
  if (b <= a) b = a + 1;
  Axis axis{std::pow(10.0, a), std::pow(10.0, b), true, {}};
  for (double e = a; e <= b; e += 1) axis.ticks.push_back(std::pow(10.0, e));
  return axis;
}

std::string phase_plot(std::istream& in) {
  const auto summary = summarize(read_trials(in));
  std::map<std::pair<std::size_t, std::size_t>, Series> by_cell;
  double max_m = 0.0;
  for (const auto& s : summary) {
    auto& series = by_cell[{s.cell.n, s.cell.r}];
    series.name = "n=" + std::to_string(s.cell.n) + ", r=" + std::to_string(s.cell.r);
    series.points.emplace_back(static_cast<double>(s.cell.M), s.success_rate());
    max_m = std::max(max_m, static_cast<double>(s.cell.M));
  }
  std::vector<Series> series;
  for (auto& [key, s] : by_cell) series.push_back(std::move(s));
  Axis y{0.0, 1.0, false, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}};
  return Canvas(linear_axis(0.0, max_m > 0 ? max_m : 1.0), y)
      .render("Recovery success rate", "M (measurements)", "success rate", series);
}

std::string decay_plot(std::istream& in) {
  const auto records = read_decay(in);
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::size_t, std::vector<double>>> groups;
  for (const auto& d : records) groups[{d.n, d.r}][d.M].push_back(d.deviation);
  std::vector<Series> series;
  double xlo = 1e300, xhi = 0.0, ylo = 1e300, yhi = 0.0;
  for (auto& [key, by_m] : groups) {
    Series s{"n=" + std::to_string(key.first) + ", r=" + std::to_string(key.second), {}};
    for (auto& [m, devs] : by_m) {
      std::sort(devs.begin(), devs.end());
      const std::size_t k = devs.size() / 2;
      const double med = devs.size() % 2 ? devs[k] : 0.5 * (devs[k - 1] + devs[k]);
      if (m == 0 || !(med > 0.0)) continue;
      s.points.emplace_back(static_cast<double>(m), med);
      xlo = std::min(xlo, static_cast<double>(m));
      xhi = std::max(xhi, static_cast<double>(m));
      ylo = std::min(ylo, med);
      yhi = std::max(yhi, med);
    }
    series.push_back(std::move(s));
  }
  if (xhi == 0.0) {
    xlo = 1.0, xhi = 10.0, ylo = 0.1, yhi = 1.0;
  }
  return Canvas(log_axis(xlo, xhi), log_axis(ylo, yhi))
      .render("Operator deviation vs M", "M (log scale)", "median deviation (log scale)", series);
}

}  // namespace

std::string emit_plot(std::istream& csv, PlotKind kind) {
  return kind == PlotKind::phase ? phase_plot(csv) : decay_plot(csv);
}

}  // namespace lrhess
