#include "imputeinr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "imputeinr/errors.hpp"
#include "imputeinr/timeseries.hpp"

namespace imputeinr {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (lo > hi) lo = 0, hi = 1;
    if (lo == hi) lo -= 0.5, hi += 0.5;
  }
};

void panel(std::ostringstream& os, const std::string& title, const std::vector<SvgSeries>& series,
           double x0, double y0, double width, double height) {
  const double ml = 60, mr = 20, mt = 24, mb = 30;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  Range xr, yr;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        xr.add(s.x[i]);
        yr.add(s.y[i]);
      }
  xr.settle();
  yr.settle();
  const auto px = [&](double x) { return x0 + ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return y0 + mt + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

  os << "<text x=\"" << fmt(x0 + ml) << "\" y=\"" << fmt(y0 + 16) << "\" font-size=\"13\">"
     << escape(title) << "</text>\n";
  os << "<rect x=\"" << fmt(x0 + ml) << "\" y=\"" << fmt(y0 + mt) << "\" width=\"" << fmt(pw)
     << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const auto label = [&](double x, double y, const std::string& anchor, double v) {
    os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"10\" text-anchor=\"" << anchor
       << "\">" << fmt(v) << "</text>\n";
  };
  label(x0 + ml - 4, y0 + mt + 10, "end", yr.hi);
  label(x0 + ml - 4, y0 + mt + ph, "end", yr.lo);
  label(x0 + ml, y0 + mt + ph + 14, "start", xr.lo);
  label(x0 + ml + pw, y0 + mt + ph + 14, "end", xr.hi);

  double legend_x = x0 + ml + pw;
  for (auto it = series.rbegin(); it != series.rend(); ++it) {
    os << "<text x=\"" << fmt(legend_x) << "\" y=\"" << fmt(y0 + 16) << "\" font-size=\"10\" text-anchor=\"end\" fill=\""
       << it->color << "\">" << escape(it->label) << "</text>\n";
    legend_x -= 8.0 * static_cast<double>(it->label.size()) + 12.0;
  }

  for (const auto& s : series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          os << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"2\" fill=\""
             << s.color << "\"/>\n";
      continue;
    }
    std::string points;
    const auto flush = [&] {
      if (!points.empty())
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"" << points
           << "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      points += (points.empty() ? "" : " ") + fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
    }
    flush();
  }
}

std::string document(double width, double height, const std::string& body) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body +
         "</svg>\n";
}

}  // namespace

std::string svg_plot(const std::string& title, const std::vector<SvgSeries>& series, double width,
                     double height) {
  std::ostringstream os;
  panel(os, title, series, 0, 0, width, height);
  return document(width, height, os.str());
}

std::string svg_loss_curve(const TrainResult& result) {
  SvgSeries s{"mean loss", {}, {}};
  for (const auto& e : result.curve) {
    s.x.push_back(static_cast<double>(e.epoch));
    s.y.push_back(e.mean_loss);
  }
  return svg_plot("training loss", {s});
}

std::string svg_imputation_overlay(const Matrix& imputed, const Matrix& observed, const Matrix& mask,
                                   const std::vector<std::string>& names, const Matrix* ground_truth) {
  require_same_shape(imputed, observed, "svg overlay");
  require_same_shape(imputed, mask, "svg overlay mask");
  const double width = 640, height = 200;
  std::ostringstream os;
  for (std::size_t v = 0; v < imputed.rows; ++v) {
    std::vector<double> x(imputed.cols);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = static_cast<double>(t);
    std::vector<SvgSeries> series;
    if (ground_truth) {
      SvgSeries g{"truth", x, {}, "#2ca02c"};
      for (std::size_t t = 0; t < x.size(); ++t) g.y.push_back((*ground_truth)(v, t));
      series.push_back(std::move(g));
    }
    SvgSeries imp{"imputed", x, {}, "#d62728"};
    SvgSeries obs{"observed", x, {}, "#1f77b4", true};
    for (std::size_t t = 0; t < x.size(); ++t) {
      imp.y.push_back(imputed(v, t));
      obs.y.push_back(mask(v, t) == 1.0 ? observed(v, t) : std::numeric_limits<double>::quiet_NaN());
    }
    series.push_back(std::move(imp));
    series.push_back(std::move(obs));
    const std::string name = v < names.size() ? names[v] : "v" + std::to_string(v);
    panel(os, name, series, 0, height * static_cast<double>(v), width, height);
  }
  return document(width, height * static_cast<double>(std::max<std::size_t>(imputed.rows, 1)), os.str());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

}  // namespace imputeinr
