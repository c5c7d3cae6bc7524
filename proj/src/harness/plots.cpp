#include "echo/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace echo {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string color(size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string escape(const std::string& s) {
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

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

void axes(std::ostringstream& out, double lo, double hi, const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const double y = y0 - (y0 - y1) * k / 4.0;
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(v)
        << "</text>\n";
  }
  if (!y_label.empty()) {
    out << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" transform=\"rotate(-90 16 " << (y0 + y1) / 2
        << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  }
}

void legend(std::ostringstream& out, const std::vector<Series>& series) {
  for (size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 16.0 * static_cast<double>(i);
    out << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
        << color(i) << "\"/>\n<text x=\"" << kWidth - kRight + 28 << "\" y=\"" << y + 9 << "\">"
        << escape(series[i].name) << "</text>\n";
  }
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series,
                          bool log_y) {
  auto tf = [log_y](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    for (double v : s.y) {
      if (std::isfinite(v) && (!log_y || v > 0)) {
        lo = std::min(lo, tf(v));
        hi = std::max(hi, tf(v));
      }
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) hi = lo + 1;
  const double xlo = x.empty() ? 0 : x.front(), xhi = x.empty() || x.back() == x.front() ? xlo + 1 : x.back();
  std::ostringstream out;
  header(out, title);
  axes(out, lo, hi, log_y ? "log10" : "");
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (size_t i = 0; i < series.size(); ++i) {
    out << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"1.5\" points=\"";
    for (size_t k = 0; k < std::min(x.size(), series[i].y.size()); ++k) {
      const double v = series[i].y[k];
      if (!std::isfinite(v) || (log_y && v <= 0)) continue;
      const double px = x0 + (x1 - x0) * (x[k] - xlo) / (xhi - xlo);
      const double py = y0 - (y0 - y1) * (tf(v) - lo) / (hi - lo);
      out << num(px) << "," << num(py) << " ";
    }
    out << "\"/>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">step</text>\n";
  legend(out, series);
  out << "</svg>\n";
  return out.str();
}

std::string svg_bar_plot(const std::string& title, const std::vector<std::string>& labels,
                         const std::vector<Series>& series, const std::string& y_label) {
  double hi = 0.0;
  for (const auto& s : series) {
    for (double v : s.y) {
      if (std::isfinite(v)) hi = std::max(hi, v);
    }
  }
  if (hi <= 0) hi = 1;
  std::ostringstream out;
  header(out, title);
  axes(out, 0.0, hi, y_label);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double group = (x1 - x0) / std::max<size_t>(1, labels.size());
  const double bar = 0.8 * group / std::max<size_t>(1, series.size());
  for (size_t g = 0; g < labels.size(); ++g) {
    for (size_t i = 0; i < series.size(); ++i) {
      if (g >= series[i].y.size() || !std::isfinite(series[i].y[g])) continue;
      const double h = (y0 - y1) * series[i].y[g] / hi;
      out << "<rect x=\"" << num(x0 + group * g + 0.1 * group + bar * i) << "\" y=\"" << num(y0 - h)
          << "\" width=\"" << num(bar) << "\" height=\"" << num(h) << "\" fill=\"" << color(i) << "\"/>\n";
    }
    out << "<text x=\"" << num(x0 + group * (g + 0.5)) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
        << escape(labels[g]) << "</text>\n";
  }
  legend(out, series);
  out << "</svg>\n";
  return out.str();
}

std::string svg_stick_figure(const std::string& title, const std::vector<StickLayer>& layers) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& l : layers) {
    for (Eigen::Index j = 0; j < l.joints.rows(); ++j) {
      xlo = std::min(xlo, l.joints(j, 0));
      xhi = std::max(xhi, l.joints(j, 0));
      ylo = std::min(ylo, l.joints(j, 1));
      yhi = std::max(yhi, l.joints(j, 1));
    }
  }
  if (!std::isfinite(xlo)) xlo = ylo = 0, xhi = yhi = 1;
  const double span = std::max({xhi - xlo, yhi - ylo, 1.0});
  const double cx = 0.5 * (xlo + xhi), cy = 0.5 * (ylo + yhi);
  const double scale = 0.85 * std::min(kWidth, kHeight - kTop) / span;
  auto px = [&](double x) { return kWidth / 2 + (x - cx) * scale; };
  auto py = [&](double y) { return kTop + (kHeight - kTop) / 2 - (y - cy) * scale; };

  std::ostringstream out;
  header(out, title);
  for (const auto& l : layers) {
    const std::string style = "stroke=\"" + l.color + "\" stroke-width=\"2\" stroke-opacity=\"" + num(l.opacity) +
                              "\"" + (l.dashed ? " stroke-dasharray=\"5,3\"" : "");
    for (Eigen::Index j = 0; j < l.joints.rows(); ++j) {
      const int p = j < static_cast<Eigen::Index>(l.parents.size()) ? l.parents[static_cast<size_t>(j)] : -1;
      if (p >= 0) {
        out << "<line x1=\"" << num(px(l.joints(p, 0))) << "\" y1=\"" << num(py(l.joints(p, 1))) << "\" x2=\""
            << num(px(l.joints(j, 0))) << "\" y2=\"" << num(py(l.joints(j, 1))) << "\" " << style << "/>\n";
      }
      out << "<circle cx=\"" << num(px(l.joints(j, 0))) << "\" cy=\"" << num(py(l.joints(j, 1)))
          << "\" r=\"2.5\" fill=\"" << l.color << "\" fill-opacity=\"" << num(l.opacity) << "\"/>\n";
    }
  }
  out << "<text x=\"12\" y=\"" << kHeight - 12 << "\">solid: ground truth, dashed: prediction</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace echo
