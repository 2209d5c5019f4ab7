#include "jointfit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jointfit/data.hpp"
#include "jointfit/errors.hpp"

namespace jointfit {

namespace {
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;
}  // namespace

SvgPlot::SvgPlot(int width, int height) : width_(width), height_(height) {}

void SvgPlot::set_title(std::string title) { title_ = std::move(title); }

void SvgPlot::set_labels(std::string x, std::string y) {
  xlabel_ = std::move(x);
  ylabel_ = std::move(y);
}

void SvgPlot::add_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const std::string& label, bool step) {
  if (x.size() != y.size() || x.size() == 0) {
    throw ValidationError("plot series needs matching non-empty x/y");
  }
  series_.push_back({x, y, label, step, false});
}

void SvgPlot::add_bars(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() == 0) {
    throw ValidationError("plot series needs matching non-empty x/y");
  }
  series_.push_back({x, y, "", false, true});
}

std::string SvgPlot::render() const {
  if (series_.empty()) throw ValidationError("nothing to plot");

  double xmin = series_[0].x.minCoeff(), xmax = series_[0].x.maxCoeff();
  double ymin = series_[0].y.minCoeff(), ymax = series_[0].y.maxCoeff();
  for (const auto& s : series_) {
    xmin = std::min(xmin, s.x.minCoeff());
    xmax = std::max(xmax, s.x.maxCoeff());
    ymin = std::min(ymin, s.y.minCoeff());
    ymax = std::max(ymax, s.y.maxCoeff());
    if (s.bars) ymin = std::min(ymin, 0.0);
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double ml = 56, mr = 16, mt = title_.empty() ? 16 : 32, mb = 40;
  const double pw = width_ - ml - mr, ph = height_ - mt - mb;
  auto px = [&](double v) { return ml + pw * (v - xmin) / (xmax - xmin); };
  auto py = [&](double v) { return mt + ph * (1.0 - (v - ymin) / (ymax - ymin)); };
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
      << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes with simple min/mid/max ticks.
  svg << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">"
      << "<path d=\"M" << fmt(ml) << " " << fmt(mt) << " V" << fmt(mt + ph) << " H"
      << fmt(ml + pw) << "\"/></g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (double f : {0.0, 0.5, 1.0}) {
    const double xv = xmin + f * (xmax - xmin);
    const double yv = ymin + f * (ymax - ymin);
    svg << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(mt + ph + 16)
        << "\" text-anchor=\"middle\">" << format_double(xv) << "</text>\n";
    svg << "<text x=\"" << fmt(ml - 6) << "\" y=\"" << fmt(py(yv) + 4)
        << "\" text-anchor=\"end\">" << format_double(yv) << "</text>\n";
  }
  if (!xlabel_.empty()) {
    svg << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(height_ - 8)
        << "\" text-anchor=\"middle\">" << xlabel_ << "</text>\n";
  }
  if (!ylabel_.empty()) {
    svg << "<text transform=\"rotate(-90)\" x=\"" << fmt(-(mt + ph / 2)) << "\" y=\"14\""
        << " text-anchor=\"middle\">" << ylabel_ << "</text>\n";
  }
  if (!title_.empty()) {
    svg << "<text x=\"" << fmt(width_ / 2.0) << "\" y=\"20\" text-anchor=\"middle\""
        << " font-size=\"14\">" << title_ << "</text>\n";
  }
  svg << "</g>\n";

  int color_index = 0;
  double legend_y = mt + 14;
  for (const auto& s : series_) {
    const std::string color = kPalette[color_index % kPaletteSize];
    ++color_index;
    if (s.bars) {
      svg << "<g stroke=\"" << color << "\" stroke-width=\"2\">\n";
      for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        svg << "<line x1=\"" << fmt(px(s.x[i])) << "\" y1=\"" << fmt(py(0.0)) << "\" x2=\""
            << fmt(px(s.x[i])) << "\" y2=\"" << fmt(py(s.y[i])) << "\"/>\n";
      }
      svg << "</g>\n";
      continue;
    }
    svg << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" d=\"";
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (i == 0) {
        svg << "M" << fmt(px(s.x[i])) << " " << fmt(py(s.y[i]));
      } else if (s.step) {
        svg << " H" << fmt(px(s.x[i])) << " V" << fmt(py(s.y[i]));
      } else {
        svg << " L" << fmt(px(s.x[i])) << " " << fmt(py(s.y[i]));
      }
    }
    svg << "\"/>\n";
    if (!s.label.empty()) {
      svg << "<g font-family=\"sans-serif\" font-size=\"11\">"
          << "<line x1=\"" << fmt(ml + pw - 90) << "\" y1=\"" << fmt(legend_y - 4)
          << "\" x2=\"" << fmt(ml + pw - 74) << "\" y2=\"" << fmt(legend_y - 4)
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
          << "<text x=\"" << fmt(ml + pw - 70) << "\" y=\"" << fmt(legend_y) << "\">"
          << s.label << "</text></g>\n";
      legend_y += 16;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace jointfit
