#ifndef JOINTFIT_SVG_HPP
#define JOINTFIT_SVG_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace jointfit {

// Minimal SVG line/step chart writer used for KM curves, traces, ACF bars
// and density plots.
class SvgPlot {
 public:
  SvgPlot(int width = 640, int height = 400);

  void set_title(std::string title);
  void set_labels(std::string x, std::string y);

  // Polyline through (x, y); step=true draws a right-continuous step curve.
  void add_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                const std::string& label = "", bool step = false);
  // Vertical bars from 0 to y (ACF style).
  void add_bars(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

  std::string render() const;

 private:
  struct Series {
    Eigen::VectorXd x, y;
    std::string label;
    bool step = false;
    bool bars = false;
  };
  int width_, height_;
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
};

}  // namespace jointfit

#endif
