#ifndef JOINTFIT_QUADRATURE_HPP
#define JOINTFIT_QUADRATURE_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>

namespace jointfit {

// 15-point Gauss-Kronrod rule on [-1, 1] (symmetric half listed).
struct GaussKronrod15 {
  static constexpr int n_points = 15;
  static constexpr std::array<double, 8> abscissae = {
      0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
      0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
  static constexpr std::array<double, 8> weights = {
      0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
      0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};

  // Nodes and weights for [a, b].
  static void nodes(double a, double b, std::array<double, 15>& x, std::array<double, 15>& w) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    int k = 0;
    for (int i = 0; i < 7; ++i) {
      x[k] = mid - half * abscissae[i];
      w[k] = half * weights[i];
      ++k;
      x[k] = mid + half * abscissae[i];
      w[k] = half * weights[i];
      ++k;
    }
    x[k] = mid;
    w[k] = half * weights[7];
  }
};

// Integral of fn over [a, b] with the 15-point rule on `segments` equal
// subdivisions.
inline double integrate_gk15(const std::function<double(double)>& fn, double a, double b,
                             int segments = 7) {
  double total = 0.0;
  const double len = (b - a) / segments;
  std::array<double, 15> x, w;
  for (int s = 0; s < segments; ++s) {
    GaussKronrod15::nodes(a + s * len, a + (s + 1) * len, x, w);
    for (int i = 0; i < 15; ++i) total += w[i] * fn(x[i]);
  }
  return total;
}

// All nodes/weights for [0, t] split into `segments` equal parts.
inline void quadrature_grid(double t, int segments, Eigen::VectorXd& nodes,
                            Eigen::VectorXd& weights) {
  const int total = 15 * segments;
  nodes.resize(total);
  weights.resize(total);
  const double len = t / segments;
  std::array<double, 15> x, w;
  int k = 0;
  for (int s = 0; s < segments; ++s) {
    GaussKronrod15::nodes(s * len, (s + 1) * len, x, w);
    for (int i = 0; i < 15; ++i) {
      nodes[k] = x[i];
      weights[k] = w[i];
      ++k;
    }
  }
}

}  // namespace jointfit

#endif
