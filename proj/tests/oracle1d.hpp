#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace testing {

/// Plane wave in a homogeneous column y in [y0, y1]: Neumann load p(t) on
/// top, absorbing bottom, top absorbing on time intervals ending after t1. Written independently
/// of the library: lumped 1D P1 / 3-point scheme per unit width.
struct Column1D {
  double y0, y1, h, tau, t1;
  std::size_t n_steps;
  std::function<double(double)> p;

  /// u[n][j], j = 0 at the bottom.
  std::vector<std::vector<double>> solve() const {
    const int n = static_cast<int>(std::lround((y1 - y0) / h));
    std::vector<double> m(n + 1, h);
    m[0] = m[n] = 0.5 * h;
    auto stiff = [&](const std::vector<double>& u) {
      std::vector<double> k(n + 1, 0.0);
      for (int j = 0; j < n; ++j) {
        const double d = (u[j + 1] - u[j]) / h;
        k[j] -= d;
        k[j + 1] += d;
      }
      return k;
    };
    std::vector<std::vector<double>> out(n_steps + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t s = 0; s < n_steps; ++s) {
      const double t = static_cast<double>(s) * tau;
      const auto& u = out[s];
      const std::vector<double> k = stiff(u);
      std::vector<double>& next = out[s + 1];
      for (int j = 0; j <= n; ++j) {
        const double load = j == n ? p(t) : 0.0;
        if (s == 0) {
          next[j] = u[j] + 0.5 * tau * tau * (load - k[j]) / m[j];
          continue;
        }
        // Absorbing terms on the half steps before and after t.
        const double t_next = static_cast<double>(s + 1) * tau;
        double bm = 0.0, bp = 0.0;
        if (j == 0) bm = bp = 1.0;
        if (j == n) {
          bm = t > t1 ? 1.0 : 0.0;
          bp = t_next > t1 ? 1.0 : 0.0;
        }
        const auto& um = out[s - 1];
        next[j] = ((2.0 * m[j] - 0.5 * tau * (bp - bm)) * u[j] - tau * tau * k[j] - (m[j] - 0.5 * tau * bm) * um[j] +
                   tau * tau * load) /
                  (m[j] + 0.5 * tau * bp);
      }
    }
    return out;
  }
};

/// d'Alembert solution for the sine pulse of frequency omega entering at y1.
inline double plane_wave_exact(double y, double t, double y1, double omega) {
  const double s = t - (y1 - y);
  if (s <= 0.0 || s >= 2.0 * std::numbers::pi / omega) return 0.0;
  return (1.0 - std::cos(omega * s)) / omega;
}

}  // namespace testing
