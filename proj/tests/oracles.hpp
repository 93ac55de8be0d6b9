#pragma once

// Slow reference implementations used only by the tests. None of them share
// code with the library beyond the data containers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "fploc/floorplan.hpp"
#include "fploc/measurement.hpp"

namespace oracle {

/// Squared distance from every pixel to the nearest edge pixel, by scanning
/// every edge pixel. -1 everywhere when the mask is empty.
inline std::vector<std::int64_t> edt_squared(const fploc::EdgeMask& mask)
{
  std::vector<Eigen::Vector2i> edges;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.edge(x, y)) {
        edges.emplace_back(x, y);
      }
    }
  }
  std::vector<std::int64_t> out(static_cast<std::size_t>(mask.width()) * mask.height(), -1);
  if (edges.empty()) {
    return out;
  }
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (const auto& e : edges) {
        const std::int64_t dx = x - e.x();
        const std::int64_t dy = y - e.y();
        best = std::min(best, dx * dx + dy * dy);
      }
      out[static_cast<std::size_t>(y) * mask.width() + x] = best;
    }
  }
  return out;
}

/// Marches along the ray in steps of σ/`subdivision` and reports the first
/// sample that falls on an Occupied cell. Chords through a cell shorter than
/// the step can be skipped.
inline fploc::RayHit march_raycast(const fploc::FloorPlan& plan, const Eigen::Vector2d& origin, double direction,
                                   double max_range, int subdivision = 4)
{
  fploc::RayHit out;
  const double step = plan.resolution() / subdivision;
  const Eigen::Vector2d d(std::cos(direction), std::sin(direction));
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * step;
    if (t > max_range) {
      return out;
    }
    const Eigen::Vector2d p = origin + t * d;
    if (!plan.contains(p)) {
      return out;
    }
    if (plan.occupied_at(p)) {
      out.hit = true;
      out.range_m = t;
      out.point = p;
      return out;
    }
  }
}

/// Square-window erosion or dilation of a binary grid; cells outside the grid
/// count as 0.
inline std::vector<std::uint8_t> window_op(const std::vector<std::uint8_t>& g, int w, int h, int r, bool erode)
{
  std::vector<std::uint8_t> out(g.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      bool any = false;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          const bool v = nx >= 0 && ny >= 0 && nx < w && ny < h && g[static_cast<std::size_t>(ny) * w + nx];
          all = all && v;
          any = any || v;
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = (erode ? all : any) ? 1 : 0;
    }
  }
  return out;
}

/// Opening then closing of the Occupied set on an unbounded free background,
/// emulated by padding the grid far enough that the border never matters.
inline std::vector<std::uint8_t> open_close(const fploc::FloorPlan& plan, int open_r, int close_r)
{
  const int pad = 2 * std::max(open_r, close_r) + 1;
  const int w = plan.width() + 2 * pad;
  const int h = plan.height() + 2 * pad;
  std::vector<std::uint8_t> g(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < plan.height(); ++y) {
    for (int x = 0; x < plan.width(); ++x) {
      g[static_cast<std::size_t>(y + pad) * w + x + pad] = plan.occupied(x, y) ? 1 : 0;
    }
  }
  g = window_op(window_op(g, w, h, open_r, true), w, h, open_r, false);
  g = window_op(window_op(g, w, h, close_r, false), w, h, close_r, true);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(plan.width()) * plan.height());
  for (int y = 0; y < plan.height(); ++y) {
    for (int x = 0; x < plan.width(); ++x) {
      out[static_cast<std::size_t>(y) * plan.width() + x] = g[static_cast<std::size_t>(y + pad) * w + x + pad];
    }
  }
  return out;
}

/// Mean nearest distance from the pixels of `from` to those of `to`.
inline double directed_chamfer(const fploc::EdgeMask& from, const fploc::EdgeMask& to)
{
  double sum = 0.0;
  long n = 0;
  for (int y = 0; y < from.height(); ++y) {
    for (int x = 0; x < from.width(); ++x) {
      if (!from.edge(x, y)) {
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (int v = 0; v < to.height(); ++v) {
        for (int u = 0; u < to.width(); ++u) {
          if (to.edge(u, v)) {
            best = std::min(best, std::hypot(static_cast<double>(x - u), static_cast<double>(y - v)));
          }
        }
      }
      sum += best;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

inline double symmetric_chamfer(const fploc::EdgeMask& a, const fploc::EdgeMask& b)
{
  return 0.5 * (directed_chamfer(a, b) + directed_chamfer(b, a));
}

/// Wilson–Hilferty sample-size bound evaluated in long double.
inline long double wilson_hilferty(int k, long double epsilon, long double z)
{
  const long double km1 = static_cast<long double>(k - 1);
  const long double a = 2.0L / (9.0L * km1);
  const long double c = 1.0L - a + std::sqrt(a) * z;
  return km1 / (2.0L * epsilon) * c * c * c;
}

/// Regularized lower incomplete gamma P(a, x) by series / continued fraction.
inline double gamma_p(double a, double x)
{
  if (x <= 0.0) {
    return 0.0;
  }
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) {
        break;
      }
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a;
  double c = 1.0 / 1e-300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    d = std::abs(d) < 1e-300 ? 1e-300 : d;
    c = b + an / c;
    c = std::abs(c) < 1e-300 ? 1e-300 : c;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) {
      break;
    }
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

/// Exact chi-square quantile by bisection on the CDF.
inline double chi2_quantile(int df, double p)
{
  double lo = 0.0;
  double hi = std::max(10.0, 10.0 * df);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gamma_p(0.5 * df, 0.5 * mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
