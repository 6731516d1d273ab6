#include "sdot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_sorted_1d(const DiscreteTarget& target) {
  if (target.dim() != 1)
    throw std::invalid_argument("1-D oracle requires a one-dimensional target");
  for (int i = 0; i + 1 < target.size(); ++i)
    if (!(target.point(i)[0] < target.point(i + 1)[0]))
      throw std::invalid_argument("1-D oracle requires strictly increasing support");
}

// Boundary between cells i < j: c(x,y_i) - g_i = c(x,y_j) - g_j.
double pair_boundary(const DiscreteTarget& t, std::span<const double> g, int i, int j) {
  const double yi = t.point(i)[0], yj = t.point(j)[0];
  return 0.5 * (yi + yj) +
         (g[static_cast<std::size_t>(i)] - g[static_cast<std::size_t>(j)]) / (yj - yi);
}

double cdf_at(const SourceMeasure& src, double x) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return 1.0;
  return src.cdf(x);
}

}  // namespace

Oracle1D solve_1d_exact(SourcePtr src, DiscreteTarget target) {
  if (!src || src->dim() != 1 || !src->has_cdf())
    throw std::invalid_argument("solve_1d_exact: needs a 1-D source with a cdf");
  require_sorted_1d(target);
  const int m = target.size();

  Vec thresholds(static_cast<std::size_t>(m - 1));
  double cum = 0.0;
  for (int i = 0; i + 1 < m; ++i) {
    cum += target.weight(i);
    thresholds[static_cast<std::size_t>(i)] = src->quantile(cum);
  }
  for (int i = 0; i + 2 < m; ++i)
    if (!(thresholds[static_cast<std::size_t>(i)] < thresholds[static_cast<std::size_t>(i) + 1]))
      throw std::runtime_error("solve_1d_exact: thresholds not strictly increasing");

  Vec g(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i + 1 < m; ++i) {
    const double t = thresholds[static_cast<std::size_t>(i)];
    const double yi = target.point(i)[0], yn = target.point(i + 1)[0];
    g[static_cast<std::size_t>(i) + 1] = g[static_cast<std::size_t>(i)] +
                                         0.5 * (t - yn) * (t - yn) -
                                         0.5 * (t - yi) * (t - yi);
  }
  return {std::move(src), std::move(target), std::move(g), std::move(thresholds)};
}

Cells1D cell_bounds_1d(const DiscreteTarget& target, std::span<const double> g) {
  require_sorted_1d(target);
  const int m = target.size();
  if (static_cast<int>(g.size()) != m)
    throw std::invalid_argument("cell_bounds_1d: potential length != target size");
  Cells1D cells;
  cells.lower.assign(static_cast<std::size_t>(m), -kInf);
  cells.upper.assign(static_cast<std::size_t>(m), kInf);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < i; ++j)
      cells.lower[static_cast<std::size_t>(i)] =
          std::max(cells.lower[static_cast<std::size_t>(i)], pair_boundary(target, g, j, i));
    for (int j = i + 1; j < m; ++j)
      cells.upper[static_cast<std::size_t>(i)] =
          std::min(cells.upper[static_cast<std::size_t>(i)], pair_boundary(target, g, i, j));
  }
  return cells;
}

Vec cell_masses_exact_1d(const SourceMeasure& src, const DiscreteTarget& target,
                         std::span<const double> g) {
  if (src.dim() != 1 || !src.has_cdf())
    throw std::invalid_argument("cell_masses_exact_1d: needs a 1-D source with a cdf");
  const auto cells = cell_bounds_1d(target, g);
  const int m = target.size();
  Vec masses(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const double lo = cells.lower[static_cast<std::size_t>(i)];
    const double hi = cells.upper[static_cast<std::size_t>(i)];
    if (lo < hi)
      masses[static_cast<std::size_t>(i)] =
          std::max(0.0, cdf_at(src, hi) - cdf_at(src, lo));
  }
  return masses;
}

Vec hessian_1d(const SourceMeasure& src, const DiscreteTarget& target,
               std::span<const double> g) {
  if (src.dim() != 1 || !src.has_density())
    throw std::invalid_argument("hessian_1d: needs a 1-D source with a density");
  const auto cells = cell_bounds_1d(target, g);
  const int m = target.size();
  for (int i = 0; i < m; ++i) {
    const double lo = cells.lower[static_cast<std::size_t>(i)];
    const double hi = cells.upper[static_cast<std::size_t>(i)];
    if (!(lo < hi))
      throw std::runtime_error("hessian_1d: degenerate configuration (empty cell)");
    // Nonempty cells => only adjacent cells touch; the shared boundary must
    // be the adjacent pairwise one.
    if (i + 1 < m) {
      const double adj = pair_boundary(target, g, i, i + 1);
      const double scale = std::max(1.0, std::abs(hi));
      if (std::abs(adj - hi) > 1e-9 * scale)
        throw std::runtime_error("hessian_1d: degenerate configuration (reordered cells)");
    }
  }

  Vec h(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
  auto at = [&](int r, int c) -> double& {
    return h[static_cast<std::size_t>(r) * m + static_cast<std::size_t>(c)];
  };
  for (int i = 0; i + 1 < m; ++i) {
    const double b = cells.upper[static_cast<std::size_t>(i)];
    const double gap = target.point(i + 1)[0] - target.point(i)[0];
    const double fx = src.density(std::span<const double>(&b, 1));
    const double off = -fx / gap;
    at(i, i + 1) = off;
    at(i + 1, i) = off;
  }
  for (int i = 0; i < m; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j)
      if (j != i) row += at(i, j);
    at(i, i) = -row;
  }
  return h;
}

double map_error_exact_1d(const Oracle1D& oracle, std::span<const double> g,
                          double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("map_error_exact_1d: p must be >= 1");
  const DiscreteTarget& target = oracle.target;
  const int m = target.size();
  if (static_cast<int>(g.size()) != m)
    throw std::invalid_argument("map_error_exact_1d: potential length != target size");

  // Both maps are piecewise constant; integrate |y_a - y_b|^p over the
  // merged partition through the cdf.
  const auto cells = cell_bounds_1d(target, g);
  struct Piece {
    double upper;
    int cell;
  };
  std::vector<Piece> est;
  for (int i = 0; i < m; ++i) {
    const double lo = cells.lower[static_cast<std::size_t>(i)];
    const double hi = cells.upper[static_cast<std::size_t>(i)];
    if (lo < hi) est.push_back({hi, i});
  }
  std::sort(est.begin(), est.end(),
            [](const Piece& a, const Piece& b) { return a.upper < b.upper; });

  double err = 0.0;
  double lo = -kInf;
  std::size_t ie = 0, io = 0;
  const SourceMeasure& src = *oracle.src;
  while (lo < kInf) {
    const double ue = ie < est.size() ? est[ie].upper : kInf;
    const double uo = io < oracle.thresholds.size()
                          ? oracle.thresholds[io]
                          : kInf;
    const double hi = std::min(ue, uo);
    const int cell_est = est[std::min(ie, est.size() - 1)].cell;
    const int cell_orc = static_cast<int>(io);
    if (cell_est != cell_orc) {
      const double mass = std::max(0.0, cdf_at(src, hi) - cdf_at(src, lo));
      const double dist =
          std::abs(target.point(cell_est)[0] - target.point(cell_orc)[0]);
      err += mass * std::pow(dist, p);
    }
    if (ue <= hi && ie < est.size()) ++ie;
    if (uo <= hi && io < oracle.thresholds.size()) ++io;
    lo = hi;
  }
  return err;
}

Vec symmetric_eigenvalues(Vec a, int m) {
  if (static_cast<std::size_t>(m) * static_cast<std::size_t>(m) != a.size())
    throw std::invalid_argument("symmetric_eigenvalues: size mismatch");
  auto at = [&](int r, int c) -> double& {
    return a[static_cast<std::size_t>(r) * m + static_cast<std::size_t>(c)];
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-28) break;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double apq = at(i, j);
        if (apq == 0.0) continue;
        const double theta = (at(j, j) - at(i, i)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < m; ++k) {
          const double aik = at(i, k), ajk = at(j, k);
          at(i, k) = c * aik - s * ajk;
          at(j, k) = s * aik + c * ajk;
        }
        for (int k = 0; k < m; ++k) {
          const double aki = at(k, i), akj = at(k, j);
          at(k, i) = c * aki - s * akj;
          at(k, j) = s * aki + c * akj;
        }
      }
    }
  }
  Vec eig(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace sdot
