#include "sdot/cost.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sdot/errors.hpp"

namespace sdot {

CostFunction CostFunction::power(double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw ConfigError("power cost requires p in (1, inf)");
  return {CostKind::kPowerP, p};
}

double CostFunction::from_squared_distance(double s2) const {
  if (kind == CostKind::kQuadratic) return 0.5 * s2;
  return std::pow(s2, 0.5 * p);
}

double CostFunction::evaluate(std::span<const double> x,
                              std::span<const double> y) const {
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("cost evaluation: dimension mismatch");
  if (!all_finite(x) || !all_finite(y))
    throw std::invalid_argument("cost evaluation: non-finite coordinate");
  return from_squared_distance(squared_distance(x, y));
}

std::string CostFunction::describe() const {
  if (kind == CostKind::kQuadratic) return "quadratic";
  std::ostringstream s;
  s << "powerp(p=" << p << ")";
  return s.str();
}

CellAssignment c_transform(const CostFunction& cost, const DiscreteTarget& target,
                           std::span<const double> g, std::span<const double> x) {
  const int m = target.size();
  const int d = target.dim();
  if (static_cast<int>(g.size()) != m)
    throw std::invalid_argument("c_transform: potential length != target size");
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("c_transform: point dimension != target dimension");

  const double* points = target.points().data();
  double best = std::numeric_limits<double>::infinity();
  int best_j = 0;
  for (int j = 0; j < m; ++j) {
    const double* y = points + static_cast<std::size_t>(j) * d;
    double s2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double diff = x[static_cast<std::size_t>(k)] - y[k];
      s2 += diff * diff;
    }
    const double v = cost.from_squared_distance(s2) - g[static_cast<std::size_t>(j)];
    if (v < best) {  // strict: ties keep the lowest index
      best = v;
      best_j = j;
    }
  }
  return {best, best_j};
}

std::span<const double> assign_map(const CostFunction& cost,
                                   const DiscreteTarget& target,
                                   std::span<const double> g,
                                   std::span<const double> x) {
  return target.point(c_transform(cost, target, g, x).cell);
}

}  // namespace sdot
