#include "sdot/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdot/errors.hpp"

namespace sdot {

CompactSet CompactSet::ball(Vec center, double radius) {
  if (center.empty()) throw ConfigError("compact ball: empty center");
  if (!(radius >= 0.0)) throw ConfigError("compact ball: radius must be >= 0");
  CompactSet k;
  k.kind = Kind::kBall;
  k.center = std::move(center);
  k.radius = radius;
  return k;
}

CompactSet CompactSet::cube(Vec lo, Vec hi) {
  if (lo.empty() || lo.size() != hi.size())
    throw ConfigError("compact cube: bounds dimension mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw ConfigError("compact cube: requires lo <= hi");
  CompactSet k;
  k.kind = Kind::kCube;
  k.lo = std::move(lo);
  k.hi = std::move(hi);
  return k;
}

int CompactSet::dim() const {
  return static_cast<int>(kind == Kind::kBall ? center.size() : lo.size());
}

double box_radius(const CostFunction& cost, const DiscreteTarget& target,
                  const CompactSet& k) {
  if (k.dim() != target.dim())
    throw ConfigError("box_radius: compact set dimension != target dimension");
  double worst = 0.0;
  for (int j = 0; j < target.size(); ++j) {
    const auto y = target.point(j);
    double c;
    if (k.kind == CompactSet::Kind::kBall) {
      const double s = k.radius + std::sqrt(squared_distance(k.center, y));
      c = cost.from_distance(s);
    } else {
      double s2 = 0.0;
      for (int i = 0; i < target.dim(); ++i) {
        const double a = std::abs(y[static_cast<std::size_t>(i)] - k.lo[static_cast<std::size_t>(i)]);
        const double b = std::abs(k.hi[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]);
        const double far = std::max(a, b);
        s2 += far * far;
      }
      c = cost.from_squared_distance(s2);
    }
    worst = std::max(worst, c);
  }
  return worst;
}

ProjectionBox make_box(const CostFunction& cost, const DiscreteTarget& target,
                       const CompactSet& k) {
  return {box_radius(cost, target, k), target.size()};
}

RadiusEstimate estimate_radius(const SourceMeasure& src, double w_min,
                               double delta, RngStream rng, std::int64_t cap) {
  if (!(w_min > 0.0 && w_min <= 1.0))
    throw std::invalid_argument("estimate_radius: w_min must lie in (0,1]");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("estimate_radius: delta must lie in (0,1)");

  const double n_real = 32.0 * std::log(2.0 / delta) / (w_min * w_min);
  std::int64_t n = static_cast<std::int64_t>(std::ceil(n_real));
  bool capped = false;
  if (cap > 0 && cap < n) {
    n = cap;
    capped = true;
  }

  Vec norms(static_cast<std::size_t>(n));
  Vec x(static_cast<std::size_t>(src.dim()));
  for (auto& v : norms) {
    src.sample(rng, x);
    v = norm(x);
  }
  // Empirical quantile: inf{ r : F_n(r) >= 1 - w_min/8 } is the k-th order
  // statistic with k = ceil(n * (1 - w_min/8)).
  const double q = 1.0 - w_min / 8.0;
  std::int64_t k = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(n)));
  k = std::clamp<std::int64_t>(k, 1, n);
  std::nth_element(norms.begin(), norms.begin() + (k - 1), norms.end());
  return {norms[static_cast<std::size_t>(k - 1)], n, capped};
}

void clip_to_box(const ProjectionBox& box, std::span<double> g) {
  if (static_cast<int>(g.size()) != box.m)
    throw std::invalid_argument("clip_to_box: potential length != box dimension");
  for (auto& v : g) v = std::clamp(v, -box.radius, box.radius);
}

Vec clipped_to_box(const ProjectionBox& box, Vec g) {
  clip_to_box(box, g);
  return g;
}

void project_gauge_inplace(std::span<double> g) {
  const double m = mean(g);
  for (auto& v : g) v -= m;
}

Vec project_gauge(Vec g) {
  project_gauge_inplace(g);
  return g;
}

}  // namespace sdot
