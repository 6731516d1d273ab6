#pragma once

#include <cstdint>
#include <span>

#include "sdot/cost.hpp"
#include "sdot/measures.hpp"
#include "sdot/vec.hpp"

namespace sdot {

// Hypercube projection set C = { g : |g_j| <= radius }.
struct ProjectionBox {
  double radius = 0.0;
  int m = 0;

  bool contains(std::span<const double> g, double tol = 0.0) const {
    return static_cast<int>(g.size()) == m && max_abs(g) <= radius + tol;
  }
  double euclidean_diameter() const {
    return 2.0 * radius * std::sqrt(static_cast<double>(m));
  }
};

// Compact set K on the source side; the box radius is sup over K and the
// target support of the cost.
struct CompactSet {
  enum class Kind { kBall, kCube } kind = Kind::kBall;
  Vec center;     // ball
  double radius = 0.0;
  Vec lo, hi;     // cube

  static CompactSet ball(Vec center, double radius);
  static CompactSet cube(Vec lo, Vec hi);
  int dim() const;
};

// sup_{x in K, j} c(x, y_j), computed analytically from the cost's radial
// profile: for a ball, sup ||x - y|| = R + ||center - y||; for a cube the
// sup is attained at a vertex (per-coordinate farthest endpoint).
double box_radius(const CostFunction& cost, const DiscreteTarget& target,
                  const CompactSet& k);

ProjectionBox make_box(const CostFunction& cost, const DiscreteTarget& target,
                       const CompactSet& k);

struct RadiusEstimate {
  double radius = 0.0;
  std::int64_t n_used = 0;
  bool capped = false;  // n was capped below the DKW sample size
};

// Empirical (1 - w_min/8)-quantile of ||X|| with the DKW sample size
// n = ceil(32 log(2/delta) / w_min^2); guarantees mu(B(0,R)) >= 1 - w_min/4
// with probability >= 1 - delta. A positive cap overrides n (and voids the
// guarantee, which is flagged).
RadiusEstimate estimate_radius(const SourceMeasure& src, double w_min,
                               double delta, RngStream rng,
                               std::int64_t cap = 0);

// Per-coordinate clamp to [-radius, radius].
void clip_to_box(const ProjectionBox& box, std::span<double> g);
Vec clipped_to_box(const ProjectionBox& box, Vec g);

// Orthogonal projection onto the complement of span{1}: g - mean(g).
void project_gauge_inplace(std::span<double> g);
Vec project_gauge(Vec g);

}  // namespace sdot
