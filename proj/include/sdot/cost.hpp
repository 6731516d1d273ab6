#pragma once

#include <span>
#include <string>

#include "sdot/measures.hpp"
#include "sdot/vec.hpp"

namespace sdot {

enum class CostKind { kQuadratic, kPowerP };

// Ground cost c(x,y): Quadratic is 0.5*||x-y||^2, PowerP is ||x-y||^p with
// p in (1, inf). Both are radial in ||x-y||.
struct CostFunction {
  CostKind kind = CostKind::kQuadratic;
  double p = 2.0;

  static CostFunction quadratic() { return {CostKind::kQuadratic, 2.0}; }
  static CostFunction power(double p);

  // Cost as a function of the squared distance s2 = ||x-y||^2.
  double from_squared_distance(double s2) const;
  // Cost as a function of the distance s = ||x-y||.
  double from_distance(double s) const { return from_squared_distance(s * s); }

  // Full-checking evaluation (dimension match, finite coordinates).
  double evaluate(std::span<const double> x, std::span<const double> y) const;

  std::string describe() const;
};

struct CellAssignment {
  double value = 0.0;  // g^c(x) = min_j c(x, y_j) - g_j
  int cell = 0;        // achieving index, ties broken by lowest index
};

// Vectorial c-transform; the achieving index identifies the Laguerre cell
// containing x.
CellAssignment c_transform(const CostFunction& cost, const DiscreteTarget& target,
                           std::span<const double> g, std::span<const double> x);

// Map estimator T(g): sends x to the support point of its Laguerre cell.
std::span<const double> assign_map(const CostFunction& cost,
                                   const DiscreteTarget& target,
                                   std::span<const double> g,
                                   std::span<const double> x);

}  // namespace sdot
