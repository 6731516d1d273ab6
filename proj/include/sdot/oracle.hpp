#pragma once

#include <memory>
#include <span>

#include "sdot/cost.hpp"
#include "sdot/measures.hpp"
#include "sdot/vec.hpp"

namespace sdot {

// Exact 1-D ground truth for the quadratic cost: the optimal map is the
// monotone rearrangement, so thresholds are source quantiles of the weight
// partial sums and the potential follows from the boundary equalities with
// the gauge fixed to g_1 = 0.
struct Oracle1D {
  SourcePtr src;
  DiscreteTarget target;
  Vec g_star;
  Vec thresholds;  // M-1 strictly increasing cell boundaries
};

// Requires: 1-D source with an invertible cdf, strictly increasing 1-D
// target support, quadratic cost.
Oracle1D solve_1d_exact(SourcePtr src, DiscreteTarget target);

// Laguerre cells of g for the 1-D quadratic cost, as intervals
// [lower[i], upper[i]] (empty when lower >= upper). Exact envelope over all
// pairwise boundaries, so empty cells are handled.
struct Cells1D {
  Vec lower;
  Vec upper;
};
Cells1D cell_bounds_1d(const DiscreteTarget& target, std::span<const double> g);

// Exact cell masses from the source cdf.
Vec cell_masses_exact_1d(const SourceMeasure& src, const DiscreteTarget& target,
                         std::span<const double> g);

// 1-D specialization of the semi-dual Hessian in the minimization
// convention (positive semidefinite Laplacian):
//   H_{i,i+1} = -f(b_i)/(y_{i+1}-y_i) at the boundary point
//   b_i = (y_i+y_{i+1})/2 + (g_i-g_{i+1})/(y_{i+1}-y_i),
//   H_ii = -sum of the off-diagonal row.
// Requires all cells to be nonempty adjacent intervals. Row-major M x M.
Vec hessian_1d(const SourceMeasure& src, const DiscreteTarget& target,
               std::span<const double> g);

// Exact L^p(mu)^p map error against the oracle map, integrating the
// disagreement set through the cdf.
double map_error_exact_1d(const Oracle1D& oracle, std::span<const double> g,
                          double p);

// Eigenvalues of a dense symmetric matrix (row-major m x m), ascending.
// Cyclic Jacobi; intended for the small Hessian diagnostics.
Vec symmetric_eigenvalues(Vec matrix, int m);

}  // namespace sdot
