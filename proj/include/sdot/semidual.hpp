#pragma once

#include <cstdint>
#include <span>

#include "sdot/cost.hpp"
#include "sdot/measures.hpp"
#include "sdot/rng.hpp"
#include "sdot/vec.hpp"

namespace sdot {

// Convexified semi-dual objective: the module minimizes
//   H(g) = E_X[ h(g, X) ],   h(g, x) = -g^c(x) - <w, g>,
// so the OT cost is reported as -H. Gradient convention:
// grad H(g)_i = mu(L_i(g)) - w_i.

// Streaming mean/variance accumulator; merge order is fixed by the caller
// so sharded reductions are bit-stable.
struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const Welford& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double d = o.mean - mean;
    const std::int64_t total = n + o.n;
    mean += d * static_cast<double>(o.n) / static_cast<double>(total);
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) /
                     static_cast<double>(total);
    n = total;
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_err() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

struct MeanStdErr {
  double mean = 0.0;
  double std_err = 0.0;
  std::int64_t n = 0;
};

// Per-sample objective h(g, x).
double h_sample(const CostFunction& cost, const DiscreteTarget& target,
                std::span<const double> g, std::span<const double> x);

// Per-sample subgradient e_cell - w (unbiased for grad H).
void subgradient_sample(const CostFunction& cost, const DiscreteTarget& target,
                        std::span<const double> g, std::span<const double> x,
                        std::span<double> out);

// Monte-Carlo estimate of H(g) over n fresh draws. The stream is taken by
// value: passing the same stream value twice replays the same draws, which
// is the common-random-numbers mode.
MeanStdErr estimate_H(const CostFunction& cost, const DiscreteTarget& target,
                      std::span<const double> g, const SourceMeasure& src,
                      std::int64_t n, RngStream rng, int shards = 1);

// Single-pass common-random-numbers estimate of H(g) - H(g_ref).
MeanStdErr estimate_H_gap(const CostFunction& cost, const DiscreteTarget& target,
                          std::span<const double> g, std::span<const double> g_ref,
                          const SourceMeasure& src, std::int64_t n, RngStream rng,
                          int shards = 1);

// Empirical Laguerre-cell frequencies; the returned vector sums to 1.
Vec estimate_cell_masses(const CostFunction& cost, const DiscreteTarget& target,
                         std::span<const double> g, const SourceMeasure& src,
                         std::int64_t n, RngStream rng, int shards = 1);

}  // namespace sdot
