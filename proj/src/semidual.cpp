#include "sdot/semidual.hpp"

#include <stdexcept>
#include <vector>

namespace sdot {

namespace {

std::vector<std::int64_t> shard_sizes(std::int64_t n, int shards) {
  if (shards < 1) throw std::invalid_argument("shard count must be >= 1");
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(shards));
  const std::int64_t base = n / shards;
  const std::int64_t extra = n % shards;
  for (int i = 0; i < shards; ++i)
    sizes[static_cast<std::size_t>(i)] = base + (i < extra ? 1 : 0);
  return sizes;
}

}  // namespace

double h_sample(const CostFunction& cost, const DiscreteTarget& target,
                std::span<const double> g, std::span<const double> x) {
  const double value = c_transform(cost, target, g, x).value;
  return -value - dot(target.weights(), g);
}

void subgradient_sample(const CostFunction& cost, const DiscreteTarget& target,
                        std::span<const double> g, std::span<const double> x,
                        std::span<double> out) {
  const int cell = c_transform(cost, target, g, x).cell;
  const Vec& w = target.weights();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = -w[j];
  out[static_cast<std::size_t>(cell)] += 1.0;
}

MeanStdErr estimate_H(const CostFunction& cost, const DiscreteTarget& target,
                      std::span<const double> g, const SourceMeasure& src,
                      std::int64_t n, RngStream rng, int shards) {
  if (n < 2) throw std::invalid_argument("estimate_H: n must be >= 2");
  const auto sizes = shard_sizes(n, shards);
  Welford total;
  Vec x(static_cast<std::size_t>(src.dim()));
  for (int s = 0; s < shards; ++s) {
    RngStream stream = rng.child(static_cast<std::uint64_t>(s));
    Welford acc;
    for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(s)]; ++i) {
      src.sample(stream, x);
      acc.add(h_sample(cost, target, g, x));
    }
    total.merge(acc);
  }
  return {total.mean, total.std_err(), total.n};
}

MeanStdErr estimate_H_gap(const CostFunction& cost, const DiscreteTarget& target,
                          std::span<const double> g, std::span<const double> g_ref,
                          const SourceMeasure& src, std::int64_t n, RngStream rng,
                          int shards) {
  if (n < 2) throw std::invalid_argument("estimate_H_gap: n must be >= 2");
  const auto sizes = shard_sizes(n, shards);
  Welford total;
  Vec x(static_cast<std::size_t>(src.dim()));
  // <w, g> terms are deterministic; only the c-transform difference is
  // averaged, then the linear part is added back.
  const double linear = dot(target.weights(), g_ref) - dot(target.weights(), g);
  for (int s = 0; s < shards; ++s) {
    RngStream stream = rng.child(static_cast<std::uint64_t>(s));
    Welford acc;
    for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(s)]; ++i) {
      src.sample(stream, x);
      const double vg = c_transform(cost, target, g, x).value;
      const double vr = c_transform(cost, target, g_ref, x).value;
      acc.add(vr - vg);
    }
    total.merge(acc);
  }
  return {total.mean + linear, total.std_err(), total.n};
}

Vec estimate_cell_masses(const CostFunction& cost, const DiscreteTarget& target,
                         std::span<const double> g, const SourceMeasure& src,
                         std::int64_t n, RngStream rng, int shards) {
  if (n < 1) throw std::invalid_argument("estimate_cell_masses: n must be >= 1");
  const int m = target.size();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(m), 0);
  const auto sizes = shard_sizes(n, shards);
  Vec x(static_cast<std::size_t>(src.dim()));
  for (int s = 0; s < shards; ++s) {
    RngStream stream = rng.child(static_cast<std::uint64_t>(s));
    for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(s)]; ++i) {
      src.sample(stream, x);
      ++counts[static_cast<std::size_t>(c_transform(cost, target, g, x).cell)];
    }
  }
  Vec masses(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    masses[static_cast<std::size_t>(j)] =
        static_cast<double>(counts[static_cast<std::size_t>(j)]) / static_cast<double>(n);
  // Pin the float sum to exactly 1 by absorbing the rounding residue into the
  // largest coordinate (a few ulps at most).
  for (int pass = 0; pass < 4; ++pass) {
    double sum = 0.0;
    for (double v : masses) sum += v;
    if (sum == 1.0) break;
    auto largest = std::max_element(masses.begin(), masses.end());
    *largest += 1.0 - sum;
  }
  return masses;
}

}  // namespace sdot
