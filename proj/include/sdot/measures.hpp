#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdot/rng.hpp"
#include "sdot/vec.hpp"

namespace sdot {

// Discrete target measure: M weighted support points in R^d.
// Weights are normalized to sum to 1 on construction.
class DiscreteTarget {
 public:
  DiscreteTarget(Vec points_row_major, int dim, Vec weights);

  // Plain-text format: first non-comment line "M d", then M records of
  // d coordinates followed by one weight. '#' starts a comment.
  static DiscreteTarget load(const std::string& path);
  void save(const std::string& path) const;

  int size() const { return m_; }
  int dim() const { return d_; }
  std::span<const double> point(int i) const {
    return {points_.data() + static_cast<std::size_t>(i) * d_,
            static_cast<std::size_t>(d_)};
  }
  const Vec& points() const { return points_; }
  const Vec& weights() const { return w_; }
  double weight(int i) const { return w_[static_cast<std::size_t>(i)]; }
  double w_min() const;

 private:
  Vec points_;
  Vec w_;
  int m_ = 0;
  int d_ = 0;
};

// Source measure: immutable description; all randomness flows through the
// RngStream passed to sample(), so one instance is safely shared across
// threads as long as each caller owns its stream.
class SourceMeasure {
 public:
  virtual ~SourceMeasure() = default;

  virtual int dim() const = 0;
  virtual void sample(RngStream& rng, std::span<double> out) const = 0;

  virtual bool has_density() const { return false; }
  virtual double density(std::span<const double> x) const;

  // 1-D kinds only.
  virtual bool has_cdf() const { return false; }
  virtual double cdf(double x) const;
  // Inverse CDF; default bisects cdf() to 1e-13.
  virtual double quantile(double q) const;

  virtual std::string describe() const = 0;

  Vec sample_one(RngStream& rng) const;

 protected:
  // Bracket for the default bisection quantile.
  virtual void quantile_bracket(double& lo, double& hi) const;
};

using SourcePtr = std::shared_ptr<const SourceMeasure>;

SourcePtr make_uniform_cube(int dim, double lo, double hi);
SourcePtr make_gaussian(Vec mean, double sigma);
SourcePtr make_gaussian(int dim, double mean, double sigma);
// Density proportional to (1 + ||x||)^(-exponent), exponent > dim + 1.
SourcePtr make_heavy_tail_radial(int dim, double exponent);
// f(x) = 1/(2 sqrt(x)) on (0, 1].
SourcePtr make_sqrt_density_1d();
// f(x) = 1 + 2*delta*(1 - 2x) on [0, 1], delta in [0, 1/2).
SourcePtr make_perturbed_uniform_1d(double delta);

struct GaussianComponent {
  double weight = 1.0;
  Vec mean;
  double sigma = 1.0;
};
SourcePtr make_gaussian_mixture(std::vector<GaussianComponent> components);

// Median of the perturbed-uniform density, (1+2d-sqrt(1+4d^2))/(4d).
double perturbed_uniform_median(double delta);

}  // namespace sdot
