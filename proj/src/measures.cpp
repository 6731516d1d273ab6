#include "sdot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sdot/errors.hpp"

namespace sdot {

namespace {

double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteTarget

DiscreteTarget::DiscreteTarget(Vec points_row_major, int dim, Vec weights)
    : points_(std::move(points_row_major)), w_(std::move(weights)), d_(dim) {
  if (d_ < 1) throw ConfigError("target dimension must be >= 1");
  if (w_.empty()) throw ConfigError("target needs at least one point");
  if (points_.size() != w_.size() * static_cast<std::size_t>(d_))
    throw ConfigError("target points/weights size mismatch");
  m_ = static_cast<int>(w_.size());
  if (!all_finite(points_)) throw ConfigError("target point coordinates must be finite");

  double sum = 0.0;
  for (double w : w_) {
    if (!std::isfinite(w) || w < 0.0)
      throw ConfigError("target weights must be finite and nonnegative");
    sum += w;
  }
  if (sum <= 0.0) throw ConfigError("target weights sum to zero");
  for (double& w : w_) w /= sum;
  for (double w : w_)
    if (w <= 1e-12)
      throw ConfigError("target weight vanishes after normalization (w <= 1e-12)");

  for (int i = 0; i < m_; ++i)
    for (int j = i + 1; j < m_; ++j)
      if (squared_distance(point(i), point(j)) == 0.0)
        throw ConfigError("target support points must be pairwise distinct");
}

double DiscreteTarget::w_min() const {
  return *std::min_element(w_.begin(), w_.end());
}

DiscreteTarget DiscreteTarget::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open target file: " + path);
  std::string text, line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    text += line;
    text += ' ';
  }
  std::istringstream tokens(text);
  long long m = 0, d = 0;
  if (!(tokens >> m >> d) || m < 1 || d < 1)
    throw ConfigError("target file must start with 'M d': " + path);
  Vec points(static_cast<std::size_t>(m * d));
  Vec weights(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    for (long long k = 0; k < d; ++k)
      if (!(tokens >> points[static_cast<std::size_t>(i * d + k)]))
        throw ConfigError("target file truncated: " + path);
    if (!(tokens >> weights[static_cast<std::size_t>(i)]))
      throw ConfigError("target file truncated: " + path);
  }
  double extra;
  if (tokens >> extra) throw ConfigError("trailing data in target file: " + path);
  return DiscreteTarget(std::move(points), static_cast<int>(d), std::move(weights));
}

void DiscreteTarget::save(const std::string& path) const {
  std::ostringstream out;
  out.precision(17);
  out << m_ << " " << d_ << "\n";
  for (int i = 0; i < m_; ++i) {
    for (int k = 0; k < d_; ++k) out << points_[static_cast<std::size_t>(i) * d_ + k] << " ";
    out << w_[static_cast<std::size_t>(i)] << "\n";
  }
  const std::string tmp = path + ".tmp";
  std::ofstream f(tmp);
  if (!f) throw std::runtime_error("cannot write " + tmp);
  f << out.str();
  f.close();
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// SourceMeasure base

double SourceMeasure::density(std::span<const double>) const {
  throw std::runtime_error("density unavailable for " + describe());
}

double SourceMeasure::cdf(double) const {
  throw std::runtime_error("cdf unavailable for " + describe());
}

void SourceMeasure::quantile_bracket(double& lo, double& hi) const {
  lo = -1.0;
  hi = 1.0;
}

double SourceMeasure::quantile(double q) const {
  if (!has_cdf()) throw std::runtime_error("quantile unavailable for " + describe());
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("quantile order must lie in (0,1)");
  double lo, hi;
  quantile_bracket(lo, hi);
  while (cdf(lo) > q) lo = lo * 2.0 - 1.0;
  while (cdf(hi) < q) hi = hi * 2.0 + 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vec SourceMeasure::sample_one(RngStream& rng) const {
  Vec x(static_cast<std::size_t>(dim()));
  sample(rng, x);
  return x;
}

// ---------------------------------------------------------------------------
// Uniform cube

namespace {

class UniformCube final : public SourceMeasure {
 public:
  UniformCube(int dim, double lo, double hi) : d_(dim), lo_(lo), hi_(hi) {
    if (dim < 1) throw ConfigError("uniform_cube: dim must be >= 1");
    if (!(lo < hi)) throw ConfigError("uniform_cube: requires lo < hi");
  }

  int dim() const override { return d_; }

  void sample(RngStream& rng, std::span<double> out) const override {
    for (auto& v : out) v = lo_ + (hi_ - lo_) * rng.next_double();
  }

  bool has_density() const override { return true; }
  double density(std::span<const double> x) const override {
    for (double v : x)
      if (v < lo_ || v > hi_) return 0.0;
    return std::pow(hi_ - lo_, -d_);
  }

  bool has_cdf() const override { return d_ == 1; }
  double cdf(double x) const override {
    if (d_ != 1) return SourceMeasure::cdf(x);
    return std::clamp((x - lo_) / (hi_ - lo_), 0.0, 1.0);
  }
  double quantile(double q) const override {
    if (d_ != 1) return SourceMeasure::quantile(q);
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("quantile order must lie in (0,1)");
    return lo_ + q * (hi_ - lo_);
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "uniform_cube(d=" << d_ << ", [" << lo_ << "," << hi_ << "])";
    return s.str();
  }

 private:
  int d_;
  double lo_, hi_;
};

// ---------------------------------------------------------------------------
// Isotropic Gaussian

class Gaussian final : public SourceMeasure {
 public:
  Gaussian(Vec mean, double sigma) : mean_(std::move(mean)), sigma_(sigma) {
    if (mean_.empty()) throw ConfigError("gaussian: empty mean");
    if (!(sigma > 0.0)) throw ConfigError("gaussian: sigma must be positive");
  }

  int dim() const override { return static_cast<int>(mean_.size()); }

  void sample(RngStream& rng, std::span<double> out) const override {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = mean_[i] + sigma_ * rng.next_normal();
  }

  bool has_density() const override { return true; }
  double density(std::span<const double> x) const override {
    const double d = static_cast<double>(mean_.size());
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = (x[i] - mean_[i]) / sigma_;
      q += z * z;
    }
    return std::exp(-0.5 * q) *
           std::pow(2.0 * std::numbers::pi * sigma_ * sigma_, -0.5 * d);
  }

  bool has_cdf() const override { return mean_.size() == 1; }
  double cdf(double x) const override {
    if (mean_.size() != 1) return SourceMeasure::cdf(x);
    return standard_normal_cdf((x - mean_[0]) / sigma_);
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "gaussian(d=" << mean_.size() << ", sigma=" << sigma_ << ")";
    return s.str();
  }

 protected:
  void quantile_bracket(double& lo, double& hi) const override {
    lo = mean_[0] - 42.0 * sigma_;
    hi = mean_[0] + 42.0 * sigma_;
  }

 private:
  Vec mean_;
  double sigma_;
};

// ---------------------------------------------------------------------------
// Heavy-tailed radial law, f(x) proportional to (1 + ||x||)^(-nu)

// With v = r/(1+r), the radial CDF is the regularized incomplete beta
// I_v(d, nu-d). Two exact closed forms cover every configuration used here:
//   - nu-d-1 a small nonnegative integer: binomial expansion in v,
//   - integer dimension d <= 30: binomial expansion in t = 1-u.
class HeavyTailRadial final : public SourceMeasure {
 public:
  HeavyTailRadial(int dim, double exponent) : d_(dim), nu_(exponent) {
    if (dim < 1) throw ConfigError("heavy_tail_radial: dim must be >= 1");
    if (!(exponent > dim + 1))
      throw ConfigError("heavy_tail_radial: exponent must exceed dim+1 for a finite mean");
    const double k = nu_ - d_ - 1.0;
    v_form_ = std::abs(k - std::round(k)) < 1e-12 && k >= 0.0 && k <= 12.0;
    if (!v_form_ && d_ > 30)
      throw ConfigError("heavy_tail_radial: need integer exponent-dim-1 when dim > 30");
    beta_ = std::exp(std::lgamma(static_cast<double>(d_)) + std::lgamma(nu_ - d_) -
                     std::lgamma(nu_));
    const double surface =
        2.0 * std::pow(std::numbers::pi, 0.5 * d_) / std::tgamma(0.5 * d_);
    density_norm_ = 1.0 / (surface * beta_);
    build_seed_table();
  }

  int dim() const override { return d_; }

  void sample(RngStream& rng, std::span<double> out) const override {
    // Direction: normalized Gaussian vector; radius: inverse radial CDF.
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (auto& v : out) {
        v = rng.next_normal();
        n2 += v * v;
      }
    } while (n2 == 0.0);
    const double r = radial_quantile(rng.next_open());
    const double scale = r / std::sqrt(n2);
    for (auto& v : out) v *= scale;
  }

  bool has_density() const override { return true; }
  double density(std::span<const double> x) const override {
    return density_norm_ * std::pow(1.0 + norm(x), -nu_);
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "heavy_tail_radial(d=" << d_ << ", exponent=" << nu_ << ")";
    return s.str();
  }

  // Exposed for the module tests (radial law diagnostics).
  double radial_cdf(double r) const {
    if (r <= 0.0) return 0.0;
    return incomplete_v(r / (1.0 + r)) / beta_;
  }

  double radial_quantile(double u) const {
    // Seed from the table, then safeguarded Newton on v in (0,1).
    const std::size_t cell = std::min(
        seed_.size() - 2, static_cast<std::size_t>(u * static_cast<double>(seed_.size() - 1)));
    double lo = seed_[cell], hi = seed_[cell + 1];
    double v = 0.5 * (lo + hi);
    const double target = u * beta_;
    for (int it = 0; it < 100; ++it) {
      const double err = incomplete_v(v) - target;
      (err < 0.0 ? lo : hi) = v;
      const double deriv =
          std::pow(v, d_ - 1.0) * std::pow(1.0 - v, nu_ - d_ - 1.0);
      double next = v - err / deriv;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - v) < 1e-12 * std::max(1.0, v) || hi - lo < 1e-15) {
        v = next;
        break;
      }
      v = next;
    }
    return v / (1.0 - v);
  }

 private:
  // Unnormalized integral of u^(d-1) (1-u)^(nu-d-1) over [0, v].
  double incomplete_v(double v) const {
    v = std::clamp(v, 0.0, 1.0);
    if (v_form_) {
      const int k = static_cast<int>(std::round(nu_ - d_ - 1.0));
      double sum = 0.0, binom = 1.0;
      for (int i = 0; i <= k; ++i) {
        const double term = binom * std::pow(v, d_ + i) / (d_ + i);
        sum += (i % 2 == 0) ? term : -term;
        binom = binom * (k - i) / (i + 1.0);
      }
      return sum;
    }
    const double s = nu_ - d_ - 1.0;
    const double t = 1.0 - v;
    double sum = 0.0, binom = 1.0;
    for (int i = 0; i < d_; ++i) {
      const double e = s + i + 1.0;
      sum += binom * (1.0 - std::pow(t, e)) / e;
      binom = -binom * (d_ - 1.0 - i) / (i + 1.0);
    }
    return sum;
  }

  void build_seed_table() {
    constexpr std::size_t kCells = 256;
    seed_.resize(kCells + 1);
    seed_.front() = 0.0;
    seed_.back() = 1.0;
    for (std::size_t i = 1; i < kCells; ++i) {
      const double target = beta_ * static_cast<double>(i) / kCells;
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (incomplete_v(mid) < target ? lo : hi) = mid;
      }
      seed_[i] = 0.5 * (lo + hi);
    }
  }

  int d_;
  double nu_;
  bool v_form_ = false;
  double beta_ = 0.0;
  double density_norm_ = 0.0;
  Vec seed_;
};

// ---------------------------------------------------------------------------
// f(x) = 1/(2 sqrt(x)) on (0,1]; F(x) = sqrt(x); sampled as U^2.

class SqrtDensity1D final : public SourceMeasure {
 public:
  int dim() const override { return 1; }

  void sample(RngStream& rng, std::span<double> out) const override {
    const double u = rng.next_double();
    out[0] = u * u;
  }

  bool has_density() const override { return true; }
  double density(std::span<const double> x) const override {
    if (x[0] <= 0.0 || x[0] > 1.0) return 0.0;
    return 0.5 / std::sqrt(x[0]);
  }

  bool has_cdf() const override { return true; }
  double cdf(double x) const override {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return std::sqrt(x);
  }
  double quantile(double q) const override {
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("quantile order must lie in (0,1)");
    return q * q;
  }

  std::string describe() const override { return "sqrt_density_1d"; }
};

// ---------------------------------------------------------------------------
// Perturbed uniform on [0,1]: f(x) = 1 + 2*delta*(1-2x).

class PerturbedUniform1D final : public SourceMeasure {
 public:
  explicit PerturbedUniform1D(double delta) : delta_(delta) {
    if (!(delta >= 0.0 && delta < 0.5))
      throw ConfigError("perturbed_uniform_1d: delta must lie in [0, 1/2)");
  }

  int dim() const override { return 1; }

  void sample(RngStream& rng, std::span<double> out) const override {
    out[0] = quantile_impl(rng.next_double());
  }

  bool has_density() const override { return true; }
  double density(std::span<const double> x) const override {
    if (x[0] < 0.0 || x[0] > 1.0) return 0.0;
    return 1.0 + 2.0 * delta_ * (1.0 - 2.0 * x[0]);
  }

  bool has_cdf() const override { return true; }
  double cdf(double x) const override {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x + 2.0 * delta_ * x * (1.0 - x);
  }
  double quantile(double q) const override {
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("quantile order must lie in (0,1)");
    return quantile_impl(q);
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "perturbed_uniform_1d(delta=" << delta_ << ")";
    return s.str();
  }

 private:
  double quantile_impl(double u) const {
    if (delta_ < 1e-12) return u;
    // Root of 2*delta*x^2 - (1+2*delta)*x + u = 0 lying in [0,1].
    const double a = 1.0 + 2.0 * delta_;
    return (a - std::sqrt(a * a - 8.0 * delta_ * u)) / (4.0 * delta_);
  }

  double delta_;
};

// ---------------------------------------------------------------------------
// Finite isotropic Gaussian mixture

class GaussianMixture final : public SourceMeasure {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> comps)
      : comps_(std::move(comps)) {
    if (comps_.empty()) throw ConfigError("gaussian_mixture: needs components");
    d_ = static_cast<int>(comps_.front().mean.size());
    double sum = 0.0;
    for (const auto& c : comps_) {
      if (static_cast<int>(c.mean.size()) != d_)
        throw ConfigError("gaussian_mixture: component dimensions differ");
      if (!(c.sigma > 0.0) || !(c.weight > 0.0))
        throw ConfigError("gaussian_mixture: weights and sigmas must be positive");
      sum += c.weight;
    }
    cumulative_.reserve(comps_.size());
    double acc = 0.0;
    for (auto& c : comps_) {
      c.weight /= sum;
      acc += c.weight;
      cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
  }

  int dim() const override { return d_; }

  void sample(RngStream& rng, std::span<double> out) const override {
    const double u = rng.next_double();
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto& c = comps_[static_cast<std::size_t>(it - cumulative_.begin())];
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = c.mean[i] + c.sigma * rng.next_normal();
  }

  bool has_density() const override { return true; }
  double density(std::span<const double> x) const override {
    double f = 0.0;
    for (const auto& c : comps_) {
      double q = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = (x[i] - c.mean[i]) / c.sigma;
        q += z * z;
      }
      f += c.weight * std::exp(-0.5 * q) *
           std::pow(2.0 * std::numbers::pi * c.sigma * c.sigma, -0.5 * d_);
    }
    return f;
  }

  bool has_cdf() const override { return d_ == 1; }
  double cdf(double x) const override {
    if (d_ != 1) return SourceMeasure::cdf(x);
    double f = 0.0;
    for (const auto& c : comps_)
      f += c.weight * standard_normal_cdf((x - c.mean[0]) / c.sigma);
    return f;
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "gaussian_mixture(d=" << d_ << ", k=" << comps_.size() << ")";
    return s.str();
  }

 protected:
  void quantile_bracket(double& lo, double& hi) const override {
    lo = comps_.front().mean[0];
    hi = lo;
    for (const auto& c : comps_) {
      lo = std::min(lo, c.mean[0] - 42.0 * c.sigma);
      hi = std::max(hi, c.mean[0] + 42.0 * c.sigma);
    }
  }

 private:
  std::vector<GaussianComponent> comps_;
  Vec cumulative_;
  int d_ = 1;
};

}  // namespace

SourcePtr make_uniform_cube(int dim, double lo, double hi) {
  return std::make_shared<UniformCube>(dim, lo, hi);
}

SourcePtr make_gaussian(Vec mean, double sigma) {
  return std::make_shared<Gaussian>(std::move(mean), sigma);
}

SourcePtr make_gaussian(int dim, double mean, double sigma) {
  if (dim < 1) throw ConfigError("gaussian: dim must be >= 1");
  return std::make_shared<Gaussian>(Vec(static_cast<std::size_t>(dim), mean), sigma);
}

SourcePtr make_heavy_tail_radial(int dim, double exponent) {
  return std::make_shared<HeavyTailRadial>(dim, exponent);
}

SourcePtr make_sqrt_density_1d() { return std::make_shared<SqrtDensity1D>(); }

SourcePtr make_perturbed_uniform_1d(double delta) {
  return std::make_shared<PerturbedUniform1D>(delta);
}

SourcePtr make_gaussian_mixture(std::vector<GaussianComponent> components) {
  return std::make_shared<GaussianMixture>(std::move(components));
}

double perturbed_uniform_median(double delta) {
  if (delta < 1e-12) return 0.5;
  return (1.0 + 2.0 * delta - std::sqrt(1.0 + 4.0 * delta * delta)) / (4.0 * delta);
}

}  // namespace sdot
