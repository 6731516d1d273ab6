#include "sdot/optim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sdot/errors.hpp"

namespace sdot {

Variant variant_from_name(const std::string& name) {
  if (name == "psgd") return Variant::kPsgd;
  if (name == "adagrad") return Variant::kAdagrad;
  if (name == "adam") return Variant::kAdam;
  if (name == "sadam") return Variant::kSAdam;
  throw ConfigError("unknown optimizer variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kPsgd: return "psgd";
    case Variant::kAdagrad: return "adagrad";
    case Variant::kAdam: return "adam";
    case Variant::kSAdam: return "sadam";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(gamma1 > 0.0)) throw ConfigError("optimizer: gamma1 must be positive");
  if (!(b >= 0.5 && b < 1.0)) throw ConfigError("optimizer: b must lie in [1/2, 1)");
  if (batch < 1) throw ConfigError("optimizer: batch must be >= 1");
  if (max_iters < 1) throw ConfigError("optimizer: max_iters must be >= 1");
}

std::string OptimizerConfig::echo() const {
  std::ostringstream s;
  s.precision(17);
  s << "variant=" << variant_name(variant) << " gamma1=" << gamma1 << " b=" << b
    << " batch=" << batch << " max_iters=" << max_iters << " seed=" << seed;
  if (variant != Variant::kPsgd)
    s << " beta1=" << beta1 << " beta2=" << beta2 << " eps=" << eps;
  return s.str();
}

SolverState make_state(Vec g0) {
  SolverState st;
  st.g = g0;
  st.g_bar = std::move(g0);
  const std::size_t m = st.g.size();
  st.m.assign(m, 0.0);
  st.v.assign(m, 0.0);
  return st;
}

void step(SolverState& state, const OptimizerConfig& cfg, const ProjectionBox& box,
          std::span<const double> grad) {
  const std::size_t m = state.g.size();
  if (grad.size() != m || box.m != static_cast<int>(m))
    throw std::invalid_argument("step: dimension mismatch");
  const std::int64_t k = state.k + 1;
  const double kd = static_cast<double>(k);

  switch (cfg.variant) {
    case Variant::kPsgd: {
      const double gamma = cfg.gamma1 / std::pow(kd, cfg.b);
      for (std::size_t j = 0; j < m; ++j) state.g[j] -= gamma * grad[j];
      break;
    }
    case Variant::kAdagrad: {
      for (std::size_t j = 0; j < m; ++j) {
        state.v[j] += grad[j] * grad[j];
        state.g[j] -= cfg.gamma1 * grad[j] / (std::sqrt(state.v[j]) + cfg.eps);
      }
      break;
    }
    case Variant::kAdam:
    case Variant::kSAdam: {
      const double lr =
          cfg.variant == Variant::kAdam ? cfg.gamma1 : cfg.gamma1 / kd;
      const double c1 = 1.0 - std::pow(cfg.beta1, kd);
      const double c2 = 1.0 - std::pow(cfg.beta2, kd);
      for (std::size_t j = 0; j < m; ++j) {
        state.m[j] = cfg.beta1 * state.m[j] + (1.0 - cfg.beta1) * grad[j];
        state.v[j] = cfg.beta2 * state.v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
        const double mhat = state.m[j] / c1;
        const double vhat = state.v[j] / c2;
        state.g[j] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
      }
      break;
    }
  }
  clip_to_box(box, state.g);
  state.k = k;
  for (std::size_t j = 0; j < m; ++j)
    state.g_bar[j] += (state.g[j] - state.g_bar[j]) / (kd + 1.0);
}

std::vector<std::int64_t> checkpoint_schedule(std::int64_t max_iters) {
  if (max_iters < 1) throw std::invalid_argument("checkpoint_schedule: max_iters >= 1");
  std::vector<std::int64_t> out;
  for (int j = 0;; ++j) {
    const auto it = static_cast<std::int64_t>(
        std::ceil(std::pow(10.0, static_cast<double>(j) / 8.0)));
    if (it >= max_iters) break;
    if (out.empty() || it != out.back()) out.push_back(it);
  }
  out.push_back(max_iters);
  return out;
}

RunResult run(const CostFunction& cost, const DiscreteTarget& target,
              const SourceMeasure& src, const ProjectionBox& box,
              const OptimizerConfig& cfg, RngStream rng,
              const CheckpointEval& eval, Vec g0) {
  cfg.validate();
  const int m = target.size();
  if (box.m != m) throw std::invalid_argument("run: box dimension != target size");
  if (src.dim() != target.dim())
    throw std::invalid_argument("run: source dimension != target dimension");
  if (g0.empty()) g0.assign(static_cast<std::size_t>(m), 0.0);
  if (static_cast<int>(g0.size()) != m)
    throw std::invalid_argument("run: g0 length != target size");
  clip_to_box(box, g0);

  RunResult result;
  result.state = make_state(std::move(g0));
  result.trace.config_echo = cfg.echo();
  result.trace.seed = cfg.seed;

  const auto schedule = checkpoint_schedule(cfg.max_iters);
  std::size_t next_cp = 0;

  Vec x(static_cast<std::size_t>(src.dim()));
  Vec grad(static_cast<std::size_t>(m));
  std::vector<std::int64_t> counts(static_cast<std::size_t>(m));
  const Vec& w = target.weights();
  const auto t0 = std::chrono::steady_clock::now();

  for (std::int64_t it = 1; it <= cfg.max_iters; ++it) {
    if (cfg.batch == 1) {
      src.sample(rng, x);
      const int cell = c_transform(cost, target, result.state.g, x).cell;
      for (int j = 0; j < m; ++j) grad[static_cast<std::size_t>(j)] = -w[static_cast<std::size_t>(j)];
      grad[static_cast<std::size_t>(cell)] += 1.0;
    } else {
      std::fill(counts.begin(), counts.end(), 0);
      for (int s = 0; s < cfg.batch; ++s) {
        src.sample(rng, x);
        ++counts[static_cast<std::size_t>(c_transform(cost, target, result.state.g, x).cell)];
      }
      for (int j = 0; j < m; ++j)
        grad[static_cast<std::size_t>(j)] =
            static_cast<double>(counts[static_cast<std::size_t>(j)]) / cfg.batch -
            w[static_cast<std::size_t>(j)];
    }
    step(result.state, cfg, box, grad);

    if (next_cp < schedule.size() && it == schedule[next_cp]) {
      ++next_cp;
      Checkpoint row;
      row.iter = it;
      row.n_samples = it * cfg.batch;
      row.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (eval) eval(result.state, row);
      result.trace.rows.push_back(row);
    }
  }
  return result;
}

OptimizerConfig preset_general(const ProjectionBox& box) {
  OptimizerConfig cfg;
  cfg.variant = Variant::kPsgd;
  cfg.gamma1 = box.euclidean_diameter() / (2.0 * std::numbers::sqrt2);
  cfg.b = 0.5;
  return cfg;
}

OptimizerConfig preset_experiment(const ProjectionBox& box, double b) {
  OptimizerConfig cfg;
  cfg.variant = Variant::kPsgd;
  cfg.gamma1 = box.euclidean_diameter();
  cfg.b = b;
  return cfg;
}

namespace {

void append_float(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

std::string trace_csv_string(const RunTrace& trace, bool with_timings) {
  std::string out;
  out += "# config: " + trace.config_echo + "\n";
  out += "# seed: " + std::to_string(trace.seed) + "\n";
  out += "iter,n_samples_consumed,pot_err_last,pot_err_avg,map_err_last,map_err_avg,"
         "H_gap_avg,wall_time_s\n";
  for (const auto& r : trace.rows) {
    out += std::to_string(r.iter);
    out += ',';
    out += std::to_string(r.n_samples);
    for (double v : {r.pot_err_last, r.pot_err_avg, r.map_err_last, r.map_err_avg,
                     r.h_gap_avg, with_timings ? r.wall_time_s : 0.0}) {
      out += ',';
      append_float(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_trace_csv(const RunTrace& trace, const std::string& path,
                     bool with_timings) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << trace_csv_string(trace, with_timings);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sdot
