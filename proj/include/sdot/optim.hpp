#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdot/cost.hpp"
#include "sdot/measures.hpp"
#include "sdot/projection.hpp"
#include "sdot/rng.hpp"
#include "sdot/vec.hpp"

namespace sdot {

enum class Variant { kPsgd, kAdagrad, kAdam, kSAdam };

Variant variant_from_name(const std::string& name);
std::string variant_name(Variant v);

struct OptimizerConfig {
  Variant variant = Variant::kPsgd;
  double gamma1 = 1.0;       // PSGD: gamma_k = gamma1 / k^b; Adam family: base lr
  double b = 0.75;           // decay exponent, in [1/2, 1)
  int batch = 1;             // batch mean of per-sample subgradients
  std::int64_t max_iters = 0;
  std::uint64_t seed = 0;
  // Adam / S-Adam / Adagrad defaults; S-Adam decays the step as gamma1/k.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  std::string echo() const;
};

struct SolverState {
  Vec g;      // last iterate
  Vec g_bar;  // running average of g_0..g_k
  std::int64_t k = 0;
  Vec m;  // Adam first moment
  Vec v;  // Adam second moment / Adagrad accumulator
};

SolverState make_state(Vec g0);

// One projected update; the step index used for decay schedules is k+1.
void step(SolverState& state, const OptimizerConfig& cfg, const ProjectionBox& box,
          std::span<const double> grad);

struct Checkpoint {
  std::int64_t iter = 0;
  std::int64_t n_samples = 0;
  double pot_err_last = 0.0;
  double pot_err_avg = 0.0;
  double map_err_last = 0.0;
  double map_err_avg = 0.0;
  double h_gap_avg = 0.0;
  double wall_time_s = 0.0;
};

struct RunTrace {
  std::vector<Checkpoint> rows;
  std::string config_echo;
  std::uint64_t seed = 0;
};

// Fills the error fields of a checkpoint row (iter/n_samples preset).
using CheckpointEval = std::function<void(const SolverState&, Checkpoint&)>;

struct RunResult {
  SolverState state;
  RunTrace trace;
};

// ceil(10^(j/8)) for j = 0,1,..., deduplicated, cut at max_iters and always
// ending exactly at max_iters.
std::vector<std::int64_t> checkpoint_schedule(std::int64_t max_iters);

// Algorithm loop: per iteration draw cfg.batch samples from src (training
// stream = rng), apply the batch-mean subgradient step, record checkpoints.
RunResult run(const CostFunction& cost, const DiscreteTarget& target,
              const SourceMeasure& src, const ProjectionBox& box,
              const OptimizerConfig& cfg, RngStream rng,
              const CheckpointEval& eval = nullptr, Vec g0 = {});

// Theorem preset for the general setting: gamma1 = Diam(C)/(2*sqrt(2)), b = 1/2.
OptimizerConfig preset_general(const ProjectionBox& box);
// Experiment preset: gamma1 = Diam(C), default b = 3/4.
OptimizerConfig preset_experiment(const ProjectionBox& box, double b = 0.75);

// CSV serialization: '#' echo lines, header, one row per checkpoint, floats
// with 17 significant digits. Wall time is written as 0 unless with_timings
// is set (timings are the one nondeterministic field).
void write_trace_csv(const RunTrace& trace, const std::string& path,
                     bool with_timings = false);
std::string trace_csv_string(const RunTrace& trace, bool with_timings = false);

}  // namespace sdot
