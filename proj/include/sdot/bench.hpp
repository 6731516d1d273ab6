#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdot/config.hpp"
#include "sdot/cost.hpp"
#include "sdot/measures.hpp"
#include "sdot/optim.hpp"
#include "sdot/oracle.hpp"
#include "sdot/projection.hpp"
#include "sdot/semidual.hpp"

namespace sdot {

// Squared gauge-projected distance ||g - g*||_v^2.
double potential_error(std::span<const double> g, std::span<const double> g_star);

// Monte-Carlo estimate of the L^p(mu)^p map error
//   int ||T(g)(x) - T(g*)(x)||^p dmu(x)
// over n_eval fresh draws; the stream is taken by value so both iterates of a
// run can be scored on common draws.
MeanStdErr map_error_mc(const CostFunction& cost, const DiscreteTarget& target,
                        std::span<const double> g, std::span<const double> g_star,
                        const SourceMeasure& src, std::int64_t n_eval, double p,
                        RngStream rng);

enum class TraceField { kPotErrLast, kPotErrAvg, kMapErrLast, kMapErrAvg, kHGapAvg };
TraceField trace_field_from_name(const std::string& name);
std::string trace_field_name(TraceField f);
double checkpoint_field(const Checkpoint& row, TraceField f);

struct RateFit {
  double slope = 0.0;
  double std_err = 0.0;
  int points = 0;
};

// OLS of log10(field) on log10(n_samples) over checkpoints with
// n_lo <= n_samples <= n_hi. Checkpoints with nonpositive field values are
// dropped; checkpoints with pot_err_avg below pot_floor are dropped (ground
// truth mass-estimation noise floor). Requires >= 5 usable points.
RateFit fit_rate(const RunTrace& trace, TraceField field, double n_lo, double n_hi,
                 double pot_floor = 0.0);

enum class GroundTruthKind {
  kDrawMc,      // draw g*, estimate cell masses with n_reference samples
  kDrawExact1D, // draw g*, compute cell masses exactly from the cdf (1-D quadratic)
  kOracle1D,    // explicit target weights; g* from solve_1d_exact
};

struct OptimizerSpec {
  std::string name = "psgd";
  Variant variant = Variant::kPsgd;
  enum class Preset { kGeneral, kExperiment, kExplicit } preset = Preset::kExperiment;
  double b = 0.75;
  double gamma1 = 0.0;  // explicit preset and Adam-family learning rate
  int batch = 1;
  std::int64_t iters = 100000;
};

struct ExperimentSpec {
  std::string name = "experiment";
  CostFunction cost;
  SourcePtr src;

  // Target support: either sampled uniformly in a cube or given explicitly.
  int target_count = 0;
  double target_lo = 0.0;
  double target_hi = 1.0;
  std::optional<DiscreteTarget> explicit_target;

  CompactSet k;  // compact K feeding the projection-box radius

  GroundTruthKind gt_kind = GroundTruthKind::kDrawMc;
  std::int64_t n_reference = 10000000;
  double gstar_frac = 1.0;   // g* drawn uniformly in gstar_frac * box
  int min_mass_count = 10;   // MC empty-cell guard: reject masses < count/n_reference
  double min_mass_override = 0.0;

  std::int64_t n_eval = 100000;
  double map_p = 0.0;  // 0 => cost exponent (2 for quadratic)
  int repeats = 10;
  std::uint64_t seed = 1;
  std::vector<OptimizerSpec> optimizers;

  double effective_map_p() const { return map_p > 0.0 ? map_p : cost.p; }
  double min_mass() const;
};

ExperimentSpec experiment_spec_from_config(Config& cfg);

struct GroundTruth {
  DiscreteTarget target;
  Vec g_star;           // gauge-projected representative
  bool exact = false;   // weights are exact cell masses (no reference noise)
  double noise_floor = 0.0;  // 25*M/n_reference when estimated, else 0
};

// Ground-truth construction: draw the target support, draw g* in the scaled
// projection box, set the weights to the (estimated or exact) Laguerre-cell
// masses so g* is optimal by the first-order condition. Rejects and redraws
// g* when a cell mass falls below the guard (at most 100 draws).
GroundTruth make_ground_truth(const ExperimentSpec& spec, RngStream rng);

struct SummaryRow {
  std::string config;
  std::string metric;
  double slope = 0.0;
  double std_err = 0.0;
  double n_lo = 0.0;
  double n_hi = 0.0;
  int points = 0;
  double final_value = 0.0;
};

struct ExperimentResult {
  // traces[config][repeat]
  std::vector<std::vector<RunTrace>> traces;
  // per config, errors averaged over repeats checkpoint-wise
  std::vector<RunTrace> mean_traces;
  std::vector<SummaryRow> summary;
  double noise_floor = 0.0;
};

// Runs repeats x optimizer-configs; repeats execute in parallel on up to
// `threads` workers. All randomness is keyed by (seed, repeat, config), so
// results are identical for any thread count.
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1);

// <out>/<name>/<config>/<repeat>.csv, <config>/mean.csv and <name>/summary.csv.
void write_experiment_csvs(const ExperimentResult& result, const ExperimentSpec& spec,
                           const std::string& out_dir, bool with_timings = false);
std::string summary_csv_string(const ExperimentResult& result,
                               const ExperimentSpec& spec);

// Runs fn(0..n_jobs-1) on up to `threads` workers; rethrows the first error.
void parallel_for(int n_jobs, int threads, const std::function<void(int)>& fn);

}  // namespace sdot
