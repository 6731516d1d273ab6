#include "sdot/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sdot/errors.hpp"

namespace sdot {

namespace {

// Stream-derivation tags; every unit of work owns a child keyed by logical
// indices so thread scheduling can never change results.
constexpr std::uint64_t kTagTargetDraw = 1;
constexpr std::uint64_t kTagGStarDraw = 2;
constexpr std::uint64_t kTagMassEstimate = 3;
constexpr std::uint64_t kTagGroundTruth = 4;
constexpr std::uint64_t kTagRun = 5;
constexpr std::uint64_t kTagTrain = 6;
constexpr std::uint64_t kTagMapEval = 7;
constexpr std::uint64_t kTagHGapEval = 8;

}  // namespace

double potential_error(std::span<const double> g, std::span<const double> g_star) {
  if (g.size() != g_star.size())
    throw std::invalid_argument("potential_error: length mismatch");
  Vec diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - g_star[i];
  project_gauge_inplace(diff);
  return norm2(diff);
}

MeanStdErr map_error_mc(const CostFunction& cost, const DiscreteTarget& target,
                        std::span<const double> g, std::span<const double> g_star,
                        const SourceMeasure& src, std::int64_t n_eval, double p,
                        RngStream rng) {
  if (n_eval < 1) throw std::invalid_argument("map_error_mc: n_eval must be >= 1");
  if (!(p >= 1.0)) throw std::invalid_argument("map_error_mc: p must be >= 1");
  Welford acc;
  Vec x(static_cast<std::size_t>(src.dim()));
  for (std::int64_t i = 0; i < n_eval; ++i) {
    src.sample(rng, x);
    const int a = c_transform(cost, target, g, x).cell;
    const int b = c_transform(cost, target, g_star, x).cell;
    if (a == b) {
      acc.add(0.0);
    } else {
      const double s2 = squared_distance(target.point(a), target.point(b));
      acc.add(std::pow(s2, 0.5 * p));
    }
  }
  return {acc.mean, acc.std_err(), acc.n};
}

TraceField trace_field_from_name(const std::string& name) {
  if (name == "pot_err_last") return TraceField::kPotErrLast;
  if (name == "pot_err_avg") return TraceField::kPotErrAvg;
  if (name == "map_err_last") return TraceField::kMapErrLast;
  if (name == "map_err_avg") return TraceField::kMapErrAvg;
  if (name == "H_gap_avg") return TraceField::kHGapAvg;
  throw ConfigError("unknown trace field '" + name + "'");
}

std::string trace_field_name(TraceField f) {
  switch (f) {
    case TraceField::kPotErrLast: return "pot_err_last";
    case TraceField::kPotErrAvg: return "pot_err_avg";
    case TraceField::kMapErrLast: return "map_err_last";
    case TraceField::kMapErrAvg: return "map_err_avg";
    case TraceField::kHGapAvg: return "H_gap_avg";
  }
  return "?";
}

double checkpoint_field(const Checkpoint& row, TraceField f) {
  switch (f) {
    case TraceField::kPotErrLast: return row.pot_err_last;
    case TraceField::kPotErrAvg: return row.pot_err_avg;
    case TraceField::kMapErrLast: return row.map_err_last;
    case TraceField::kMapErrAvg: return row.map_err_avg;
    case TraceField::kHGapAvg: return row.h_gap_avg;
  }
  return 0.0;
}

RateFit fit_rate(const RunTrace& trace, TraceField field, double n_lo, double n_hi,
                 double pot_floor) {
  std::vector<double> xs, ys;
  for (const auto& row : trace.rows) {
    const double n = static_cast<double>(row.n_samples);
    if (n < n_lo || n > n_hi) continue;
    const double v = checkpoint_field(row, field);
    if (!(v > 0.0)) continue;
    if (pot_floor > 0.0 && row.pot_err_avg < pot_floor) continue;
    xs.push_back(std::log10(n));
    ys.push_back(std::log10(v));
  }
  const int n_pts = static_cast<int>(xs.size());
  if (n_pts < 5)
    throw std::runtime_error("fit_rate: fewer than 5 usable checkpoints in window");

  const double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n_pts; ++i) {
    sxx += (xs[static_cast<std::size_t>(i)] - mx) * (xs[static_cast<std::size_t>(i)] - mx);
    sxy += (xs[static_cast<std::size_t>(i)] - mx) * (ys[static_cast<std::size_t>(i)] - my);
  }
  if (sxx == 0.0) throw std::runtime_error("fit_rate: degenerate abscissa");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (int i = 0; i < n_pts; ++i) {
    const double r = ys[static_cast<std::size_t>(i)] -
                     (intercept + slope * xs[static_cast<std::size_t>(i)]);
    rss += r * r;
  }
  const double se =
      n_pts > 2 ? std::sqrt(rss / static_cast<double>(n_pts - 2) / sxx) : 0.0;
  return {slope, se, n_pts};
}

double ExperimentSpec::min_mass() const {
  if (min_mass_override > 0.0) return min_mass_override;
  if (gt_kind == GroundTruthKind::kDrawMc)
    return static_cast<double>(min_mass_count) / static_cast<double>(n_reference);
  return 1e-4;
}

ExperimentSpec experiment_spec_from_config(Config& cfg) {
  ExperimentSpec spec;
  spec.name = cfg.get_string("name", "experiment");
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  spec.repeats = static_cast<int>(cfg.get_int("repeats", 10));
  spec.cost = cost_from_config(cfg);
  spec.src = source_from_config(cfg);

  if (cfg.has("target.file")) {
    spec.explicit_target = DiscreteTarget::load(cfg.get_string("target.file"));
  } else if (cfg.has("target.points_list")) {
    Vec pts = cfg.get_double_list("target.points_list");
    Vec w = cfg.has("target.weights_list")
                ? cfg.get_double_list("target.weights_list")
                : Vec(pts.size(), 1.0);
    spec.explicit_target = DiscreteTarget(std::move(pts), 1, std::move(w));
  } else {
    spec.target_count = static_cast<int>(cfg.get_int("target.count"));
    spec.target_lo = cfg.get_double("target.lo", 0.0);
    spec.target_hi = cfg.get_double("target.hi", 1.0);
    if (spec.target_count < 1) throw ConfigError("target.count must be >= 1");
  }

  spec.k = compact_from_config(cfg, spec.src->dim());

  const std::string gt = cfg.get_string("ground_truth.kind", "mc");
  if (gt == "mc") spec.gt_kind = GroundTruthKind::kDrawMc;
  else if (gt == "exact1d") spec.gt_kind = GroundTruthKind::kDrawExact1D;
  else if (gt == "oracle1d") spec.gt_kind = GroundTruthKind::kOracle1D;
  else throw ConfigError("ground_truth.kind must be mc|exact1d|oracle1d");

  spec.n_reference = cfg.get_int("ground_truth.n_reference", 10000000);
  spec.gstar_frac = cfg.get_double("ground_truth.gstar_frac", 1.0);
  spec.min_mass_count = static_cast<int>(cfg.get_int("ground_truth.min_mass_count", 10));
  spec.min_mass_override = cfg.get_double("ground_truth.min_mass", 0.0);

  spec.n_eval = cfg.get_int("eval.n", 100000);
  spec.map_p = cfg.get_double("eval.map_p", 0.0);

  for (const std::string& name : cfg.get_name_list("optimizers")) {
    const std::string p = "optimizer." + name + ".";
    OptimizerSpec o;
    o.name = name;
    o.variant = variant_from_name(cfg.get_string(p + "variant", "psgd"));
    const std::string preset = cfg.get_string(p + "preset", "experiment");
    if (preset == "general") o.preset = OptimizerSpec::Preset::kGeneral;
    else if (preset == "experiment") o.preset = OptimizerSpec::Preset::kExperiment;
    else if (preset == "explicit") o.preset = OptimizerSpec::Preset::kExplicit;
    else throw ConfigError(p + "preset must be general|experiment|explicit");
    o.b = cfg.get_double(p + "b", 0.75);
    o.gamma1 = cfg.get_double(p + "gamma1", 0.0);
    if (o.preset == OptimizerSpec::Preset::kExplicit && !(o.gamma1 > 0.0))
      throw ConfigError(p + "gamma1 required for the explicit preset");
    o.batch = static_cast<int>(cfg.get_int(p + "batch", 1));
    o.iters = cfg.get_int(p + "iters");
    spec.optimizers.push_back(std::move(o));
  }

  // Basic cross-field validation.
  if (spec.gt_kind == GroundTruthKind::kOracle1D) {
    if (spec.explicit_target && spec.explicit_target->dim() != 1)
      throw ConfigError("oracle1d ground truth needs a 1-D target");
    if (spec.src->dim() != 1 || !spec.src->has_cdf())
      throw ConfigError("oracle1d ground truth needs a 1-D source with a cdf");
    if (spec.cost.kind != CostKind::kQuadratic)
      throw ConfigError("oracle1d ground truth needs the quadratic cost");
  }
  if (spec.gt_kind == GroundTruthKind::kDrawExact1D) {
    if (spec.src->dim() != 1 || !spec.src->has_cdf())
      throw ConfigError("exact1d ground truth needs a 1-D source with a cdf");
    if (spec.cost.kind != CostKind::kQuadratic)
      throw ConfigError("exact1d ground truth needs the quadratic cost");
  }
  return spec;
}

GroundTruth make_ground_truth(const ExperimentSpec& spec, RngStream rng) {
  // Target support points.
  Vec points;
  int dim = spec.src->dim();
  int m = spec.target_count;
  if (spec.explicit_target) {
    points = spec.explicit_target->points();
    dim = spec.explicit_target->dim();
    m = spec.explicit_target->size();
  } else {
    RngStream tstream = rng.child(kTagTargetDraw);
    points.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(dim));
    for (auto& v : points)
      v = spec.target_lo + (spec.target_hi - spec.target_lo) * tstream.next_double();
    // 1-D supports are kept sorted; the exact-mass path needs increasing order.
    if (dim == 1) std::sort(points.begin(), points.end());
  }

  if (spec.gt_kind == GroundTruthKind::kOracle1D) {
    // Monotone-rearrangement ground truth: weights are taken as given
    // (uniform for sampled supports) and g* solves the 1-D problem exactly.
    DiscreteTarget target =
        spec.explicit_target
            ? *spec.explicit_target
            : DiscreteTarget(points, 1, Vec(static_cast<std::size_t>(m), 1.0));
    Oracle1D oracle = solve_1d_exact(spec.src, std::move(target));
    GroundTruth gt{std::move(oracle.target), project_gauge(oracle.g_star), true, 0.0};
    return gt;
  }

  DiscreteTarget placeholder(points, dim, Vec(static_cast<std::size_t>(m), 1.0));
  const ProjectionBox box = make_box(spec.cost, placeholder, spec.k);
  const double draw_radius = box.radius * spec.gstar_frac;
  const double guard = spec.min_mass();

  RngStream gstream = rng.child(kTagGStarDraw);
  RngStream mstream = rng.child(kTagMassEstimate);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vec g(static_cast<std::size_t>(m));
    for (auto& v : g) v = draw_radius * (2.0 * gstream.next_double() - 1.0);
    Vec masses;
    if (spec.gt_kind == GroundTruthKind::kDrawExact1D) {
      masses = cell_masses_exact_1d(*spec.src, placeholder, g);
    } else {
      masses = estimate_cell_masses(spec.cost, placeholder, g, *spec.src,
                                    spec.n_reference,
                                    mstream.child(static_cast<std::uint64_t>(attempt)));
    }
    if (*std::min_element(masses.begin(), masses.end()) < guard) continue;
    GroundTruth gt{DiscreteTarget(points, dim, std::move(masses)), project_gauge(std::move(g)),
                   spec.gt_kind != GroundTruthKind::kDrawMc,
                   spec.gt_kind == GroundTruthKind::kDrawMc
                       ? 25.0 * static_cast<double>(m) / static_cast<double>(spec.n_reference)
                       : 0.0};
    return gt;
  }
  throw ConfigError("make_ground_truth: no admissible g* in 100 draws; "
                    "lower ground_truth.gstar_frac or the mass guard");
}

void parallel_for(int n_jobs, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, n_jobs);
  if (threads <= 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n_jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

OptimizerConfig build_optimizer(const OptimizerSpec& o, const ProjectionBox& box) {
  OptimizerConfig cfg;
  switch (o.preset) {
    case OptimizerSpec::Preset::kGeneral:
      cfg = preset_general(box);
      break;
    case OptimizerSpec::Preset::kExperiment:
      cfg = preset_experiment(box, o.b);
      break;
    case OptimizerSpec::Preset::kExplicit:
      cfg.gamma1 = o.gamma1;
      cfg.b = o.b;
      break;
  }
  cfg.variant = o.variant;
  cfg.batch = o.batch;
  cfg.max_iters = o.iters;
  return cfg;
}

RunTrace average_traces(const std::vector<RunTrace>& traces) {
  RunTrace out;
  if (traces.empty()) return out;
  out.config_echo = traces.front().config_echo + " (mean over " +
                    std::to_string(traces.size()) + " repeats)";
  out.seed = traces.front().seed;
  const std::size_t rows = traces.front().rows.size();
  for (const auto& t : traces)
    if (t.rows.size() != rows)
      throw std::runtime_error("average_traces: checkpoint grids differ");
  out.rows.resize(rows);
  const double r = static_cast<double>(traces.size());
  for (std::size_t i = 0; i < rows; ++i) {
    Checkpoint& row = out.rows[i];
    row.iter = traces.front().rows[i].iter;
    row.n_samples = traces.front().rows[i].n_samples;
    for (const auto& t : traces) {
      row.pot_err_last += t.rows[i].pot_err_last / r;
      row.pot_err_avg += t.rows[i].pot_err_avg / r;
      row.map_err_last += t.rows[i].map_err_last / r;
      row.map_err_avg += t.rows[i].map_err_avg / r;
      row.h_gap_avg += t.rows[i].h_gap_avg / r;
      row.wall_time_s += t.rows[i].wall_time_s / r;
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int threads) {
  if (spec.optimizers.empty()) throw ConfigError("experiment: no optimizers configured");
  if (spec.repeats < 1) throw ConfigError("experiment: repeats must be >= 1");
  const int n_cfg = static_cast<int>(spec.optimizers.size());

  ExperimentResult result;
  result.traces.assign(static_cast<std::size_t>(n_cfg),
                       std::vector<RunTrace>(static_cast<std::size_t>(spec.repeats)));
  const int m = spec.explicit_target ? spec.explicit_target->size() : spec.target_count;
  result.noise_floor =
      spec.gt_kind == GroundTruthKind::kDrawMc
          ? 25.0 * static_cast<double>(m) / static_cast<double>(spec.n_reference)
          : 0.0;

  const RngStream root(spec.seed);

  parallel_for(spec.repeats, threads, [&](int rep) {
    const auto rep_tag = static_cast<std::uint64_t>(rep);
    GroundTruth gt =
        make_ground_truth(spec, root.child(kTagGroundTruth).child(rep_tag));
    const ProjectionBox box = make_box(spec.cost, gt.target, spec.k);
    const double map_p = spec.effective_map_p();

    for (int c = 0; c < n_cfg; ++c) {
      OptimizerConfig cfg = build_optimizer(spec.optimizers[static_cast<std::size_t>(c)], box);
      RngStream run_stream =
          root.child(kTagRun).child(static_cast<std::uint64_t>(c)).child(rep_tag);
      cfg.seed = run_stream.key();

      const RngStream map_root = run_stream.child(kTagMapEval);
      const RngStream hgap_root = run_stream.child(kTagHGapEval);
      CheckpointEval eval = [&](const SolverState& state, Checkpoint& row) {
        row.pot_err_last = potential_error(state.g, gt.g_star);
        row.pot_err_avg = potential_error(state.g_bar, gt.g_star);
        const RngStream map_stream = map_root.child(static_cast<std::uint64_t>(row.iter));
        row.map_err_last = map_error_mc(spec.cost, gt.target, state.g, gt.g_star,
                                        *spec.src, spec.n_eval, map_p, map_stream)
                               .mean;
        row.map_err_avg = map_error_mc(spec.cost, gt.target, state.g_bar, gt.g_star,
                                       *spec.src, spec.n_eval, map_p, map_stream)
                              .mean;
        row.h_gap_avg =
            estimate_H_gap(spec.cost, gt.target, state.g_bar, gt.g_star, *spec.src,
                           spec.n_eval,
                           hgap_root.child(static_cast<std::uint64_t>(row.iter)))
                .mean;
      };

      result.traces[static_cast<std::size_t>(c)][static_cast<std::size_t>(rep)] =
          run(spec.cost, gt.target, *spec.src, box, cfg,
              run_stream.child(kTagTrain), eval)
              .trace;
    }
  });

  for (int c = 0; c < n_cfg; ++c) {
    result.mean_traces.push_back(average_traces(result.traces[static_cast<std::size_t>(c)]));
    const RunTrace& mean_trace = result.mean_traces.back();
    const double n_hi = static_cast<double>(mean_trace.rows.back().n_samples);
    const double n_lo = n_hi / 100.0;  // last two decades
    for (TraceField f : {TraceField::kPotErrLast, TraceField::kPotErrAvg,
                         TraceField::kMapErrLast, TraceField::kMapErrAvg,
                         TraceField::kHGapAvg}) {
      SummaryRow row;
      row.config = spec.optimizers[static_cast<std::size_t>(c)].name;
      row.metric = trace_field_name(f);
      row.n_lo = n_lo;
      row.n_hi = n_hi;
      row.final_value = checkpoint_field(mean_trace.rows.back(), f);
      try {
        const RateFit fit = fit_rate(mean_trace, f, n_lo, n_hi, result.noise_floor);
        row.slope = fit.slope;
        row.std_err = fit.std_err;
        row.points = fit.points;
      } catch (const std::exception&) {
        row.slope = std::nan("");
        row.std_err = std::nan("");
        row.points = 0;
      }
      result.summary.push_back(std::move(row));
    }
  }
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string summary_csv_string(const ExperimentResult& result,
                               const ExperimentSpec& spec) {
  std::string out =
      "name,config,metric,slope,slope_stderr,window_lo,window_hi,points,final_value\n";
  for (const auto& row : result.summary) {
    out += spec.name + "," + row.config + "," + row.metric + "," +
           format_double(row.slope) + "," + format_double(row.std_err) + "," +
           format_double(row.n_lo) + "," + format_double(row.n_hi) + "," +
           std::to_string(row.points) + "," + format_double(row.final_value) + "\n";
  }
  return out;
}

void write_experiment_csvs(const ExperimentResult& result, const ExperimentSpec& spec,
                           const std::string& out_dir, bool with_timings) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(out_dir) / spec.name;
  for (std::size_t c = 0; c < result.traces.size(); ++c) {
    const fs::path cfg_dir = base / spec.optimizers[c].name;
    fs::create_directories(cfg_dir);
    for (std::size_t r = 0; r < result.traces[c].size(); ++r) {
      char name[32];
      std::snprintf(name, sizeof(name), "%03zu.csv", r);
      write_trace_csv(result.traces[c][r], (cfg_dir / name).string(), with_timings);
    }
    write_trace_csv(result.mean_traces[c], (cfg_dir / "mean.csv").string(), with_timings);
  }
  const std::string tmp = (base / "summary.csv.tmp").string();
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << summary_csv_string(result, spec);
  }
  fs::rename(tmp, (base / "summary.csv").string());
}

}  // namespace sdot
