// Command-line front end: solve / experiment / estimate-radius / oracle-check.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sdot/bench.hpp"
#include "sdot/errors.hpp"

namespace fs = std::filesystem;
using namespace sdot;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed_override = -1;
  int threads = 0;
  std::int64_t repeats_override = 0;
  std::int64_t iters_override = 0;
  bool timings = false;
  int verbosity = 1;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SDOT_SGD_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  std::ofstream f(tmp, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + tmp);
  f << text;
  f.close();
  fs::rename(tmp, path);
}

std::string vector_text(const Vec& v) {
  std::string out;
  char buf[40];
  for (double x : v) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", x);
    out += buf;
  }
  return out;
}

void apply_overrides(Config& cfg, const GlobalArgs& args) {
  if (args.seed_override >= 0) cfg.set("seed", std::to_string(args.seed_override));
  if (args.repeats_override > 0)
    cfg.set("repeats", std::to_string(args.repeats_override));
}

int cmd_solve(const GlobalArgs& args) {
  Config cfg = Config::parse_file(args.config_path);
  apply_overrides(cfg, args);

  const CostFunction cost = cost_from_config(cfg);
  const SourcePtr src = source_from_config(cfg);
  const DiscreteTarget target = DiscreteTarget::load(cfg.get_string("target.file"));
  if (target.dim() != src->dim())
    throw ConfigError("target dimension does not match the source dimension");

  ProjectionBox box;
  if (cfg.get_string("box.kind") == "explicit") {
    box.radius = cfg.get_double("box.radius");
    box.m = target.size();
    if (!(box.radius >= 0.0)) throw ConfigError("box.radius must be >= 0");
  } else {
    box = make_box(cost, target, compact_from_config(cfg, src->dim()));
  }

  OptimizerSpec ospec;
  ospec.variant = variant_from_name(cfg.get_string("optimizer.variant", "psgd"));
  const std::string preset = cfg.get_string("optimizer.preset", "experiment");
  OptimizerConfig ocfg;
  if (preset == "general") {
    ocfg = preset_general(box);
  } else if (preset == "experiment") {
    ocfg = preset_experiment(box, cfg.get_double("optimizer.b", 0.75));
  } else if (preset == "explicit") {
    ocfg.gamma1 = cfg.get_double("optimizer.gamma1");
    ocfg.b = cfg.get_double("optimizer.b", 0.75);
  } else {
    throw ConfigError("optimizer.preset must be general|experiment|explicit");
  }
  ocfg.variant = ospec.variant;
  ocfg.batch = static_cast<int>(cfg.get_int("optimizer.batch", 1));
  ocfg.max_iters = args.iters_override > 0 ? args.iters_override
                                           : cfg.get_int("optimizer.iters");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  ocfg.seed = seed;
  cfg.require_consumed();

  const RngStream root(seed);
  const RunResult result =
      run(cost, target, *src, box, ocfg, root.child(1));

  fs::create_directories(args.out_dir);
  write_text_atomic((fs::path(args.out_dir) / "g.txt").string(),
                    vector_text(result.state.g));
  write_text_atomic((fs::path(args.out_dir) / "g_bar.txt").string(),
                    vector_text(result.state.g_bar));
  write_trace_csv(result.trace, (fs::path(args.out_dir) / "trace.csv").string(),
                  args.timings);
  if (args.verbosity > 0)
    std::cout << "solve: " << ocfg.echo() << "\n"
              << "solve: box radius " << box.radius << ", wrote g.txt, g_bar.txt, "
              << "trace.csv to " << args.out_dir << "\n";
  return 0;
}

int cmd_experiment(const GlobalArgs& args) {
  Config cfg = Config::parse_file(args.config_path);
  apply_overrides(cfg, args);
  ExperimentSpec spec = experiment_spec_from_config(cfg);
  cfg.require_consumed();
  if (args.iters_override > 0)
    for (auto& o : spec.optimizers) o.iters = args.iters_override;

  const ExperimentResult result = run_experiment(spec, resolve_threads(args.threads));
  write_experiment_csvs(result, spec, args.out_dir, args.timings);
  std::cout << summary_csv_string(result, spec);
  if (args.verbosity > 0)
    std::cout << "experiment: wrote traces under "
              << (fs::path(args.out_dir) / spec.name).string() << "\n";
  return 0;
}

int cmd_estimate_radius(const GlobalArgs& args) {
  Config cfg = Config::parse_file(args.config_path);
  apply_overrides(cfg, args);
  const SourcePtr src = source_from_config(cfg);
  const double w_min = cfg.get_double("radius.w_min");
  const double delta = cfg.get_double("radius.delta");
  const std::int64_t cap = cfg.get_int("radius.cap", 0);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

  std::optional<CostFunction> cost;
  std::optional<DiscreteTarget> target;
  if (cfg.has("target.file")) {
    cost = cost_from_config(cfg);
    target = DiscreteTarget::load(cfg.get_string("target.file"));
  }
  cfg.require_consumed();

  if (!(w_min > 0.0 && w_min <= 1.0) || !(delta > 0.0 && delta < 1.0))
    throw ConfigError("estimate-radius: need 0 < w_min <= 1 and 0 < delta < 1");

  const RngStream root(seed);
  const RadiusEstimate est = estimate_radius(*src, w_min, delta, root.child(1), cap);
  std::ostringstream out;
  out.precision(17);
  out << "R " << est.radius << "\n"
      << "n_used " << est.n_used << "\n"
      << "capped " << (est.capped ? 1 : 0) << "\n";
  if (est.capped)
    std::cerr << "warning: sample size capped below the DKW requirement; "
                 "the coverage guarantee is void\n";
  if (target) {
    const CompactSet k = CompactSet::ball(Vec(static_cast<std::size_t>(src->dim()), 0.0),
                                          est.radius);
    out << "box_radius " << box_radius(*cost, *target, k) << "\n";
  }
  std::cout << out.str();
  return 0;
}

int cmd_oracle_check(const GlobalArgs& args) {
  Config cfg = Config::parse_file(args.config_path);
  apply_overrides(cfg, args);
  const SourcePtr src = source_from_config(cfg);

  std::optional<DiscreteTarget> target;
  if (cfg.has("target.file")) {
    target = DiscreteTarget::load(cfg.get_string("target.file"));
  } else {
    Vec pts = cfg.get_double_list("target.points_list");
    Vec w = cfg.has("target.weights_list") ? cfg.get_double_list("target.weights_list")
                                           : Vec(pts.size(), 1.0);
    target = DiscreteTarget(std::move(pts), 1, std::move(w));
  }
  const auto n_eval = cfg.get_int("eval.n", 100000);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  const double perturb = cfg.get_double("check.perturb_amount", 0.0);
  const auto perturb_index = static_cast<int>(cfg.get_int("check.perturb_index", 0));
  cfg.require_consumed();

  const CostFunction cost = CostFunction::quadratic();
  Oracle1D oracle = solve_1d_exact(src, *target);
  if (perturb != 0.0) {
    if (perturb_index < 0 || perturb_index >= target->size())
      throw ConfigError("check.perturb_index out of range");
    oracle.g_star[static_cast<std::size_t>(perturb_index)] += perturb;
  }

  const RngStream root(seed);
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    if (!ok) ++failures;
  };

  {  // first-order optimality through the exact cdf
    const Vec masses = cell_masses_exact_1d(*src, *target, oracle.g_star);
    double worst = 0.0;
    for (int i = 0; i < target->size(); ++i)
      worst = std::max(worst, std::abs(masses[static_cast<std::size_t>(i)] -
                                       target->weight(i)));
    std::ostringstream d;
    d << "max |mass - w| = " << worst;
    report("first_order_exact", worst <= 1e-9, d.str());
  }
  {  // Monte-Carlo cell masses agree
    const Vec masses = estimate_cell_masses(cost, *target, oracle.g_star, *src,
                                            n_eval, root.child(2));
    double worst = 0.0;
    for (int i = 0; i < target->size(); ++i)
      worst = std::max(worst, std::abs(masses[static_cast<std::size_t>(i)] -
                                       target->weight(i)));
    const double band =
        4.0 * std::sqrt(0.25 / static_cast<double>(n_eval));
    std::ostringstream d;
    d << "max |mass - w| = " << worst << " (band " << band << ")";
    report("first_order_mc", worst <= band, d.str());
  }
  {  // Hessian vs central differences of exact cell masses
    bool ok = true;
    std::string detail = "max rel err ";
    try {
      const Vec h = hessian_1d(*src, *target, oracle.g_star);
      const int m = target->size();
      const double eps = 1e-5;
      double worst = 0.0;
      for (int j = 0; j < m; ++j) {
        Vec gp(oracle.g_star), gm(oracle.g_star);
        gp[static_cast<std::size_t>(j)] += eps;
        gm[static_cast<std::size_t>(j)] -= eps;
        const Vec mp = cell_masses_exact_1d(*src, *target, gp);
        const Vec mm = cell_masses_exact_1d(*src, *target, gm);
        for (int i = 0; i < m; ++i) {
          const double fd = (mp[static_cast<std::size_t>(i)] -
                             mm[static_cast<std::size_t>(i)]) /
                            (2.0 * eps);
          const double Hij = h[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j)];
          const double scale = std::max({std::abs(Hij), std::abs(fd), 1e-8});
          worst = std::max(worst, std::abs(Hij - fd) / scale);
        }
      }
      detail += std::to_string(worst);
      ok = worst <= 1e-4;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("error: ") + e.what();
    }
    report("hessian_fd", ok, detail);
  }
  {  // Lemma-style box containment with the central quantile compact
    const double w_min = target->w_min();
    const double q = w_min / 4.0;
    const CompactSet k = CompactSet::cube(Vec{src->quantile(q)}, Vec{src->quantile(1.0 - q)});
    const double r = box_radius(cost, *target, k);
    const double worst = max_abs(oracle.g_star);
    std::ostringstream d;
    d << "max |g*| = " << worst << " vs radius " << r;
    report("box_containment", worst <= r, d.str());
  }
  {  // exact vs MC map error on a perturbed potential
    Vec g(oracle.g_star);
    RngStream pstream = root.child(3);
    for (auto& v : g) v += 0.05 * (2.0 * pstream.next_double() - 1.0);
    const double exact = map_error_exact_1d(oracle, g, 2.0);
    const MeanStdErr mc = map_error_mc(cost, *target, g, oracle.g_star, *src,
                                       n_eval, 2.0, root.child(4));
    const double band = 4.0 * mc.std_err + 1e-12;
    std::ostringstream d;
    d << "exact " << exact << " vs mc " << mc.mean << " (band " << band << ")";
    report("map_error_exact_vs_mc", std::abs(exact - mc.mean) <= band, d.str());
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-discrete optimal transport: stochastic semi-dual solver and benchmarks"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "configuration file")->required();
  app.add_option("--out", args.out_dir, "output directory");
  app.add_option("--seed", args.seed_override, "override the config seed");
  app.add_option("--threads", args.threads,
                 "worker threads (default: SDOT_SGD_THREADS or 1)");
  app.add_option("--repeats", args.repeats_override, "override experiment repeats");
  app.add_option("--iters", args.iters_override, "override optimizer iterations");
  app.add_flag("--timings", args.timings,
               "write measured wall times into CSVs (non-reproducible bytes)");
  app.add_flag_function("-q", [&](std::int64_t) { args.verbosity = 0; }, "quiet");
  app.add_flag_function("-v", [&](std::int64_t n) { args.verbosity = 1 + static_cast<int>(n); },
                        "verbose");

  auto* solve = app.add_subcommand("solve", "run the projected stochastic solver");
  auto* experiment = app.add_subcommand("experiment", "replicate a benchmark experiment");
  auto* radius = app.add_subcommand("estimate-radius", "DKW quantile radius estimate");
  auto* oracle = app.add_subcommand("oracle-check", "1-D oracle self-checks");
  for (auto* sub : {solve, experiment, radius, oracle}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(args);
    if (experiment->parsed()) return cmd_experiment(args);
    if (radius->parsed()) return cmd_estimate_radius(args);
    if (oracle->parsed()) return cmd_oracle_check(args);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
