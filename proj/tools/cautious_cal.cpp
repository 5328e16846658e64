// Command-line toolkit: data generation, max-cp table precomputation, the
// full experiment sweep, standalone evaluation, and the risk-scenario sweep.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cautious/baselines.hpp"
#include "cautious/datagen.hpp"
#include "cautious/harness.hpp"
#include "cautious/htlb.hpp"
#include "cautious/io.hpp"
#include "cautious/scenario.hpp"

namespace fs = std::filesystem;
using namespace cautious;

namespace {

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

void add_gen_data(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "gen-data", "Generate truth maps and sampled calibration sets");
  auto n = std::make_shared<int>(10000);
  auto maps = std::make_shared<int>(1);
  auto sets = std::make_shared<int>(1);
  auto lo = std::make_shared<double>(0.9);
  auto hi = std::make_shared<double>(1.0);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto out = std::make_shared<std::string>("data");
  sub->add_option("--n", *n, "Positions per map")->capture_default_str();
  sub->add_option("--maps", *maps, "Number of truth maps")
      ->capture_default_str();
  sub->add_option("--sets", *sets, "Calibration sets per map")
      ->capture_default_str();
  sub->add_option("--lo", *lo, "Lower edge of the truth range")
      ->capture_default_str();
  sub->add_option("--hi", *hi, "Upper edge of the truth range")
      ->capture_default_str();
  sub->add_option("--seed", *seed, "Base seed")->capture_default_str();
  sub->add_option("--out", *out, "Output directory")->capture_default_str();
  sub->callback([=]() {
    if (*n < 1 || *maps < 1 || *sets < 1)
      throw std::domain_error("counts must be positive");
    fs::create_directories(*out);
    int files = 0;
    for (int i = 0; i < *maps; ++i) {
      SeededRng map_rng(*seed, std::uint64_t(i));
      const TrueCalibrationMap truth =
          gen_true_map(std::size_t(*n), *lo, *hi, map_rng);
      char name[64];
      std::snprintf(name, sizeof name, "truth%03d.csv", i);
      write_truth_csv(fs::path(*out) / name, truth);
      ++files;
      for (int j = 0; j < *sets; ++j) {
        SeededRng set_rng(*seed,
                          (std::uint64_t(i) << 32) + std::uint64_t(j));
        const CalibrationSet set = sample_calibration_set(truth, set_rng);
        std::snprintf(name, sizeof name, "set%03d_%03d.csv", i, j);
        write_set_csv(fs::path(*out) / name, set);
        ++files;
      }
    }
    std::cout << "wrote " << files << " file(s) under " << *out << "\n";
  });
}

void add_precompute(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "precompute-maxcp",
      "Simulate and persist the max-cp statistic quantile table");
  auto opt = std::make_shared<MaxCpOptions>();
  auto out = std::make_shared<std::string>("maxcp_table.csv");
  sub->add_option("--m1", opt->m1, "Shortest suffix window")
      ->capture_default_str();
  sub->add_option("--m2", opt->m2, "Longest suffix window")
      ->capture_default_str();
  sub->add_option("--q", opt->q, "Confidence level")->capture_default_str();
  sub->add_option("--n-p", opt->n_p, "Probability grid size")
      ->capture_default_str();
  sub->add_option("--n-seq", opt->n_seq, "Simulated sequences per grid point")
      ->capture_default_str();
  sub->add_option("--seed", opt->seed, "Simulation seed")
      ->capture_default_str();
  sub->add_option("--threads", opt->threads, "Worker threads")
      ->capture_default_str();
  sub->add_option("--max-work-units", opt->max_work_units,
                  "Refuse jobs above n_p * n_seq * m2 units")
      ->capture_default_str();
  sub->add_option("--out", *out, "Output table path")->capture_default_str();
  sub->callback([=]() {
    const auto start = std::chrono::steady_clock::now();
    const MaxCpTable table = precompute_maxcp_table(*opt);
    save_maxcp_table(table, *out);
    std::printf("wrote %s (n_p=%d, n_seq=%d, m1=%d, m2=%d, q=%g) in %.1fs\n",
                out->c_str(), table.n_p, table.n_seq, table.m1, table.m2,
                table.q, elapsed_s(start));
  });
}

void print_aggregates(const ExperimentResult& result) {
  std::printf("%-11s %-9s %6s %5s %7s %8s %7s %7s %12s %12s\n", "method",
              "postproc", "cells", "fail", "indep%", "within%", "zero%",
              "p1>=0%", "p1_mean", "mean");
  for (const auto& a : result.aggregates)
    std::printf("%-11s %-9s %6d %5d %7.2f %8.4f %7.2f %7.2f %12.4g %12.4g\n",
                a.method.c_str(), a.postproc.c_str(), a.cells, a.failures,
                a.independent_violation_rate_pct, a.mean_within_violation_pct,
                a.cells_zero_within_pct, a.outcome_pctl_nonneg_pct,
                a.mean_outcome_pctl, a.mean_outcome_mean);
}

void add_run(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "run", "Run the full experiment sweep from a config file");
  auto config_path = std::make_shared<std::string>();
  auto seed = std::make_shared<std::uint64_t>(0);
  auto out = std::make_shared<std::string>();
  auto threads = std::make_shared<int>(1);
  auto dry_run = std::make_shared<bool>(false);
  auto dump_maps = std::make_shared<bool>(false);
  sub->add_option("--config", *config_path, "Experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* seed_opt =
      sub->add_option("--seed", *seed, "Override the config base_seed");
  auto* out_opt =
      sub->add_option("--out", *out, "Override the config out_dir");
  auto* threads_opt =
      sub->add_option("--threads", *threads, "Override the config threads");
  sub->add_flag("--dry-run", *dry_run,
                "Print the workload estimate and exit without running");
  auto* dump_opt = sub->add_flag("--dump-maps", *dump_maps,
                                 "Write per-cell bound maps under out/maps");
  sub->callback([=]() {
    ExperimentConfig cfg = load_experiment_config(*config_path);
    if (seed_opt->count() > 0) cfg.base_seed = *seed;
    if (out_opt->count() > 0) cfg.out_dir = *out;
    if (threads_opt->count() > 0) cfg.threads = *threads;
    if (dump_opt->count() > 0) cfg.dump_maps = *dump_maps;
    cfg.check();
    const auto grid =
        cfg.methods.empty() ? default_method_grid() : cfg.methods;
    if (*dry_run) {
      const WorkEstimate est = estimate_work(cfg);
      std::printf(
          "dry run: %d map(s) x %d set(s) x %zu variant(s) = %llu cells\n",
          cfg.n_maps, cfg.sets_per_map, grid.size(),
          static_cast<unsigned long long>(est.cells));
      std::printf("approx label operations: %.3g\n", double(est.label_ops));
      std::printf("eval skip: %zu, htlb window: %d, out_dir: %s\n",
                  cfg.eval_skip_effective(), cfg.htlb_window(),
                  cfg.out_dir.c_str());
      return;
    }
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult result = run_experiment(cfg);
    std::printf("completed %zu cell row(s) in %.1fs\n", result.rows.size(),
                elapsed_s(start));
    print_aggregates(result);
    std::printf("metrics: %s\nsummary: %s\n", result.metrics_path.c_str(),
                result.summary_path.c_str());
  });
}

void add_eval(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "eval", "Evaluate a bound map against a known truth map");
  auto bounds_path = std::make_shared<std::string>();
  auto truth_path = std::make_shared<std::string>();
  auto l = std::make_shared<double>(2.0);
  auto percentile = std::make_shared<double>(1.0);
  auto eval_skip = std::make_shared<std::size_t>(0);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto cap = std::make_shared<double>(kDefaultRiskCap);
  auto out = std::make_shared<std::string>();
  sub->add_option("--bounds", *bounds_path,
                  "Bound map CSV (index,bound or the 4-column layout)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* truth_opt =
      sub->add_option("--truth", *truth_path,
                      "Truth CSV; optional when --bounds carries truth columns")
          ->check(CLI::ExistingFile);
  sub->add_option("--l", *l, "Risk exponent")->capture_default_str();
  sub->add_option("--percentile", *percentile, "Outcome percentile (percent)")
      ->capture_default_str();
  sub->add_option("--eval-skip", *eval_skip,
                  "Exclude the first this many positions (0-based)")
      ->capture_default_str();
  sub->add_option("--seed", *seed, "Seed for the independent-position draw")
      ->capture_default_str();
  sub->add_option("--risk-cap", *cap, "Risk level ceiling")
      ->capture_default_str();
  sub->add_option("--out", *out, "Also write the metrics as a one-row CSV");
  sub->callback([=]() {
    const BoundsFile file = read_bounds_csv(*bounds_path);
    TrueCalibrationMap truth;
    if (truth_opt->count() > 0)
      truth = read_truth_csv(*truth_path);
    else if (file.truth)
      truth = *file.truth;
    else
      throw std::runtime_error(
          "no truth available: pass --truth or a 4-column bounds file");

    SeededRng rng(*seed);
    const int indep =
        eval_independent_violation(file.map, truth, *eval_skip, rng);
    const double within =
        eval_within_map_violation(file.map, truth, *eval_skip);
    const OutcomeStats stats =
        eval_outcomes(file.map, truth, *l, *percentile, *eval_skip, *cap);
    std::printf("independent_violation=%d\n", indep);
    std::printf("within_violation_pct=%s\n", format_double(within).c_str());
    std::printf("outcome_pctl=%s\n", format_double(stats.percentile).c_str());
    std::printf("outcome_mean=%s\n", format_double(stats.mean).c_str());
    if (!out->empty()) {
      std::ofstream f(*out, std::ios::binary);
      if (!f)
        throw std::runtime_error("cannot open " + *out + " for writing");
      f << "independent_violation,within_violation_pct,outcome_pctl,"
           "outcome_mean\n"
        << indep << ',' << format_double(within) << ','
        << format_double(stats.percentile) << ','
        << format_double(stats.mean) << '\n';
      if (!f) throw std::runtime_error("write to " + *out + " failed");
    }
  });
}

void add_demo_scenario(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "demo-scenario",
      "Sweep the expected payoff of exact, under- and overconfident "
      "probability estimates");
  auto l = std::make_shared<double>(2.0);
  auto delta = std::make_shared<double>(0.01);
  auto c_min = std::make_shared<double>(0.9);
  auto c_max = std::make_shared<double>(0.999);
  auto points = std::make_shared<int>(100);
  auto cap = std::make_shared<double>(kDefaultRiskCap);
  auto out = std::make_shared<std::string>();
  sub->add_option("--l", *l, "Risk exponent")->capture_default_str();
  sub->add_option("--delta", *delta, "Estimation error either side")
      ->capture_default_str();
  sub->add_option("--c-min", *c_min, "Grid start")->capture_default_str();
  sub->add_option("--c-max", *c_max, "Grid end")->capture_default_str();
  sub->add_option("--points", *points, "Grid size")->capture_default_str();
  sub->add_option("--risk-cap", *cap, "Risk level ceiling")
      ->capture_default_str();
  sub->add_option("--out", *out, "Output CSV (stdout when omitted)");
  sub->callback([=]() {
    if (*points < 2) throw std::domain_error("grid needs at least 2 points");
    if (!(*c_min >= 0.0 && *c_min <= *c_max && *c_max < 1.0))
      throw std::domain_error("grid must satisfy 0 <= c_min <= c_max < 1");
    if (!(*delta >= 0.0)) throw std::domain_error("delta must be >= 0");
    std::ostringstream text;
    text << "c,exact,underconfident,overconfident\n";
    for (int i = 0; i < *points; ++i) {
      const double c =
          *c_min + (*c_max - *c_min) * double(i) / double(*points - 1);
      text << format_double(c) << ',';
      text << format_double(
          expected_outcome(c, optimal_risk(c, *l, *cap), *l));
      text << ',';
      const double under = c - *delta;
      if (under >= 0.0)
        text << format_double(
            expected_outcome(c, optimal_risk(under, *l, *cap), *l));
      text << ',';
      const double over = c + *delta;
      if (over < 1.0)
        text << format_double(
            expected_outcome(c, optimal_risk(over, *l, *cap), *l));
      text << '\n';
    }
    if (out->empty()) {
      std::cout << text.str();
    } else {
      std::ofstream f(*out, std::ios::binary);
      if (!f)
        throw std::runtime_error("cannot open " + *out + " for writing");
      f << text.str();
      if (!f) throw std::runtime_error("write to " + *out + " failed");
      std::cout << "wrote " << *out << "\n";
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cautious lower-bound calibration toolkit"};
  app.set_version_flag("--version", "cautious-cal 0.1.0");
  app.require_subcommand(1);
  add_gen_data(app);
  add_precompute(app);
  add_run(app);
  add_eval(app);
  add_demo_scenario(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
