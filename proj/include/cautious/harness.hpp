#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cautious/datagen.hpp"
#include "cautious/lower_bound_map.hpp"
#include "cautious/rng.hpp"
#include "cautious/scenario.hpp"

namespace cautious {

// ---------------------------------------------------------------------------
// Post-processing
// ---------------------------------------------------------------------------

// Clamp every defined entry to min(entry, max_value) and record the ceiling
// in the config snapshot. Idempotent.
LowerBoundMap postproc_cut(LowerBoundMap map, double max_value);

// Right-to-left running minimum over the defined entries: repairs local
// monotonicity conflicts downward (a lower bound further right also bounds
// everything to its left). Idempotent.
LowerBoundMap postproc_mono(LowerBoundMap map);

struct PostprocFlags {
  bool cut = false;
  bool mono = false;
};
std::string postproc_name(PostprocFlags f);  // none | cut | mono | cut_mono
PostprocFlags parse_postproc(const std::string& s);

// ---------------------------------------------------------------------------
// Evaluation against a known truth map
// ---------------------------------------------------------------------------
// Eligible positions are the defined indices at or beyond eval_skip
// (0-based: the first eval_skip positions are excluded). All three
// evaluators throw if no position is eligible.

// Draw one eligible position uniformly; 1 if the bound exceeds the truth.
int eval_independent_violation(const LowerBoundMap& map,
                               const TrueCalibrationMap& truth,
                               std::size_t eval_skip, SeededRng& rng);

// Percentage of eligible positions whose bound exceeds the truth.
double eval_within_map_violation(const LowerBoundMap& map,
                                 const TrueCalibrationMap& truth,
                                 std::size_t eval_skip);

// Expected payoff at each eligible position when the bound is trusted to
// pick the risk: expected_outcome(truth_k, optimal_risk(bound_k, l), l).
// Returns the requested percentile (linear interpolation) and the mean.
struct OutcomeStats {
  double percentile = 0.0;
  double mean = 0.0;
};
OutcomeStats eval_outcomes(const LowerBoundMap& map,
                           const TrueCalibrationMap& truth, double l,
                           double percentile, std::size_t eval_skip,
                           double risk_cap = kDefaultRiskCap);

// ---------------------------------------------------------------------------
// Experiment harness
// ---------------------------------------------------------------------------

struct MethodSpec {
  std::string name;  // htlb_cp, htlb_maxcp, isobins_cp, rcir_cp, sva,
                     // isocal, logcal, betacal
  PostprocFlags post;
};

// Every method with every post-processing variant that changes it.
std::vector<MethodSpec> default_method_grid();
// One variant per method: the most protective applicable combination.
std::vector<MethodSpec> conservative_method_grid();

struct ExperimentConfig {
  int n_maps = 20;
  int sets_per_map = 50;
  int n = 10000;
  double map_lo = 0.9;
  double map_hi = 1.0;
  double q = 0.99;
  int m = 2000;   // sum-statistic window
  int m1 = 100;   // max-cp suffix window range
  int m2 = 2000;
  std::vector<MethodSpec> methods;  // empty selects default_method_grid()
  double scenario_l = 2.0;
  double outcome_percentile = 1.0;  // percent, for eval_outcomes
  std::uint64_t base_seed = 0;
  std::string maxcp_table_path;     // required when a max-cp method runs
  std::string out_dir = "results";
  long eval_skip = -1;              // -1 selects the HTLB window length
  int threads = 1;
  bool dump_maps = false;           // per-cell bound dumps under out/maps/
  // Weak enough that smoothed isotonic/logistic tops (1 - eps/2) stay above
  // the HTLB ceiling cp_lower_bound(m, m, q), so the "cut" post-processing
  // still binds on them the way it does for the unsmoothed fits.
  double label_smoothing = 0.001;
  double rcir_width_threshold = 0.05;
  double risk_cap = kDefaultRiskCap;

  void check() const;
  // Longest window among the HTLB methods present (falls back to m); this
  // drives both the default eval_skip and the cut ceiling.
  int htlb_window() const;
  std::size_t eval_skip_effective() const;
};

// One evaluated (truth map, sampled set, method variant) cell.
struct MetricsRow {
  int map_id = 0;
  int set_id = 0;
  std::string method;
  std::string postproc;
  int independent_violation = 0;
  double within_violation_pct = 0.0;
  double outcome_pctl = 0.0;
  double outcome_mean = 0.0;
  std::string status = "ok";
};

struct MethodAggregate {
  std::string method;
  std::string postproc;
  int cells = 0;
  int failures = 0;
  double independent_violation_rate_pct = 0.0;
  double mean_within_violation_pct = 0.0;
  double cells_zero_within_pct = 0.0;      // share of cells with 0 conflicts
  double outcome_pctl_nonneg_pct = 0.0;    // share of cells with pctl >= 0
  double mean_outcome_pctl = 0.0;
  double mean_outcome_mean = 0.0;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<MethodAggregate> aggregates;
  std::string metrics_path;
  std::string summary_path;
};

// Rough workload forecast used by the dry-run mode.
struct WorkEstimate {
  std::uint64_t cells = 0;      // (map, set) pairs times method variants
  std::uint64_t label_ops = 0;  // approximate elementary label operations
};
WorkEstimate estimate_work(const ExperimentConfig& cfg);

// Full sweep: n_maps truth maps (stream (seed, i)), sets_per_map sets each
// (stream (seed, i*2^32 + j)), every method variant fitted and evaluated on
// every set. Writes metrics.csv and summary.json under out_dir and returns
// everything in memory as well. Deterministic for a fixed config: thread
// count only changes wall time, never output bytes. Per-cell fit failures
// are recorded in the row's status, never abort the sweep.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

const MethodAggregate* find_aggregate(const ExperimentResult& result,
                                      const std::string& method,
                                      const std::string& postproc);

}  // namespace cautious
