#include "cautious/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "cautious/baselines.hpp"
#include "cautious/htlb.hpp"
#include "cautious/io.hpp"
#include "cautious/stats.hpp"
#include "parallel.hpp"

namespace cautious {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kMethodOrder[] = {"htlb_cp", "htlb_maxcp", "isobins_cp",
                                        "rcir_cp",  "sva",        "isocal",
                                        "logcal",   "betacal"};

bool known_method(const std::string& name) {
  for (const char* m : kMethodOrder)
    if (name == m) return true;
  return false;
}

std::string snap(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Error text destined for a CSV field: no commas, no line breaks.
std::string sanitize_error(const char* what) {
  std::string s = what ? what : "unknown error";
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// First index that is both defined and past the skip.
std::size_t first_eligible(const LowerBoundMap& map, std::size_t eval_skip) {
  return std::max(map.defined_from, eval_skip);
}

}  // namespace

// ---------------------------------------------------------------------------
// Post-processing
// ---------------------------------------------------------------------------

LowerBoundMap postproc_cut(LowerBoundMap map, double max_value) {
  if (!(max_value >= 0.0 && max_value <= 1.0))
    throw std::domain_error("cut ceiling must lie in [0, 1]");
  for (std::size_t i = map.defined_from; i < map.size(); ++i)
    map.bounds[i] = std::min(map.bounds[i], max_value);
  if (!map.cut) {
    map.cut = true;
    map.config += snap(";cut=%.17g", max_value);
  }
  return map;
}

LowerBoundMap postproc_mono(LowerBoundMap map) {
  double running = 1.0;
  for (std::size_t i = map.size(); i-- > map.defined_from;) {
    running = std::min(running, map.bounds[i]);
    map.bounds[i] = running;
  }
  if (!map.mono) {
    map.mono = true;
    map.config += ";mono=1";
  }
  return map;
}

std::string postproc_name(PostprocFlags f) {
  if (f.cut && f.mono) return "cut_mono";
  if (f.cut) return "cut";
  if (f.mono) return "mono";
  return "none";
}

PostprocFlags parse_postproc(const std::string& s) {
  if (s == "none") return {false, false};
  if (s == "cut") return {true, false};
  if (s == "mono") return {false, true};
  if (s == "cut_mono") return {true, true};
  throw std::invalid_argument("unknown post-processing '" + s +
                              "' (expected none, cut, mono, cut_mono)");
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

void check_eval_inputs(const LowerBoundMap& map,
                       const TrueCalibrationMap& truth,
                       std::size_t eval_skip) {
  if (map.size() != truth.size())
    throw std::invalid_argument("bound map and truth differ in length");
  if (first_eligible(map, eval_skip) >= map.size())
    throw std::invalid_argument("no eligible position to evaluate");
}

}  // namespace

int eval_independent_violation(const LowerBoundMap& map,
                               const TrueCalibrationMap& truth,
                               std::size_t eval_skip, SeededRng& rng) {
  check_eval_inputs(map, truth, eval_skip);
  const std::size_t first = first_eligible(map, eval_skip);
  const std::size_t count = map.size() - first;
  const std::size_t pick = first + std::size_t(rng.next_below(count));
  return map.bounds[pick] > truth.probs[pick] ? 1 : 0;
}

double eval_within_map_violation(const LowerBoundMap& map,
                                 const TrueCalibrationMap& truth,
                                 std::size_t eval_skip) {
  check_eval_inputs(map, truth, eval_skip);
  const std::size_t first = first_eligible(map, eval_skip);
  std::size_t violations = 0;
  for (std::size_t i = first; i < map.size(); ++i)
    if (map.bounds[i] > truth.probs[i]) ++violations;
  return 100.0 * double(violations) / double(map.size() - first);
}

OutcomeStats eval_outcomes(const LowerBoundMap& map,
                           const TrueCalibrationMap& truth, double l,
                           double percentile, std::size_t eval_skip,
                           double risk_cap) {
  check_eval_inputs(map, truth, eval_skip);
  if (!(percentile >= 0.0 && percentile <= 100.0))
    throw std::domain_error("percentile must lie in [0, 100]");
  const std::size_t first = first_eligible(map, eval_skip);
  std::vector<double> payoffs;
  payoffs.reserve(map.size() - first);
  double mean = 0.0;
  for (std::size_t i = first; i < map.size(); ++i) {
    const double xi = optimal_risk(map.bounds[i], l, risk_cap);
    const double payoff = expected_outcome(truth.probs[i], xi, l);
    payoffs.push_back(payoff);
    mean += payoff;
  }
  mean /= double(payoffs.size());
  std::sort(payoffs.begin(), payoffs.end());
  const double rank = percentile / 100.0 * double(payoffs.size() - 1);
  const std::size_t lo = std::size_t(rank);
  const double frac = rank - double(lo);
  double pctl = payoffs[lo];
  if (lo + 1 < payoffs.size()) pctl += frac * (payoffs[lo + 1] - payoffs[lo]);
  return OutcomeStats{pctl, mean};
}

// ---------------------------------------------------------------------------
// Method grids
// ---------------------------------------------------------------------------

std::vector<MethodSpec> default_method_grid() {
  std::vector<MethodSpec> grid;
  const PostprocFlags none{false, false}, cut{true, false}, mono{false, true},
      cut_mono{true, true};
  // HTLB maps never exceed the cut ceiling, so cut variants are omitted;
  // the sigmoid-family maps are monotone already, so mono variants are.
  for (const char* m : {"htlb_cp", "htlb_maxcp"})
    for (auto p : {none, mono}) grid.push_back({m, p});
  for (const char* m : {"isobins_cp", "rcir_cp", "sva"})
    for (auto p : {none, cut, mono, cut_mono}) grid.push_back({m, p});
  for (const char* m : {"isocal", "logcal", "betacal"})
    for (auto p : {none, cut}) grid.push_back({m, p});
  return grid;
}

std::vector<MethodSpec> conservative_method_grid() {
  return {
      {"htlb_cp", {false, true}},   {"htlb_maxcp", {false, true}},
      {"isobins_cp", {true, true}}, {"rcir_cp", {true, true}},
      {"sva", {true, true}},        {"isocal", {true, false}},
      {"logcal", {true, false}},    {"betacal", {true, false}},
  };
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::check() const {
  if (n_maps < 1 || sets_per_map < 1)
    throw std::domain_error("map and set counts must be positive");
  if (n < 1) throw std::domain_error("sequence length must be positive");
  if (!(map_lo >= 0.0 && map_lo <= map_hi && map_hi <= 1.0))
    throw std::domain_error("truth range must satisfy 0 <= lo <= hi <= 1");
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("confidence level must lie strictly in (0, 1)");
  if (m < 1) throw std::domain_error("sum window length must be >= 1");
  if (m1 < 1 || m2 < m1)
    throw std::domain_error("suffix windows must satisfy 1 <= m1 <= m2");
  if (!(scenario_l > 1.0))
    throw std::domain_error("risk exponent l must exceed 1");
  if (!(outcome_percentile >= 0.0 && outcome_percentile <= 100.0))
    throw std::domain_error("outcome percentile must lie in [0, 100]");
  if (eval_skip < -1)
    throw std::domain_error("eval_skip must be -1 (auto) or non-negative");
  if (eval_skip >= 0 && eval_skip < long(htlb_window()) - 1)
    throw std::domain_error(
        "eval_skip must cover the undefined window prefix (>= window - 1)");
  if (threads < 1) throw std::domain_error("thread count must be positive");
  if (!(label_smoothing >= 0.0 && label_smoothing <= 1.0))
    throw std::domain_error("label smoothing must lie in [0, 1]");
  if (!(rcir_width_threshold > 0.0))
    throw std::domain_error("width threshold must be positive");
  if (!(risk_cap > 0.0)) throw std::domain_error("risk cap must be positive");
  if (out_dir.empty()) throw std::domain_error("output directory must be set");

  const auto& grid = methods.empty() ? default_method_grid() : methods;
  bool any_maxcp = false;
  for (const auto& spec : grid) {
    if (!known_method(spec.name))
      throw std::domain_error("unknown method '" + spec.name + "'");
    if (spec.name == "htlb_maxcp") any_maxcp = true;
  }
  if (any_maxcp && maxcp_table_path.empty())
    throw std::domain_error(
        "htlb_maxcp requires maxcp_table_path to point at a precomputed table");
  if (eval_skip_effective() >= std::size_t(n))
    throw std::domain_error(
        "evaluation skip leaves no eligible position (increase n)");
}

int ExperimentConfig::htlb_window() const {
  const auto& grid = methods.empty() ? default_method_grid() : methods;
  int window = 0;
  for (const auto& spec : grid) {
    if (spec.name == "htlb_cp") window = std::max(window, m);
    if (spec.name == "htlb_maxcp") window = std::max(window, m2);
  }
  return window > 0 ? window : m;
}

std::size_t ExperimentConfig::eval_skip_effective() const {
  return eval_skip >= 0 ? std::size_t(eval_skip) : std::size_t(htlb_window());
}

WorkEstimate estimate_work(const ExperimentConfig& cfg) {
  const auto& grid = cfg.methods.empty() ? default_method_grid() : cfg.methods;
  WorkEstimate est;
  const std::uint64_t sets =
      std::uint64_t(cfg.n_maps) * std::uint64_t(cfg.sets_per_map);
  est.cells = sets * grid.size();

  std::set<std::string> distinct;
  for (const auto& spec : grid) distinct.insert(spec.name);
  const std::uint64_t n = std::uint64_t(cfg.n);
  std::uint64_t per_set = 0;
  for (const auto& name : distinct) {
    if (name == "htlb_maxcp")
      per_set += n * std::uint64_t(cfg.m2 - cfg.m1 + 1);
    else if (name == "sva")
      per_set += 2 * n * n;
    else if (name == "isocal" || name == "logcal" || name == "betacal")
      per_set += 64 * n;  // a few dozen passes for the iterative fits
    else
      per_set += 4 * n;
  }
  per_set += std::uint64_t(grid.size()) * n;  // post-processing + evaluation
  est.label_ops = sets * per_set;
  return est;
}

// ---------------------------------------------------------------------------
// Experiment sweep
// ---------------------------------------------------------------------------

namespace {

// Base (pre-post-processing) bound map for one method on one sampled set.
LowerBoundMap fit_base_map(const std::string& name,
                           const ExperimentConfig& cfg,
                           const CalibrationSet& set, const MaxCpTable* table,
                           CpBoundCache& cache) {
  if (name == "htlb_cp") {
    HtlbConfig hc;
    hc.statistic = Statistic::kSum;
    hc.m = cfg.m;
    hc.q = cfg.q;
    return htlb_map(set.labels, hc, nullptr, &cache);
  }
  if (name == "htlb_maxcp") {
    HtlbConfig hc;
    hc.statistic = Statistic::kMaxCp;
    hc.m1 = cfg.m1;
    hc.m2 = cfg.m2;
    hc.q = cfg.q;
    return htlb_map(set.labels, hc, table, &cache);
  }
  if (name == "isobins_cp") return isobins_cp(set.labels, cfg.q);
  if (name == "rcir_cp")
    return rcir_cp(set.labels, cfg.q, cfg.rcir_width_threshold);
  if (name == "sva") return sva_lower(set.labels, set.scores);
  if (name == "isocal") {
    const auto targets = label_smooth(set.labels, cfg.label_smoothing);
    const IsotonicFit fit = pava_isotonic(targets);
    LowerBoundMap map = LowerBoundMap::with_prefix(
        set.size(), 0, "isocal", snap("smoothing=%.17g", cfg.label_smoothing));
    map.bounds = fit.fitted;
    return map;
  }
  if (name == "logcal") {
    const auto targets = label_smooth(set.labels, cfg.label_smoothing);
    const SigmoidParams p = platt_fit(set.scores, targets);
    LowerBoundMap map = LowerBoundMap::with_prefix(
        set.size(), 0, "logcal", snap("smoothing=%.17g", cfg.label_smoothing));
    for (std::size_t i = 0; i < set.size(); ++i)
      map.bounds[i] = platt_predict(p, set.scores[i]);
    return map;
  }
  if (name == "betacal") {
    const BetaCalParams p = betacal_fit(set.scores, set.labels);
    LowerBoundMap map =
        LowerBoundMap::with_prefix(set.size(), 0, "betacal", "smoothing=none");
    for (std::size_t i = 0; i < set.size(); ++i)
      map.bounds[i] = betacal_predict(p, set.scores[i]);
    return map;
  }
  throw std::domain_error("unknown method '" + name + "'");
}

void write_metrics_csv(const fs::path& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "# cautious-cal metrics v1\n";
  out << "map_id,set_id,method,postproc,independent_violation,"
         "within_violation_pct,outcome_pctl,outcome_mean,status\n";
  for (const auto& r : rows) {
    out << r.map_id << ',' << r.set_id << ',' << r.method << ',' << r.postproc
        << ',';
    if (r.status == "ok") {
      out << r.independent_violation << ','
          << format_double(r.within_violation_pct) << ','
          << format_double(r.outcome_pctl) << ','
          << format_double(r.outcome_mean);
    } else {
      out << ",,,";
    }
    out << ',' << r.status << '\n';
  }
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

std::vector<MethodAggregate> aggregate_rows(
    const std::vector<MethodSpec>& grid, const std::vector<MetricsRow>& rows) {
  std::vector<MethodAggregate> aggs;
  aggs.reserve(grid.size());
  for (const auto& spec : grid) {
    MethodAggregate a;
    a.method = spec.name;
    a.postproc = postproc_name(spec.post);
    double sum_ind = 0.0, sum_within = 0.0, sum_pctl = 0.0, sum_mean = 0.0;
    int zero_within = 0, nonneg = 0, ok = 0;
    for (const auto& r : rows) {
      if (r.method != a.method || r.postproc != a.postproc) continue;
      ++a.cells;
      if (r.status != "ok") {
        ++a.failures;
        continue;
      }
      ++ok;
      sum_ind += r.independent_violation;
      sum_within += r.within_violation_pct;
      sum_pctl += r.outcome_pctl;
      sum_mean += r.outcome_mean;
      if (r.within_violation_pct == 0.0) ++zero_within;
      if (r.outcome_pctl >= 0.0) ++nonneg;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (ok > 0) {
      a.independent_violation_rate_pct = 100.0 * sum_ind / ok;
      a.mean_within_violation_pct = sum_within / ok;
      a.cells_zero_within_pct = 100.0 * double(zero_within) / ok;
      a.outcome_pctl_nonneg_pct = 100.0 * double(nonneg) / ok;
      a.mean_outcome_pctl = sum_pctl / ok;
      a.mean_outcome_mean = sum_mean / ok;
    } else {
      a.independent_violation_rate_pct = nan;
      a.mean_within_violation_pct = nan;
      a.cells_zero_within_pct = nan;
      a.outcome_pctl_nonneg_pct = nan;
      a.mean_outcome_pctl = nan;
      a.mean_outcome_mean = nan;
    }
    aggs.push_back(std::move(a));
  }
  return aggs;
}

void write_summary_json(const fs::path& path, const ExperimentConfig& cfg,
                        const std::vector<MethodSpec>& grid,
                        const std::vector<MethodAggregate>& aggs,
                        std::size_t cells) {
  ordered_json j;
  j["format"] = "cautious-cal summary v1";
  ordered_json jc;
  jc["n_maps"] = cfg.n_maps;
  jc["sets_per_map"] = cfg.sets_per_map;
  jc["n"] = cfg.n;
  jc["map_lo"] = cfg.map_lo;
  jc["map_hi"] = cfg.map_hi;
  jc["q"] = cfg.q;
  jc["m"] = cfg.m;
  jc["m1"] = cfg.m1;
  jc["m2"] = cfg.m2;
  jc["scenario_l"] = cfg.scenario_l;
  jc["outcome_percentile"] = cfg.outcome_percentile;
  jc["base_seed"] = cfg.base_seed;
  jc["eval_skip"] = cfg.eval_skip_effective();
  jc["label_smoothing"] = cfg.label_smoothing;
  jc["rcir_width_threshold"] = cfg.rcir_width_threshold;
  jc["risk_cap"] = cfg.risk_cap;
  jc["maxcp_table_path"] = cfg.maxcp_table_path;
  ordered_json jm = ordered_json::array();
  for (const auto& spec : grid)
    jm.push_back(spec.name + ":" + postproc_name(spec.post));
  jc["methods"] = jm;
  j["config"] = jc;
  j["cells"] = cells;
  ordered_json ja = ordered_json::array();
  for (const auto& a : aggs) {
    ordered_json e;
    e["method"] = a.method;
    e["postproc"] = a.postproc;
    e["cells"] = a.cells;
    e["failures"] = a.failures;
    e["independent_violation_rate_pct"] = a.independent_violation_rate_pct;
    e["mean_within_violation_pct"] = a.mean_within_violation_pct;
    e["cells_zero_within_pct"] = a.cells_zero_within_pct;
    e["outcome_pctl_nonneg_pct"] = a.outcome_pctl_nonneg_pct;
    e["mean_outcome_pctl"] = a.mean_outcome_pctl;
    e["mean_outcome_mean"] = a.mean_outcome_mean;
    ja.push_back(std::move(e));
  }
  j["aggregates"] = ja;
  j["metrics_csv"] = "metrics.csv";

  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  const std::vector<MethodSpec> grid =
      cfg.methods.empty() ? default_method_grid() : cfg.methods;

  // Distinct base methods in canonical order; each is fitted once per set.
  std::vector<std::string> base_names;
  for (const char* m : kMethodOrder)
    for (const auto& spec : grid)
      if (spec.name == m) {
        base_names.push_back(m);
        break;
      }

  MaxCpTable table;
  bool have_table = false;
  for (const auto& name : base_names)
    if (name == "htlb_maxcp") {
      HtlbConfig hc;
      hc.statistic = Statistic::kMaxCp;
      hc.m1 = cfg.m1;
      hc.m2 = cfg.m2;
      hc.q = cfg.q;
      table = load_maxcp_table(cfg.maxcp_table_path, hc);
      have_table = true;
    }

  CpBoundCache cache(cfg.q);
  for (const auto& name : base_names) {
    if (name == "htlb_cp") cache.prefill(cfg.m, cfg.m, cfg.threads);
    if (name == "htlb_maxcp") cache.prefill(cfg.m1, cfg.m2, cfg.threads);
  }

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  if (cfg.dump_maps) fs::create_directories(out_dir / "maps");

  std::vector<TrueCalibrationMap> truths;
  truths.reserve(std::size_t(cfg.n_maps));
  for (int i = 0; i < cfg.n_maps; ++i) {
    SeededRng rng(cfg.base_seed, std::uint64_t(i));
    truths.push_back(
        gen_true_map(std::size_t(cfg.n), cfg.map_lo, cfg.map_hi, rng));
  }

  const std::size_t skip = cfg.eval_skip_effective();
  const double ceiling =
      cp_lower_bound(cfg.htlb_window(), cfg.htlb_window(), cfg.q);
  const int total_cells = cfg.n_maps * cfg.sets_per_map;
  std::vector<std::vector<MetricsRow>> cell_rows{std::size_t(total_cells)};

  detail::parallel_for(total_cells, cfg.threads, [&](int cell) {
    const int map_id = cell / cfg.sets_per_map;
    const int set_id = cell % cfg.sets_per_map;
    SeededRng set_rng(cfg.base_seed,
                      (std::uint64_t(map_id) << 32) + std::uint64_t(set_id));
    const CalibrationSet set =
        sample_calibration_set(truths[std::size_t(map_id)], set_rng);
    SeededRng eval_rng = set_rng.derive(1);

    std::map<std::string, LowerBoundMap> bases;
    std::map<std::string, std::string> base_errors;
    for (const auto& name : base_names) {
      try {
        bases.emplace(name, fit_base_map(name, cfg, set,
                                         have_table ? &table : nullptr, cache));
      } catch (const std::exception& e) {
        base_errors.emplace(name, sanitize_error(e.what()));
      }
    }

    auto& rows = cell_rows[std::size_t(cell)];
    rows.reserve(grid.size());
    for (const auto& spec : grid) {
      MetricsRow row;
      row.map_id = map_id;
      row.set_id = set_id;
      row.method = spec.name;
      row.postproc = postproc_name(spec.post);

      // Every variant consumes exactly one draw from the evaluation stream,
      // so one failure never shifts the draws of the variants after it.
      const auto base_it = bases.find(spec.name);
      if (base_it == bases.end()) {
        eval_rng.next_u64();
        row.status = base_errors.at(spec.name);
        rows.push_back(std::move(row));
        continue;
      }
      LowerBoundMap variant = base_it->second;
      if (spec.post.cut) variant = postproc_cut(std::move(variant), ceiling);
      if (spec.post.mono) variant = postproc_mono(std::move(variant));
      if (first_eligible(variant, skip) >= variant.size()) {
        eval_rng.next_u64();
        row.status = "no eligible position to evaluate";
        rows.push_back(std::move(row));
        continue;
      }
      try {
        row.independent_violation = eval_independent_violation(
            variant, truths[std::size_t(map_id)], skip, eval_rng);
        row.within_violation_pct = eval_within_map_violation(
            variant, truths[std::size_t(map_id)], skip);
        const OutcomeStats stats =
            eval_outcomes(variant, truths[std::size_t(map_id)], cfg.scenario_l,
                          cfg.outcome_percentile, skip, cfg.risk_cap);
        row.outcome_pctl = stats.percentile;
        row.outcome_mean = stats.mean;
      } catch (const std::exception& e) {
        row.status = sanitize_error(e.what());
      }
      if (cfg.dump_maps && row.status == "ok") {
        char name[128];
        std::snprintf(name, sizeof name, "map%03d_set%03d_%s_%s.csv", map_id,
                      set_id, spec.name.c_str(), row.postproc.c_str());
        write_bounds_csv(out_dir / "maps" / name, variant,
                         &truths[std::size_t(map_id)]);
      }
      rows.push_back(std::move(row));
    }
  });

  ExperimentResult result;
  result.rows.reserve(std::size_t(total_cells) * grid.size());
  for (auto& rows : cell_rows)
    for (auto& row : rows) result.rows.push_back(std::move(row));
  result.aggregates = aggregate_rows(grid, result.rows);

  const fs::path metrics_path = out_dir / "metrics.csv";
  const fs::path summary_path = out_dir / "summary.json";
  write_metrics_csv(metrics_path, result.rows);
  write_summary_json(summary_path, cfg, grid, result.aggregates,
                     result.rows.size());
  result.metrics_path = metrics_path.string();
  result.summary_path = summary_path.string();
  return result;
}

const MethodAggregate* find_aggregate(const ExperimentResult& result,
                                      const std::string& method,
                                      const std::string& postproc) {
  for (const auto& a : result.aggregates)
    if (a.method == method && a.postproc == postproc) return &a;
  return nullptr;
}

}  // namespace cautious
