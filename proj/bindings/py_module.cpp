// Python bindings for the core operations. Vectors cross the boundary as
// plain lists; the heavy lifting stays in the C++ library.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cautious/baselines.hpp"
#include "cautious/datagen.hpp"
#include "cautious/harness.hpp"
#include "cautious/htlb.hpp"
#include "cautious/io.hpp"
#include "cautious/scenario.hpp"
#include "cautious/stats.hpp"

namespace py = pybind11;
using namespace cautious;

namespace {

TrueCalibrationMap truth_from_probs(std::vector<double> probs) {
  if (probs.empty()) throw std::invalid_argument("truth map is empty");
  TrueCalibrationMap map;
  map.lo = *std::min_element(probs.begin(), probs.end());
  map.hi = *std::max_element(probs.begin(), probs.end());
  map.probs = std::move(probs);
  map.check();
  return map;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cautious lower-bound calibration: core operations";

  // --- exact binomial / beta machinery ---
  m.def("reg_inc_beta", &reg_inc_beta, py::arg("x"), py::arg("a"),
        py::arg("b"), "Regularized incomplete beta I_x(a, b)");
  m.def(
      "beta_quantile",
      [](double prob, double a, double b) { return beta_quantile(prob, a, b); },
      py::arg("prob"), py::arg("a"), py::arg("b"),
      "x with I_x(a, b) = prob");
  m.def("binomial_cdf", &binomial_cdf, py::arg("k"), py::arg("m"),
        py::arg("p"), "P(Binomial(m, p) <= k)");
  m.def(
      "cp_lower_bound",
      [](int ones, int mm, double q) {
        return double(cp_lower_bound(ones, mm, q));
      },
      py::arg("ones"), py::arg("m"), py::arg("q"),
      "One-sided exact binomial lower confidence bound");

  // --- data generation ---
  m.def(
      "gen_true_map",
      [](std::size_t n, double lo, double hi, std::uint64_t seed,
         std::uint64_t stream) {
        SeededRng rng(seed, stream);
        return gen_true_map(n, lo, hi, rng).probs;
      },
      py::arg("n"), py::arg("lo") = 0.9, py::arg("hi") = 1.0,
      py::arg("seed") = 0, py::arg("stream") = 0,
      "Monotone synthetic truth map (list of per-position probabilities)");
  m.def(
      "sample_labels",
      [](const std::vector<double>& probs, std::uint64_t seed,
         std::uint64_t stream) {
        SeededRng rng(seed, stream);
        return sample_hbernoulli(probs, rng);
      },
      py::arg("probs"), py::arg("seed") = 0, py::arg("stream") = 0,
      "Independent Bernoulli draws, one per probability");
  m.def("position_scores", &position_scores, py::arg("n"),
        "The fixed score ladder i/(n+1), i = 1..n");

  // --- bound maps ---
  py::class_<LowerBoundMap>(m, "LowerBoundMap")
      .def_readonly("bounds", &LowerBoundMap::bounds)
      .def_readonly("defined_from", &LowerBoundMap::defined_from)
      .def_readonly("method", &LowerBoundMap::method)
      .def_readonly("config", &LowerBoundMap::config)
      .def_readonly("cut", &LowerBoundMap::cut)
      .def_readonly("mono", &LowerBoundMap::mono)
      .def("__len__", &LowerBoundMap::size)
      .def("is_defined", &LowerBoundMap::is_defined, py::arg("i"))
      .def("value", &LowerBoundMap::value, py::arg("i"));

  // --- sliding hypothesis-test estimator ---
  py::class_<MaxCpTable>(m, "MaxCpTable")
      .def_readonly("m1", &MaxCpTable::m1)
      .def_readonly("m2", &MaxCpTable::m2)
      .def_readonly("q", &MaxCpTable::q)
      .def_readonly("n_p", &MaxCpTable::n_p)
      .def_readonly("n_seq", &MaxCpTable::n_seq)
      .def_readonly("seed", &MaxCpTable::seed)
      .def_readonly("p_grid", &MaxCpTable::p_grid)
      .def_readonly("quantile_stat", &MaxCpTable::quantile_stat);

  m.def(
      "sum_statistic",
      [](const std::vector<std::uint8_t>& v) { return sum_statistic(v); },
      py::arg("labels"), "Count of ones in the window");
  m.def(
      "maxcp_statistic",
      [](const std::vector<std::uint8_t>& v, int m1, double q) {
        return maxcp_statistic(v, m1, q);
      },
      py::arg("labels"), py::arg("m1"), py::arg("q"),
      "Best exact-binomial bound over suffixes of length >= m1");
  m.def(
      "htlb_sum_map",
      [](const std::vector<std::uint8_t>& labels, int mm, double q) {
        HtlbConfig cfg;
        cfg.statistic = Statistic::kSum;
        cfg.m = mm;
        cfg.q = q;
        return htlb_map(labels, cfg);
      },
      py::arg("labels"), py::arg("m") = 2000, py::arg("q") = 0.99,
      "Sliding-window lower-bound map, sum statistic");
  m.def(
      "htlb_maxcp_map",
      [](const std::vector<std::uint8_t>& labels, const MaxCpTable& table) {
        HtlbConfig cfg;
        cfg.statistic = Statistic::kMaxCp;
        cfg.m1 = table.m1;
        cfg.m2 = table.m2;
        cfg.q = table.q;
        return htlb_map(labels, cfg, &table);
      },
      py::arg("labels"), py::arg("table"),
      "Sliding-window lower-bound map, max-cp statistic (windows and "
      "confidence come from the table)");
  m.def(
      "precompute_maxcp_table",
      [](int m1, int m2, double q, int n_p, int n_seq, std::uint64_t seed,
         int threads, std::uint64_t max_work_units) {
        MaxCpOptions opt;
        opt.m1 = m1;
        opt.m2 = m2;
        opt.q = q;
        opt.n_p = n_p;
        opt.n_seq = n_seq;
        opt.seed = seed;
        opt.threads = threads;
        opt.max_work_units = max_work_units;
        return precompute_maxcp_table(opt);
      },
      py::arg("m1") = 100, py::arg("m2") = 2000, py::arg("q") = 0.99,
      py::arg("n_p") = 500, py::arg("n_seq") = 20000, py::arg("seed") = 0,
      py::arg("threads") = 1,
      py::arg("max_work_units") = std::uint64_t(1'000'000'000'000ull),
      "Simulate the null quantiles of the max-cp statistic over a p grid");
  m.def("lookup_lower_bound", &lookup_lower_bound, py::arg("table"),
        py::arg("stat"),
        "Invert the table at an observed statistic (cautious minimum-p)");
  m.def(
      "save_maxcp_table",
      [](const MaxCpTable& table, const std::string& path) {
        save_maxcp_table(table, path);
      },
      py::arg("table"), py::arg("path"));
  m.def(
      "load_maxcp_table",
      [](const std::string& path) { return load_maxcp_table(path); },
      py::arg("path"));

  // --- classical baselines ---
  m.def(
      "pava_isotonic",
      [](const std::vector<double>& values, const std::vector<double>& w) {
        return pava_isotonic(values, w).fitted;
      },
      py::arg("values"), py::arg("weights") = std::vector<double>{},
      "Isotonic least-squares fit (per-position pooled values)");
  m.def(
      "sva_lower",
      [](const std::vector<std::uint8_t>& labels,
         const std::vector<double>& scores) {
        return sva_lower(labels, scores);
      },
      py::arg("labels"), py::arg("scores"),
      "Single-variable-addition pessimistic isotonic estimate");
  m.def(
      "isobins_cp",
      [](const std::vector<std::uint8_t>& labels, double q) {
        return isobins_cp(labels, q);
      },
      py::arg("labels"), py::arg("q") = 0.99,
      "Isotonic bins with exact-binomial per-bin lower bounds");
  m.def(
      "rcir_cp",
      [](const std::vector<std::uint8_t>& labels, double q, double width) {
        return rcir_cp(labels, q, width);
      },
      py::arg("labels"), py::arg("q") = 0.99,
      py::arg("width_threshold") = 0.05,
      "Credible-interval-merged isotonic bins with exact-binomial bounds");
  m.def(
      "platt_fit",
      [](const std::vector<double>& scores,
         const std::vector<double>& targets) {
        const SigmoidParams p = platt_fit(scores, targets);
        return py::make_tuple(p.slope, p.intercept);
      },
      py::arg("scores"), py::arg("targets"),
      "Logistic fit; returns (slope, intercept)");
  m.def(
      "platt_predict",
      [](double slope, double intercept, double score) {
        return platt_predict(SigmoidParams{slope, intercept}, score);
      },
      py::arg("slope"), py::arg("intercept"), py::arg("score"));
  m.def(
      "betacal_fit",
      [](const std::vector<double>& scores,
         const std::vector<std::uint8_t>& labels) {
        const BetaCalParams p = betacal_fit(scores, labels);
        return py::make_tuple(p.a, p.b, p.c);
      },
      py::arg("scores"), py::arg("labels"),
      "Beta calibration fit; returns (a, b, c)");
  m.def(
      "betacal_predict",
      [](double a, double b, double c, double score) {
        return betacal_predict(BetaCalParams{a, b, c}, score);
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("score"));
  m.def(
      "label_smooth",
      [](const std::vector<std::uint8_t>& labels, double eps) {
        return label_smooth(labels, eps);
      },
      py::arg("labels"), py::arg("eps") = 0.001,
      "y -> y*(1 - eps) + eps/2");

  // --- risk scenario ---
  m.def("outcome", &outcome, py::arg("y"), py::arg("xi"), py::arg("l"),
        "Realized payoff: xi on success, -xi^l on failure");
  m.def("optimal_risk", &optimal_risk, py::arg("c"), py::arg("l"),
        py::arg("cap") = kDefaultRiskCap,
        "Risk maximizing the expected payoff at success probability c");
  m.def("expected_outcome", &expected_outcome, py::arg("c_true"),
        py::arg("xi"), py::arg("l"), "xi*c - xi^l*(1-c)");

  // --- post-processing and evaluation ---
  m.def("postproc_cut", &postproc_cut, py::arg("map"), py::arg("max_value"),
        "Clamp defined entries to a ceiling");
  m.def("postproc_mono", &postproc_mono, py::arg("map"),
        "Right-to-left running minimum");
  m.def(
      "eval_independent_violation",
      [](const LowerBoundMap& map, const std::vector<double>& truth,
         std::size_t eval_skip, std::uint64_t seed, std::uint64_t stream) {
        SeededRng rng(seed, stream);
        return eval_independent_violation(map, truth_from_probs(truth),
                                          eval_skip, rng);
      },
      py::arg("map"), py::arg("truth"), py::arg("eval_skip") = 0,
      py::arg("seed") = 0, py::arg("stream") = 0,
      "1 if the bound at one uniformly drawn eligible position exceeds the "
      "truth");
  m.def(
      "eval_within_map_violation",
      [](const LowerBoundMap& map, const std::vector<double>& truth,
         std::size_t eval_skip) {
        return eval_within_map_violation(map, truth_from_probs(truth),
                                         eval_skip);
      },
      py::arg("map"), py::arg("truth"), py::arg("eval_skip") = 0,
      "Percent of eligible positions whose bound exceeds the truth");
  m.def(
      "eval_outcomes",
      [](const LowerBoundMap& map, const std::vector<double>& truth, double l,
         double percentile, std::size_t eval_skip, double risk_cap) {
        const OutcomeStats s = eval_outcomes(map, truth_from_probs(truth), l,
                                             percentile, eval_skip, risk_cap);
        return py::make_tuple(s.percentile, s.mean);
      },
      py::arg("map"), py::arg("truth"), py::arg("l") = 2.0,
      py::arg("percentile") = 1.0, py::arg("eval_skip") = 0,
      py::arg("risk_cap") = kDefaultRiskCap,
      "(percentile, mean) of per-position expected payoffs");

  // --- experiment harness ---
  m.def(
      "run_experiment",
      [](const std::string& config_text) {
        const ExperimentConfig cfg = parse_experiment_config(config_text);
        const ExperimentResult result = run_experiment(cfg);
        return py::make_tuple(result.metrics_path, result.summary_path);
      },
      py::arg("config_text"),
      "Run a full sweep from config text; returns (metrics_path, "
      "summary_path)");
}
