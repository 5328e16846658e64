#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cautious/lower_bound_map.hpp"
#include "cautious/rng.hpp"

namespace cautious {

// Test statistic computed on the label window ending at each position.
enum class Statistic { kSum, kMaxCp };

// Window settings for the sliding hypothesis-test estimator.
struct HtlbConfig {
  Statistic statistic = Statistic::kSum;
  int m = 2000;     // window length (sum statistic)
  int m1 = 100;     // shortest suffix window (max-cp statistic)
  int m2 = 2000;    // longest suffix window = sliding window (max-cp)
  double q = 0.99;  // confidence level of the per-position test

  int window() const { return statistic == Statistic::kSum ? m : m2; }
  void check() const;
};

// Memo of cp_lower_bound(ones, window, q) values. bound() fills lazily one
// whole row (all counts of one window length) at a time, with warm-started
// quantile inversion so a row costs far less than independent inversions.
// Not safe for concurrent filling: call prefill() before sharing across
// threads; afterwards reads of covered windows never mutate.
class CpBoundCache {
 public:
  explicit CpBoundCache(double q);

  double q() const { return q_; }
  double bound(int ones, int window);

  // Entire row for one window length, fully filled (index = ones count).
  const std::vector<double>& row(int window);

  // Fill all rows for window lengths [w_min, w_max], optionally in parallel.
  void prefill(int w_min, int w_max, int threads = 1);

 private:
  double q_;
  std::vector<std::vector<double>> rows_;  // rows_[w] has w + 1 entries
};

// Count of ones in the window.
int sum_statistic(std::span<const std::uint8_t> v);

// Best exact-binomial lower bound over all suffixes of v with length between
// m1 and v.size(): max_j cp_lower_bound(ones in last j entries, j, q).
double maxcp_statistic(std::span<const std::uint8_t> v, int m1, double q);
double maxcp_statistic(std::span<const std::uint8_t> v, int m1,
                       CpBoundCache& cache);

// Copy of v with the entry at `index` (0-based) set to 1.
std::vector<std::uint8_t> bit_flip(std::span<const std::uint8_t> v,
                                   std::size_t index);

// Simulated null quantiles of the max-cp statistic over a grid of
// homogeneous probabilities, rectified to be monotone in p.
struct MaxCpTable {
  int format_version = 1;
  int m1 = 0;
  int m2 = 0;
  double q = 0.0;
  int n_p = 0;
  int n_seq = 0;
  std::uint64_t seed = 0;
  std::vector<double> p_grid;         // strictly increasing, open in (0, 1)
  std::vector<double> quantile_stat;  // non-decreasing after rectification

  void check() const;
};

struct MaxCpOptions {
  int m1 = 100;
  int m2 = 2000;
  double q = 0.99;
  int n_p = 500;    // grid points p_i = i/(n_p + 1), i = 1..n_p
  int n_seq = 20000;  // simulated sequences per grid point
  std::uint64_t seed = 0;
  int threads = 1;
  // Hard cap on n_p * n_seq * m2; larger jobs must be sharded explicitly.
  std::uint64_t max_work_units = 1'000'000'000'000ull;
};

// For each grid probability p_i, draws n_seq homogeneous label vectors of
// length m2, records the empirical q'th quantile of the max-cp statistic
// (order statistic at ceil(q * n_seq), the lower side), then rectifies the
// quantile sequence to a running maximum. Grid point i draws from the
// stream (seed, i), so the table is reproducible and thread-count agnostic.
MaxCpTable precompute_maxcp_table(const MaxCpOptions& opt);

// Inverts the table at an observed statistic: find the largest tabulated
// quantile s* <= stat; rows with quantile 0 carry no evidence, so s* = 0
// (or no row at all) maps to 0; otherwise return the smallest grid p whose
// rectified quantile equals s* — the cautious minimum-p convention.
double lookup_lower_bound(const MaxCpTable& table, double stat);

void save_maxcp_table(const MaxCpTable& table,
                      const std::filesystem::path& path);
MaxCpTable load_maxcp_table(const std::filesystem::path& path);
// Loads and rejects tables whose (m1, m2, q) disagree with cfg.
MaxCpTable load_maxcp_table(const std::filesystem::path& path,
                            const HtlbConfig& cfg);

// Sliding-window lower-bound map: position k (0-based) gets the bound
// implied by the window of cfg.window() labels ending at k. Positions that
// cannot see a full window stay undefined. The max-cp variant requires a
// precomputed table matching (m1, m2, q). A shared prefilled cache makes
// repeated calls cheap; without one a local cache is used.
LowerBoundMap htlb_map(std::span<const std::uint8_t> labels,
                       const HtlbConfig& cfg,
                       const MaxCpTable* table = nullptr,
                       CpBoundCache* cache = nullptr);

}  // namespace cautious
