#include "cautious/htlb.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cautious/stats.hpp"
#include "parallel.hpp"

namespace cautious {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_binary(std::span<const std::uint8_t> labels) {
  for (auto b : labels)
    if (b > 1) throw std::domain_error("labels must be 0 or 1");
}

// Max-cp statistic over precomputed row pointers (rows[j] indexable by the
// ones count of the length-j suffix). Hot path shared by the table
// precompute and the sliding map.
double maxcp_stat_rows(const std::uint8_t* v, int m2, int m1,
                       const double* const* rows) {
  double best = 0.0;
  int ones = 0;
  for (int j = 1; j <= m2; ++j) {
    ones += v[m2 - j];
    if (j >= m1) best = std::max(best, rows[j][ones]);
  }
  return best;
}

double lookup_unchecked(const MaxCpTable& table, double stat) {
  // Largest tabulated quantile still <= stat.
  auto it = std::upper_bound(table.quantile_stat.begin(),
                             table.quantile_stat.end(), stat);
  if (it == table.quantile_stat.begin()) return 0.0;
  const double s_star = *(it - 1);
  // Rows whose quantile is 0 are indistinguishable from pure noise and
  // certify nothing.
  if (s_star <= 0.0) return 0.0;
  // Cautious minimum-p convention: the leftmost grid point attaining s*.
  auto first = std::lower_bound(table.quantile_stat.begin(), it, s_star);
  return table.p_grid[std::size_t(first - table.quantile_stat.begin())];
}

}  // namespace

void HtlbConfig::check() const {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("confidence level must lie strictly in (0, 1)");
  if (statistic == Statistic::kSum) {
    if (m < 1) throw std::domain_error("window length must be >= 1");
  } else {
    if (m1 < 1 || m2 < m1)
      throw std::domain_error("suffix windows must satisfy 1 <= m1 <= m2");
  }
}

CpBoundCache::CpBoundCache(double q) : q_(q) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("confidence level must lie strictly in (0, 1)");
}

const std::vector<double>& CpBoundCache::row(int window) {
  if (window < 1) throw std::domain_error("window length must be >= 1");
  if (rows_.size() <= std::size_t(window)) rows_.resize(std::size_t(window) + 1);
  auto& row = rows_[std::size_t(window)];
  if (!row.empty()) return row;

  // Bounds grow with the ones count, so each inversion starts from the
  // previous bound with the bracket [prev, 1); this makes a whole row far
  // cheaper than independent inversions.
  row.resize(std::size_t(window) + 1);
  row[0] = 0.0;
  const double prob = 1.0 - q_;
  double prev = 0.0;
  for (int t = 1; t <= window; ++t) {
    const double a = double(t);
    const double b = double(window - t + 1);
    const double x0 = prev > 0.0 ? prev : a / (a + b);
    prev = beta_quantile(prob, a, b, prev, 1.0, x0);
    row[std::size_t(t)] = prev;
  }
  return row;
}

double CpBoundCache::bound(int ones, int window) {
  if (ones < 0 || ones > window)
    throw std::domain_error("ones count outside [0, window length]");
  return row(window)[std::size_t(ones)];
}

void CpBoundCache::prefill(int w_min, int w_max, int threads) {
  if (w_min < 1 || w_max < w_min)
    throw std::domain_error("window range must satisfy 1 <= w_min <= w_max");
  if (rows_.size() <= std::size_t(w_max)) rows_.resize(std::size_t(w_max) + 1);
  detail::parallel_for(w_max - w_min + 1, threads,
                       [&](int i) { row(w_min + i); });
}

int sum_statistic(std::span<const std::uint8_t> v) {
  if (v.empty()) throw std::invalid_argument("statistic of an empty window");
  check_binary(v);
  return std::accumulate(v.begin(), v.end(), 0);
}

double maxcp_statistic(std::span<const std::uint8_t> v, int m1,
                       CpBoundCache& cache) {
  const int m2 = int(v.size());
  if (m2 < 1) throw std::invalid_argument("statistic of an empty window");
  if (m1 < 1 || m1 > m2)
    throw std::domain_error("suffix windows must satisfy 1 <= m1 <= len");
  check_binary(v);
  double best = 0.0;
  int ones = 0;
  for (int j = 1; j <= m2; ++j) {
    ones += v[std::size_t(m2 - j)];
    if (j >= m1) best = std::max(best, cache.bound(ones, j));
  }
  return best;
}

double maxcp_statistic(std::span<const std::uint8_t> v, int m1, double q) {
  CpBoundCache cache(q);
  return maxcp_statistic(v, m1, cache);
}

std::vector<std::uint8_t> bit_flip(std::span<const std::uint8_t> v,
                                   std::size_t index) {
  if (index >= v.size())
    throw std::out_of_range("flip index past the end of the vector");
  std::vector<std::uint8_t> out(v.begin(), v.end());
  out[index] = 1;
  return out;
}

void MaxCpTable::check() const {
  if (format_version != 1)
    throw std::runtime_error("unsupported max-cp table format version");
  if (m1 < 1 || m2 < m1)
    throw std::runtime_error("max-cp table windows must satisfy 1 <= m1 <= m2");
  if (!(q > 0.0 && q < 1.0))
    throw std::runtime_error("max-cp table confidence level outside (0, 1)");
  if (n_p < 1 || n_seq < 1)
    throw std::runtime_error("max-cp table grid and sample counts must be positive");
  if (p_grid.size() != std::size_t(n_p) ||
      quantile_stat.size() != std::size_t(n_p))
    throw std::runtime_error("max-cp table row count disagrees with n_p");
  double prev_p = 0.0;
  double prev_q = -1.0;
  for (int i = 0; i < n_p; ++i) {
    const double p = p_grid[std::size_t(i)];
    const double s = quantile_stat[std::size_t(i)];
    if (!(p > prev_p && p < 1.0))
      throw std::runtime_error("max-cp table grid must increase strictly inside (0, 1)");
    if (!(s >= prev_q) || !(s >= 0.0 && s <= 1.0))
      throw std::runtime_error("max-cp table quantiles must be non-decreasing in [0, 1]");
    prev_p = p;
    prev_q = s;
  }
}

MaxCpTable precompute_maxcp_table(const MaxCpOptions& opt) {
  HtlbConfig probe;
  probe.statistic = Statistic::kMaxCp;
  probe.m1 = opt.m1;
  probe.m2 = opt.m2;
  probe.q = opt.q;
  probe.check();
  if (opt.n_p < 1 || opt.n_seq < 1)
    throw std::domain_error("grid and sample counts must be positive");
  const std::uint64_t work =
      std::uint64_t(opt.n_p) * std::uint64_t(opt.n_seq) * std::uint64_t(opt.m2);
  if (work > opt.max_work_units)
    throw std::runtime_error(
        "precompute workload of " + std::to_string(work) +
        " units exceeds the cap of " + std::to_string(opt.max_work_units) +
        "; shard the grid across jobs");

  MaxCpTable table;
  table.m1 = opt.m1;
  table.m2 = opt.m2;
  table.q = opt.q;
  table.n_p = opt.n_p;
  table.n_seq = opt.n_seq;
  table.seed = opt.seed;
  table.p_grid.resize(std::size_t(opt.n_p));
  for (int i = 0; i < opt.n_p; ++i)
    table.p_grid[std::size_t(i)] = double(i + 1) / double(opt.n_p + 1);

  CpBoundCache cache(opt.q);
  cache.prefill(opt.m1, opt.m2, opt.threads);
  std::vector<const double*> rows(std::size_t(opt.m2) + 1, nullptr);
  for (int j = opt.m1; j <= opt.m2; ++j)
    rows[std::size_t(j)] = cache.row(j).data();

  // Empirical q'th quantile = order statistic at ceil(q * n_seq), the lower
  // of the usual conventions.
  int rank = int(std::ceil(opt.q * double(opt.n_seq)));
  rank = std::clamp(rank, 1, opt.n_seq);

  std::vector<double> raw(std::size_t(opt.n_p), 0.0);
  detail::parallel_for(opt.n_p, opt.threads, [&](int i) {
    SeededRng rng(opt.seed, std::uint64_t(i));
    const double p = table.p_grid[std::size_t(i)];
    std::vector<std::uint8_t> v(std::size_t(opt.m2));
    std::vector<double> stats(std::size_t(opt.n_seq));
    for (int s = 0; s < opt.n_seq; ++s) {
      for (auto& bit : v) bit = rng.bernoulli(p) ? 1 : 0;
      stats[std::size_t(s)] =
          maxcp_stat_rows(v.data(), opt.m2, opt.m1, rows.data());
    }
    std::nth_element(stats.begin(), stats.begin() + (rank - 1), stats.end());
    raw[std::size_t(i)] = stats[std::size_t(rank - 1)];
  });

  // Rectify: the true quantile grows with p, so sampling dips are repaired
  // by a running maximum in grid order.
  table.quantile_stat.resize(std::size_t(opt.n_p));
  double running = 0.0;
  for (int i = 0; i < opt.n_p; ++i) {
    running = std::max(running, raw[std::size_t(i)]);
    table.quantile_stat[std::size_t(i)] = running;
  }
  table.check();
  return table;
}

double lookup_lower_bound(const MaxCpTable& table, double stat) {
  table.check();
  if (!(stat >= 0.0))
    throw std::domain_error("statistic must be non-negative");
  return lookup_unchecked(table, stat);
}

void save_maxcp_table(const MaxCpTable& table,
                      const std::filesystem::path& path) {
  table.check();
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  char header[256];
  std::snprintf(header, sizeof header,
                "maxcp-table v%d; m1=%d; m2=%d; q=%.17g; n_p=%d; n_seq=%d; "
                "seed=%" PRIu64 "\n",
                table.format_version, table.m1, table.m2, table.q, table.n_p,
                table.n_seq, table.seed);
  out << header << "p,quantile_stat\n";
  for (int i = 0; i < table.n_p; ++i)
    out << fmt17(table.p_grid[std::size_t(i)]) << ','
        << fmt17(table.quantile_stat[std::size_t(i)]) << '\n';
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

MaxCpTable load_maxcp_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": missing header line");

  MaxCpTable table;
  std::uint64_t seed = 0;
  const int fields = std::sscanf(
      line.c_str(),
      "maxcp-table v%d; m1=%d; m2=%d; q=%lf; n_p=%d; n_seq=%d; seed=%" SCNu64,
      &table.format_version, &table.m1, &table.m2, &table.q, &table.n_p,
      &table.n_seq, &seed);
  if (fields != 7)
    throw std::runtime_error(path.string() + ": malformed max-cp table header");
  table.seed = seed;

  if (!std::getline(in, line) || line != "p,quantile_stat")
    throw std::runtime_error(path.string() + ": missing column header row");

  table.p_grid.reserve(std::size_t(std::max(table.n_p, 0)));
  table.quantile_stat.reserve(std::size_t(std::max(table.n_p, 0)));
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected p,quantile_stat");
    char* end = nullptr;
    const double p = std::strtod(line.c_str(), &end);
    if (end != line.c_str() + comma)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed probability");
    const double s = std::strtod(line.c_str() + comma + 1, &end);
    if (end != line.c_str() + line.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed quantile");
    table.p_grid.push_back(p);
    table.quantile_stat.push_back(s);
  }
  if (table.p_grid.size() != std::size_t(std::max(table.n_p, 0)))
    throw std::runtime_error(path.string() + ": row count disagrees with n_p");
  table.check();
  return table;
}

MaxCpTable load_maxcp_table(const std::filesystem::path& path,
                            const HtlbConfig& cfg) {
  MaxCpTable table = load_maxcp_table(path);
  if (table.m1 != cfg.m1 || table.m2 != cfg.m2 || table.q != cfg.q)
    throw std::runtime_error(
        path.string() + ": table was built for m1=" + std::to_string(table.m1) +
        " m2=" + std::to_string(table.m2) + " q=" + fmt17(table.q) +
        ", requested m1=" + std::to_string(cfg.m1) + " m2=" +
        std::to_string(cfg.m2) + " q=" + fmt17(cfg.q));
  return table;
}

LowerBoundMap htlb_map(std::span<const std::uint8_t> labels,
                       const HtlbConfig& cfg, const MaxCpTable* table,
                       CpBoundCache* cache) {
  cfg.check();
  check_binary(labels);
  const std::size_t n = labels.size();
  const std::size_t w = std::size_t(cfg.window());
  if (n < w)
    throw std::invalid_argument("label sequence shorter than the window");

  CpBoundCache local(cfg.q);
  if (!cache) cache = &local;
  if (cache->q() != cfg.q)
    throw std::invalid_argument("bound cache confidence level disagrees with config");

  char snapshot[160];
  if (cfg.statistic == Statistic::kSum) {
    std::snprintf(snapshot, sizeof snapshot, "statistic=sum;m=%d;q=%.17g",
                  cfg.m, cfg.q);
    LowerBoundMap map =
        LowerBoundMap::with_prefix(n, w - 1, "htlb_cp", snapshot);
    const double* row = cache->row(cfg.m).data();
    int ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ones += labels[i];
      if (i >= w) ones -= labels[i - w];
      if (i + 1 >= w) map.bounds[i] = row[ones];
    }
    return map;
  }

  if (!table)
    throw std::invalid_argument("max-cp estimation requires a precomputed table");
  if (table->m1 != cfg.m1 || table->m2 != cfg.m2 || table->q != cfg.q)
    throw std::invalid_argument("max-cp table settings disagree with the config");
  table->check();

  std::snprintf(snapshot, sizeof snapshot,
                "statistic=max-cp;m1=%d;m2=%d;q=%.17g;table_n_p=%d", cfg.m1,
                cfg.m2, cfg.q, table->n_p);
  LowerBoundMap map =
      LowerBoundMap::with_prefix(n, w - 1, "htlb_maxcp", snapshot);

  std::vector<const double*> rows(std::size_t(cfg.m2) + 1, nullptr);
  for (int j = cfg.m1; j <= cfg.m2; ++j)
    rows[std::size_t(j)] = cache->row(j).data();

  std::vector<std::uint32_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    prefix[i + 1] = prefix[i] + labels[i];

  for (std::size_t k = w - 1; k < n; ++k) {
    const std::uint32_t end_count = prefix[k + 1];
    double best = 0.0;
    for (int j = cfg.m1; j <= cfg.m2; ++j) {
      const std::uint32_t ones = end_count - prefix[k + 1 - std::size_t(j)];
      best = std::max(best, rows[std::size_t(j)][ones]);
    }
    map.bounds[k] = lookup_unchecked(*table, best);
  }
  return map;
}

}  // namespace cautious
