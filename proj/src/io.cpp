#include "cautious/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cautious/harness.hpp"

namespace cautious {

namespace {

[[noreturn]] void fail_at(const std::filesystem::path& path,
                          std::size_t line_no, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                           ": " + what);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

void finish_out(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

double parse_number(const std::string& s, const std::filesystem::path& path,
                    std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    fail_at(path, line_no, "malformed number '" + s + "'");
  return v;
}

long parse_index(const std::string& s, const std::filesystem::path& path,
                 std::size_t line_no) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    fail_at(path, line_no, "malformed index '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Truth maps
// ---------------------------------------------------------------------------

void write_truth_csv(const std::filesystem::path& path,
                     const TrueCalibrationMap& map) {
  map.check();
  auto out = open_out(path);
  out << "index,score,true_prob\n";
  const std::size_t n = map.size();
  for (std::size_t i = 0; i < n; ++i)
    out << (i + 1) << ',' << format_double(double(i + 1) / double(n + 1))
        << ',' << format_double(map.probs[i]) << '\n';
  finish_out(out, path);
}

TrueCalibrationMap read_truth_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "index,score,true_prob")
    throw std::runtime_error(path.string() +
                             ": expected header index,score,true_prob");
  TrueCalibrationMap map;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) fail_at(path, line_no, "expected 3 fields");
    const long idx = parse_index(fields[0], path, line_no);
    if (idx != long(map.probs.size()) + 1)
      fail_at(path, line_no, "indices must run 1..n in order");
    parse_number(fields[1], path, line_no);  // score column is derivable
    map.probs.push_back(parse_number(fields[2], path, line_no));
  }
  if (map.probs.empty())
    throw std::runtime_error(path.string() + ": no data rows");
  map.lo = *std::min_element(map.probs.begin(), map.probs.end());
  map.hi = *std::max_element(map.probs.begin(), map.probs.end());
  map.check();
  return map;
}

// ---------------------------------------------------------------------------
// Calibration sets
// ---------------------------------------------------------------------------

void write_set_csv(const std::filesystem::path& path,
                   const CalibrationSet& set) {
  if (set.scores.size() != set.labels.size())
    throw std::invalid_argument("scores and labels must match in length");
  auto out = open_out(path);
  out << "index,score,label\n";
  for (std::size_t i = 0; i < set.labels.size(); ++i)
    out << (i + 1) << ',' << format_double(set.scores[i]) << ','
        << int(set.labels[i]) << '\n';
  finish_out(out, path);
}

CalibrationSet read_set_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "index,score,label")
    throw std::runtime_error(path.string() +
                             ": expected header index,score,label");
  CalibrationSet set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) fail_at(path, line_no, "expected 3 fields");
    const long idx = parse_index(fields[0], path, line_no);
    if (idx != long(set.labels.size()) + 1)
      fail_at(path, line_no, "indices must run 1..n in order");
    set.scores.push_back(parse_number(fields[1], path, line_no));
    const long label = parse_index(fields[2], path, line_no);
    if (label != 0 && label != 1) fail_at(path, line_no, "label must be 0 or 1");
    set.labels.push_back(std::uint8_t(label));
  }
  if (set.labels.empty())
    throw std::runtime_error(path.string() + ": no data rows");
  return set;
}

// ---------------------------------------------------------------------------
// Bound maps
// ---------------------------------------------------------------------------

void write_bounds_csv(const std::filesystem::path& path,
                      const LowerBoundMap& map,
                      const TrueCalibrationMap* truth) {
  map.check();
  if (truth && truth->size() != map.size())
    throw std::invalid_argument("bound map and truth differ in length");
  auto out = open_out(path);
  const std::size_t n = map.size();
  if (truth) {
    out << "index,score,true_prob,bound\n";
    for (std::size_t i = 0; i < n; ++i) {
      out << (i + 1) << ',' << format_double(double(i + 1) / double(n + 1))
          << ',' << format_double(truth->probs[i]) << ',';
      if (map.is_defined(i)) out << format_double(map.bounds[i]);
      out << '\n';
    }
  } else {
    out << "index,bound\n";
    for (std::size_t i = 0; i < n; ++i) {
      out << (i + 1) << ',';
      if (map.is_defined(i)) out << format_double(map.bounds[i]);
      out << '\n';
    }
  }
  finish_out(out, path);
}

BoundsFile read_bounds_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": missing header line");
  bool with_truth = false;
  if (line == "index,score,true_prob,bound")
    with_truth = true;
  else if (line != "index,bound")
    throw std::runtime_error(
        path.string() +
        ": expected header index,bound or index,score,true_prob,bound");

  BoundsFile file;
  std::vector<double> bounds;
  std::vector<double> probs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::size_t expect = with_truth ? 4 : 2;
    if (fields.size() != expect)
      fail_at(path, line_no,
              "expected " + std::to_string(expect) + " fields");
    const long idx = parse_index(fields[0], path, line_no);
    if (idx != long(bounds.size()) + 1)
      fail_at(path, line_no, "indices must run 1..n in order");
    if (with_truth) {
      parse_number(fields[1], path, line_no);  // score column is derivable
      probs.push_back(parse_number(fields[2], path, line_no));
    }
    const std::string& field = fields[expect - 1];
    bounds.push_back(field.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : parse_number(field, path, line_no));
  }
  if (bounds.empty())
    throw std::runtime_error(path.string() + ": no data rows");

  std::size_t defined_from = 0;
  while (defined_from < bounds.size() && std::isnan(bounds[defined_from]))
    ++defined_from;
  file.map = LowerBoundMap::with_prefix(bounds.size(), defined_from, "file",
                                        path.string());
  file.map.bounds = std::move(bounds);
  file.map.check();  // rejects gaps: undefined entries after defined_from

  if (with_truth) {
    TrueCalibrationMap truth;
    truth.probs = std::move(probs);
    truth.lo = *std::min_element(truth.probs.begin(), truth.probs.end());
    truth.hi = *std::max_element(truth.probs.begin(), truth.probs.end());
    truth.check();
    file.truth = std::move(truth);
  }
  return file;
}

// ---------------------------------------------------------------------------
// Experiment configs
// ---------------------------------------------------------------------------

namespace {

long to_long(const std::string& v, std::size_t line_no) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    throw std::runtime_error("config line " + std::to_string(line_no) +
                             ": malformed integer '" + v + "'");
  return x;
}

double to_double(const std::string& v, std::size_t line_no) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw std::runtime_error("config line " + std::to_string(line_no) +
                             ": malformed number '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& v, std::size_t line_no) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    throw std::runtime_error("config line " + std::to_string(line_no) +
                             ": malformed unsigned integer '" + v + "'");
  return x;
}

bool to_bool(const std::string& v, std::size_t line_no) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config line " + std::to_string(line_no) +
                           ": expected true/false, got '" + v + "'");
}

std::vector<MethodSpec> parse_methods(const std::string& v,
                                      std::size_t line_no) {
  if (v == "default") return default_method_grid();
  if (v == "conservative") return conservative_method_grid();
  std::vector<MethodSpec> grid;
  std::size_t begin = 0;
  while (begin <= v.size()) {
    std::size_t comma = v.find(',', begin);
    if (comma == std::string::npos) comma = v.size();
    const std::string entry = trim(v.substr(begin, comma - begin));
    begin = comma + 1;
    if (entry.empty())
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty method entry");
    MethodSpec spec;
    const std::size_t colon = entry.find(':');
    if (colon == std::string::npos) {
      spec.name = entry;
    } else {
      spec.name = entry.substr(0, colon);
      try {
        spec.post = parse_postproc(entry.substr(colon + 1));
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": " + e.what());
      }
    }
    grid.push_back(std::move(spec));
  }
  return grid;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "n_maps")
      cfg.n_maps = int(to_long(value, line_no));
    else if (key == "sets_per_map")
      cfg.sets_per_map = int(to_long(value, line_no));
    else if (key == "n")
      cfg.n = int(to_long(value, line_no));
    else if (key == "map_lo")
      cfg.map_lo = to_double(value, line_no);
    else if (key == "map_hi")
      cfg.map_hi = to_double(value, line_no);
    else if (key == "q")
      cfg.q = to_double(value, line_no);
    else if (key == "m")
      cfg.m = int(to_long(value, line_no));
    else if (key == "m1")
      cfg.m1 = int(to_long(value, line_no));
    else if (key == "m2")
      cfg.m2 = int(to_long(value, line_no));
    else if (key == "methods")
      cfg.methods = parse_methods(value, line_no);
    else if (key == "scenario_l")
      cfg.scenario_l = to_double(value, line_no);
    else if (key == "outcome_percentile")
      cfg.outcome_percentile = to_double(value, line_no);
    else if (key == "base_seed")
      cfg.base_seed = to_u64(value, line_no);
    else if (key == "maxcp_table_path")
      cfg.maxcp_table_path = value;
    else if (key == "out_dir")
      cfg.out_dir = value;
    else if (key == "eval_skip")
      cfg.eval_skip = to_long(value, line_no);
    else if (key == "threads")
      cfg.threads = int(to_long(value, line_no));
    else if (key == "dump_maps")
      cfg.dump_maps = to_bool(value, line_no);
    else if (key == "label_smoothing")
      cfg.label_smoothing = to_double(value, line_no);
    else if (key == "rcir_width_threshold")
      cfg.rcir_width_threshold = to_double(value, line_no);
    else if (key == "risk_cap")
      cfg.risk_cap = to_double(value, line_no);
    else
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_experiment_config(text.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace cautious
