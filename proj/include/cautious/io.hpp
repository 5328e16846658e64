#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cautious/datagen.hpp"
#include "cautious/harness.hpp"
#include "cautious/lower_bound_map.hpp"

namespace cautious {

// All files are UTF-8, LF line endings, with a header row. Doubles are
// rendered with 17 significant digits so a write/read round trip is
// bit-exact.

// Shortest-exact rendering used by every writer ("%.17g").
std::string format_double(double v);

// Truth maps: index,score,true_prob (index is 1-based, score = i/(n+1)).
void write_truth_csv(const std::filesystem::path& path,
                     const TrueCalibrationMap& map);
TrueCalibrationMap read_truth_csv(const std::filesystem::path& path);

// Calibration sets: index,score,label.
void write_set_csv(const std::filesystem::path& path,
                   const CalibrationSet& set);
CalibrationSet read_set_csv(const std::filesystem::path& path);

// Bound maps: index,score,true_prob,bound when a truth is supplied,
// index,bound otherwise. Undefined positions have an empty bound field.
void write_bounds_csv(const std::filesystem::path& path,
                      const LowerBoundMap& map,
                      const TrueCalibrationMap* truth = nullptr);

// Reads either bounds layout; the truth columns are returned when present.
struct BoundsFile {
  LowerBoundMap map;
  std::optional<TrueCalibrationMap> truth;
};
BoundsFile read_bounds_csv(const std::filesystem::path& path);

// Experiment configs are flat key = value text ('#' starts a comment).
// Keys match the ExperimentConfig fields; `methods` is a comma-separated
// list of name[:postproc] entries, or the shorthands `default` /
// `conservative`. Unknown keys are errors.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace cautious
