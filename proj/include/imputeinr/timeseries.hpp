#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "imputeinr/matrix.hpp"

namespace imputeinr {

/// N×T values plus an N×T observation mask (1 = observed). Missing cells in `values` hold NaN
/// straight from the loader and 0 after standardization; the mask is always authoritative.
struct TimeSeriesWindow {
  Matrix values;
  Matrix mask;
  std::vector<std::string> variable_names;
  std::vector<double> t_grid;
  /// Row offset of this window within its source series.
  std::size_t start = 0;

  std::size_t n_vars() const { return values.rows; }
  std::size_t length() const { return values.cols; }
  std::size_t observed_count() const;

  /// Checks the shape/mask/time-grid invariants; throws ShapeError.
  void validate() const;
};

/// A full-length series before windowing has the same layout.
using TimeSeries = TimeSeriesWindow;

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Raw cell text as read from disk, kept so observed cells can be written back verbatim.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // one per timestamp
};

/// T evenly spaced points on [0, 1] (a single point maps to 0).
std::vector<double> normalized_time_grid(std::size_t t);

bool is_missing_cell(const std::string& cell);

CsvTable read_csv_table(const std::filesystem::path& path);
TimeSeries series_from_table(const CsvTable& table);
TimeSeries load_csv(const std::filesystem::path& path);

/// Writes an N×T grid as a CSV with one row per timestamp. Numbers use the shortest
/// round-trip representation; NaN cells are written empty.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& grid);
std::string format_number(double v);

std::vector<TimeSeriesWindow> make_windows(const TimeSeries& series, std::size_t window,
                                           std::size_t stride);
std::size_t window_count(std::size_t t_full, std::size_t window, std::size_t stride);

/// Z-scores each variable over its observed entries (population std; constant or empty
/// variables get std 1). Missing entries become 0.
std::pair<TimeSeriesWindow, StandardizationStats> standardize(const TimeSeriesWindow& w);
Matrix destandardize(const Matrix& grid, const StandardizationStats& stats);

struct MaskedWindow {
  TimeSeriesWindow masked;
  Matrix eval_mask;  // 1 exactly where an observed entry was hidden
};

/// Hides round(r·|observed|) observed entries chosen uniformly without replacement. Hidden
/// cells get `fill` in `masked.values` (NaN for raw windows, 0 for standardized ones).
MaskedWindow apply_random_mask(const TimeSeriesWindow& w, double rate, std::uint64_t seed,
                               double fill = std::numeric_limits<double>::quiet_NaN());

/// Observed cells of `original` verbatim, `predicted` elsewhere.
Matrix merge_imputed(const TimeSeriesWindow& original, const Matrix& predicted);

}  // namespace imputeinr
