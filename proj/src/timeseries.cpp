#include "imputeinr/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "imputeinr/errors.hpp"
#include "imputeinr/rng.hpp"

namespace imputeinr {

std::size_t TimeSeriesWindow::observed_count() const {
  return static_cast<std::size_t>(std::count(mask.data.begin(), mask.data.end(), 1.0));
}

void TimeSeriesWindow::validate() const {
  require_same_shape(values, mask, "window values vs mask");
  for (double m : mask.data)
    if (m != 0.0 && m != 1.0) throw ShapeError("mask entries must be 0 or 1");
  if (variable_names.size() != values.rows) throw ShapeError("variable name count differs from N");
  if (t_grid.size() != values.cols) throw ShapeError("time grid length differs from T");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw ShapeError("time grid must be strictly increasing");
}

std::vector<double> normalized_time_grid(std::size_t t) {
  std::vector<double> grid(t, 0.0);
  for (std::size_t i = 0; i < t; ++i)
    grid[i] = t > 1 ? static_cast<double>(i) / static_cast<double>(t - 1) : 0.0;
  if (t > 1) grid.back() = 1.0;
  return grid;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

bool is_missing_cell(const std::string& cell) {
  return cell.empty() || cell == "NaN" || cell == "nan" || cell == "NAN";
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw EmptyDataError("empty file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_line(line);
  if (table.header.empty() || (table.header.size() == 1 && table.header[0].empty()))
    throw EmptyDataError("no variables in header of " + path.string());
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      // A blank line is one missing cell for a single-column file and noise otherwise.
      if (table.header.size() == 1) table.rows.push_back({""});
      ++row;
      continue;
    }
    auto cells = split_line(line);
    if (cells.size() != table.header.size())
      throw ParseError("expected " + std::to_string(table.header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       row);
    table.rows.push_back(std::move(cells));
    ++row;
  }
  if (table.rows.empty()) throw EmptyDataError("no data rows in " + path.string());
  return table;
}

TimeSeries series_from_table(const CsvTable& table) {
  const std::size_t n = table.header.size();
  const std::size_t t = table.rows.size();
  if (n == 0 || t == 0) throw EmptyDataError("table has zero variables or zero rows");
  TimeSeries s;
  s.values = Matrix(n, t, std::numeric_limits<double>::quiet_NaN());
  s.mask = Matrix(n, t, 0.0);
  s.variable_names = table.header;
  s.t_grid = normalized_time_grid(t);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t v = 0; v < n; ++v) {
      const std::string& cell = table.rows[r][v];
      if (is_missing_cell(cell)) continue;
      double x = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, x);
      if (ec != std::errc() || ptr != last)
        throw ParseError("unparsable cell '" + cell + "' in column " + table.header[v],
                         static_cast<long>(r));
      if (std::isnan(x)) continue;
      s.values(v, r) = x;
      s.mask(v, r) = 1.0;
    }
  return s;
}

TimeSeries load_csv(const std::filesystem::path& path) { return series_from_table(read_csv_table(path)); }

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& grid) {
  if (header.size() != grid.rows) throw ShapeError("write_csv: header size differs from N");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  for (std::size_t v = 0; v < header.size(); ++v) out << (v ? "," : "") << header[v];
  out << '\n';
  for (std::size_t t = 0; t < grid.cols; ++t) {
    for (std::size_t v = 0; v < grid.rows; ++v) out << (v ? "," : "") << format_number(grid(v, t));
    out << '\n';
  }
}

std::size_t window_count(std::size_t t_full, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw WindowTooLarge("window and stride must be positive");
  if (window > t_full)
    throw WindowTooLarge("window " + std::to_string(window) + " exceeds series length " +
                         std::to_string(t_full));
  return (t_full - window) / stride + 1;
}

std::vector<TimeSeriesWindow> make_windows(const TimeSeries& series, std::size_t window,
                                           std::size_t stride) {
  const std::size_t count = window_count(series.length(), window, stride);
  std::vector<TimeSeriesWindow> out;
  out.reserve(count);
  const std::size_t n = series.n_vars();
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * stride;
    TimeSeriesWindow win;
    win.values = Matrix(n, window);
    win.mask = Matrix(n, window);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t t = 0; t < window; ++t) {
        win.values(v, t) = series.values(v, start + t);
        win.mask(v, t) = series.mask(v, start + t);
      }
    win.variable_names = series.variable_names;
    win.t_grid = normalized_time_grid(window);
    win.start = series.start + start;
    out.push_back(std::move(win));
  }
  return out;
}

std::pair<TimeSeriesWindow, StandardizationStats> standardize(const TimeSeriesWindow& w) {
  const std::size_t n = w.n_vars();
  StandardizationStats stats{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
  TimeSeriesWindow out = w;
  for (std::size_t v = 0; v < n; ++v) {
    double count = 0.0;
    double sum = 0.0;
    for (std::size_t t = 0; t < w.length(); ++t)
      if (w.mask(v, t) == 1.0) {
        sum += w.values(v, t);
        count += 1.0;
      }
    if (count > 0.0) {
      const double mean = sum / count;
      double ss = 0.0;
      for (std::size_t t = 0; t < w.length(); ++t)
        if (w.mask(v, t) == 1.0) ss += (w.values(v, t) - mean) * (w.values(v, t) - mean);
      const double sd = std::sqrt(ss / count);
      stats.mean[v] = mean;
      stats.std[v] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
    }
    for (std::size_t t = 0; t < w.length(); ++t)
      out.values(v, t) =
          w.mask(v, t) == 1.0 ? (w.values(v, t) - stats.mean[v]) / stats.std[v] : 0.0;
  }
  return {std::move(out), std::move(stats)};
}

Matrix destandardize(const Matrix& grid, const StandardizationStats& stats) {
  if (stats.mean.size() != grid.rows) throw ShapeError("destandardize: stats size differs from N");
  Matrix out(grid.rows, grid.cols);
  for (std::size_t v = 0; v < grid.rows; ++v)
    for (std::size_t t = 0; t < grid.cols; ++t)
      out(v, t) = grid(v, t) * stats.std[v] + stats.mean[v];
  return out;
}

MaskedWindow apply_random_mask(const TimeSeriesWindow& w, double rate, std::uint64_t seed,
                               double fill) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ShapeError("mask rate must lie in [0, 1]");
  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < w.mask.size(); ++i)
    if (w.mask.data[i] == 1.0) observed.push_back(i);
  const auto hide = static_cast<std::size_t>(std::llround(rate * static_cast<double>(observed.size())));
  // Partial Fisher-Yates: the first `hide` slots become a uniform sample without replacement.
  Rng rng(seed);
  for (std::size_t i = 0; i < hide; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(observed.size() - i));
    std::swap(observed[i], observed[j]);
  }
  MaskedWindow out{w, Matrix(w.n_vars(), w.length(), 0.0)};
  for (std::size_t i = 0; i < hide; ++i) {
    const std::size_t idx = observed[i];
    out.masked.mask.data[idx] = 0.0;
    out.masked.values.data[idx] = fill;
    out.eval_mask.data[idx] = 1.0;
  }
  return out;
}

Matrix merge_imputed(const TimeSeriesWindow& original, const Matrix& predicted) {
  require_same_shape(original.values, predicted, "merge_imputed");
  require_same_shape(original.values, original.mask, "merge_imputed mask");
  Matrix out = predicted;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (original.mask.data[i] == 1.0) out.data[i] = original.values.data[i];
  return out;
}

}  // namespace imputeinr
