#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "imputeinr/matrix.hpp"
#include "imputeinr/training.hpp"

namespace imputeinr {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line
  std::string color = "#1f77b4";
  bool markers = false;   // draw points instead of a polyline
};

/// Line plot with axes and min/max tick labels. Non-finite points are skipped.
std::string svg_plot(const std::string& title, const std::vector<SvgSeries>& series,
                     double width = 640, double height = 360);

std::string svg_loss_curve(const TrainResult& result);

/// One panel per variable: imputed line, observed points, and (optionally) ground truth.
std::string svg_imputation_overlay(const Matrix& imputed, const Matrix& observed, const Matrix& mask,
                                   const std::vector<std::string>& names,
                                   const Matrix* ground_truth = nullptr);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace imputeinr
