#pragma once

#include <string>

#include "ccfdm/common.hpp"

namespace ccfdm {

// Reads a metrics file, writes the evaluation-return series as CSV next to
// out_path (extension swapped to .csv), and renders a line plot of
// evaluation return vs environment step to out_path as a BMP image.
// Returns the series path.
std::string export_curves(const std::string& metrics_path, const std::string& out_path);

}  // namespace ccfdm
