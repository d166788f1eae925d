#pragma once

#include <string>
#include <vector>

#include "clbayes/calibration.hpp"

namespace clbayes {

// Calibration plot: effective versus nominal coverage, one polyline per
// curve, unit square axes and the identity diagonal for reference.  Returns
// a standalone SVG document.
std::string svg_calibration_plot(const std::vector<CalibrationCurve>& curves,
                                 const std::string& title);

}  // namespace clbayes
