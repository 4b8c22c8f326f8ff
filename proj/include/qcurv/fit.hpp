#pragma once

#include <span>

namespace qcurv {

// Slope of the least-squares line through (x_i, y_i). Needs two distinct x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

}  // namespace qcurv
