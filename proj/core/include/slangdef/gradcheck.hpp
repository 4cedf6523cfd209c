#pragma once

#include <functional>

#include "slangdef/matrix.hpp"

namespace slangdef {

/// Central-difference gradient of a scalar function of a matrix:
/// (f(x + h e_ij) - f(x - h e_ij)) / 2h for every entry.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                  double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||, floor) in the Frobenius norm. The floor
/// only matters when both gradients are (numerically) zero.
double relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-8);

}  // namespace slangdef
