#include "slangdef/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "slangdef/errors.hpp"

namespace slangdef {

Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                  double h) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double plus = f(probe);
    probe[i] = original - h;
    const double minus = f(probe);
    probe[i] = original;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Matrix& analytic, const Matrix& numeric, double floor) {
  if (!analytic.same_shape(numeric)) {
    throw ShapeError("relative_error: shape mismatch " + analytic.shape_string() + " vs " +
                     numeric.shape_string());
  }
  const double diff = std::sqrt(squared_norm(analytic - numeric));
  const double scale =
      std::max({std::sqrt(squared_norm(analytic)), std::sqrt(squared_norm(numeric)), floor});
  return diff / scale;
}

}  // namespace slangdef
