#pragma once

namespace mvsde {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Inverse of the standard normal CDF on (0, 1).
///
/// Rational approximation followed by one Halley correction against
/// `std::erfc`; absolute error is below 1e-9 on (1e-12, 1 - 1e-12).
/// Returns -inf / +inf at 0 / 1 and NaN outside [0, 1].
double normal_quantile(double u);

}  // namespace mvsde
