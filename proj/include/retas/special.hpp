#pragma once

namespace retas::special {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
/// Power series below x = a + 1, modified Lentz continued fraction above.
double regularized_upper_gamma(double a, double x);

/// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x).
double regularized_lower_gamma(double a, double x);

/// log Q(a, x), accurate where Q itself underflows.
double log_regularized_upper_gamma(double a, double x);

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double z);

/// P(lo < Z < hi) for Z ~ N(0, 1), using the tail that avoids cancellation.
double normal_interval(double lo, double hi);

} // namespace retas::special
