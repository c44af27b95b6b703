/*
 * Copyright 2026 The naswd authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NASWD_STATS_HPP
#define NASWD_STATS_HPP

#include <span>

namespace naswd::stats {

/// Complementary error function, Cody-style rational Chebyshev
/// approximation (three regimes, coefficients in stats.cpp). Max absolute
/// error well below 1e-10 over the real line.
double erfc_rational(double x);

/// Standard normal CDF, computed as erfc_rational(-z / sqrt(2)) / 2.
double norm_cdf(double z);

/// Standard normal density.
double norm_pdf(double z);

/// Regularized incomplete beta I_x(a, b) via the modified Lentz continued
/// fraction; tolerance 1e-12, at most 300 iterations.
double reg_incomplete_beta(double a, double b, double x);

/// CDF of the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double f, double d1, double d2);

/// CDF of Student's t with nu degrees of freedom.
double student_t_cdf(double t, double nu);

/// Quantile of Student's t (bisection on student_t_cdf).
double student_t_quantile(double p, double nu);

double mean(std::span<const double> xs);
/// Sample variance (n - 1 denominator); 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

} // namespace naswd::stats

#endif
