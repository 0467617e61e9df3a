// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <reltie/core.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace reltie::dist {

/// Binomial(n, p) pmf for k = 0..n by multiplicative recurrence from the mode.
inline std::vector<double> binomial_pmf(int n, double p) {
	if (n < 0 || !(p >= 0.0 && p <= 1.0)) { throw ConfigError("binomial parameters out of range"); }
	std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
	if (p == 0.0) {
		pmf[0] = 1.0;
		return pmf;
	}
	if (p == 1.0) {
		pmf[n] = 1.0;
		return pmf;
	}
	int const mode = std::min(n, static_cast<int>(std::floor((n + 1) * p)));
	double const log_mode = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) - std::lgamma(n - mode + 1.0) + mode * std::log(p) +
							(n - mode) * std::log1p(-p);
	pmf[mode] = std::exp(log_mode);
	double const odds = p / (1.0 - p);
	for (int k = mode; k < n; ++k) { pmf[k + 1] = pmf[k] * (n - k) / (k + 1.0) * odds; }
	for (int k = mode; k > 0; --k) { pmf[k - 1] = pmf[k] * k / (n - k + 1.0) / odds; }
	double total = 0.0;
	for (double v : pmf) { total += v; }
	for (double& v : pmf) { v /= total; }
	return pmf;
}

/// P(X <= k) for X ~ Binomial(n, p).
inline double binomial_cdf(int k, int n, double p) {
	if (k < 0) { return 0.0; }
	if (k >= n) { return 1.0; }
	auto const pmf = binomial_pmf(n, p);
	double lower = 0.0;
	double upper = 0.0;
	for (int j = 0; j <= k; ++j) { lower += pmf[j]; }
	for (int j = k + 1; j <= n; ++j) { upper += pmf[j]; }
	// sum whichever side is smaller to avoid cancellation
	return lower <= upper ? lower : 1.0 - upper;
}

/// P(X >= k) for X ~ Binomial(n, p).
inline double binomial_upper_tail(int k, int n, double p) {
	if (k <= 0) { return 1.0; }
	if (k > n) { return 0.0; }
	auto const pmf = binomial_pmf(n, p);
	double lower = 0.0;
	double upper = 0.0;
	for (int j = 0; j < k; ++j) { lower += pmf[j]; }
	for (int j = k; j <= n; ++j) { upper += pmf[j]; }
	return upper <= lower ? upper : 1.0 - lower;
}

/// Smallest m with Binomial CDF(m) >= q.
inline int binomial_quantile(double q, int n, double p) {
	auto const pmf = binomial_pmf(n, p);
	double cdf = 0.0;
	for (int m = 0; m <= n; ++m) {
		cdf += pmf[m];
		if (cdf >= q) { return m; }
	}
	return n;
}

/// Poisson(lambda) pmf for k = 0..k_max by recurrence.
inline std::vector<double> poisson_pmf(int k_max, double lambda) {
	if (k_max < 0 || !(lambda >= 0.0) || !std::isfinite(lambda)) { throw ConfigError("poisson parameters out of range"); }
	std::vector<double> pmf(static_cast<std::size_t>(k_max) + 1, 0.0);
	if (lambda == 0.0) {
		pmf[0] = 1.0;
		return pmf;
	}
	// anchor at the mode in log space so large lambda does not underflow e^{-lambda}
	int const mode = std::min(k_max, static_cast<int>(std::floor(lambda)));
	pmf[mode] = std::exp(mode * std::log(lambda) - lambda - std::lgamma(mode + 1.0));
	for (int k = mode; k < k_max; ++k) { pmf[k + 1] = pmf[k] * lambda / (k + 1.0); }
	for (int k = mode; k > 0; --k) { pmf[k - 1] = pmf[k] * k / lambda; }
	return pmf;
}

/// P(X <= k) for X ~ Poisson(lambda), recursive summation.
inline double poisson_cdf(int k, double lambda) {
	if (k < 0) { return 0.0; }
	auto const pmf = poisson_pmf(k, lambda);
	double cdf = 0.0;
	for (double v : pmf) { cdf += v; }
	return std::min(cdf, 1.0);
}

/// P(X >= k) for X ~ Poisson(lambda).
inline double poisson_upper_tail(int k, double lambda) {
	if (k <= 0) { return 1.0; }
	if (lambda == 0.0) { return 0.0; }
	double const lower = poisson_cdf(k - 1, lambda);
	if (lower < 0.5) { return 1.0 - lower; }
	// upper side summed directly until terms vanish
	double term = std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
	double upper = 0.0;
	for (int j = k; term > 0.0; ++j) {
		upper += term;
		term *= lambda / (j + 1.0);
		if (term < upper * 1e-17) { break; }
	}
	return upper;
}

/// Smallest k with Poisson CDF(k) >= q.
inline int poisson_quantile(double q, double lambda) {
	if (lambda == 0.0) { return 0; }
	int const k_max = static_cast<int>(std::ceil(lambda + 60.0 * std::sqrt(lambda) + 60.0));
	auto const pmf = poisson_pmf(k_max, lambda);
	double cdf = 0.0;
	for (int k = 0; k <= k_max; ++k) {
		cdf += pmf[k];
		if (cdf >= q) { return k; }
	}
	return k_max;
}

/// Le Cam-type bound on sum_k |PoissonBinomial(p) - Poisson(sum p)|.
inline double lecam_bound(double lambda, double sum_sq) {
	if (lambda <= 0.0) { return 0.0; }
	return 2.0 * (-std::expm1(-lambda)) / lambda * sum_sq;
}

} // namespace reltie::dist
