// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <reltie/core.hpp>
#include <reltie/distributions.hpp>
#include <reltie/fitness.hpp>
#include <reltie/ingest.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reltie {

enum class Correction { none, bonferroni };

inline std::string_view to_string(Correction c) noexcept { return c == Correction::bonferroni ? "bonferroni" : "none"; }

/// Verdict on one pair. Directed variants test the loan direction `i -> j`.
struct TieTestResult {
	BankIndex i{};
	BankIndex j{};
	int m{};
	double null_mean{};	 ///< tau u, or sum_t u(t)
	double p_value = 1.0; ///< P(count >= m) under the null
	int threshold{};	 ///< m^c: smallest m with CDF(m) >= c / 100
	bool significant = false;
	bool untestable = false;	  ///< u clipped at 1
	bool model_violation = false; ///< m > 0 where the null mean is 0
	double lecam_bound = std::numeric_limits<double>::quiet_NaN();
	Variant variant = Variant::undirected;
	Correction correction = Correction::none;
};

struct EdgeTestOptions {
	double level = 99.0; ///< percentile c, in (50, 100)
	Correction correction = Correction::none;
};

/// Percentile actually applied when `tested` hypotheses share the family level.
inline double effective_level(double level, Correction correction, std::size_t tested) {
	if (!(level > 50.0 && level < 100.0)) { throw ConfigError("edge-test percentile must lie in (50, 100)"); }
	if (correction == Correction::none || tested <= 1) { return level; }
	double const alpha = (1.0 - level / 100.0) / static_cast<double>(tested);
	return 100.0 * (1.0 - alpha);
}

/// Binomial(tau, u) test of a single count at percentile `level` (already corrected).
inline TieTestResult binomial_tie_test(int m, int tau, double u, double level) {
	TieTestResult r;
	r.m = m;
	r.null_mean = tau * u;
	if (u >= probability_cap) {
		r.untestable = true;
		r.threshold = tau;
		r.p_value = 1.0;
		return r;
	}
	r.threshold = dist::binomial_quantile(level / 100.0, tau, u);
	r.p_value = dist::binomial_upper_tail(m, tau, u);
	r.significant = m > r.threshold;
	return r;
}

/// Poisson(lambda) test of a single count; `sum_sq` feeds the Le Cam bound.
inline TieTestResult poisson_tie_test(int m, double lambda, double sum_sq, double level) {
	TieTestResult r;
	r.m = m;
	r.null_mean = lambda;
	r.lecam_bound = dist::lecam_bound(lambda, sum_sq);
	if (lambda <= 0.0) {
		r.threshold = 0;
		r.model_violation = m > 0;
		r.significant = m > 0;
		r.p_value = m > 0 ? 0.0 : 1.0;
		return r;
	}
	r.threshold = dist::poisson_quantile(level / 100.0, lambda);
	r.p_value = dist::poisson_upper_tail(m, lambda);
	r.significant = m > r.threshold;
	return r;
}

namespace detail {

inline std::size_t count_tested(WindowedCounts const& w, bool directed) {
	std::size_t tested = 0;
	CountMatrix const& m = directed ? w.directed_m : w.m;
	for (std::size_t i = 0; i < w.size(); ++i) {
		for (std::size_t j = directed ? 0 : i + 1; j < w.size(); ++j) {
			if (i != j && m(i, j) > 0) { ++tested; }
		}
	}
	return tested;
}

inline void check_match(WindowedCounts const& w, ActivityEstimate const& est) {
	if (est.size() != w.size()) { throw DataError("estimate does not match window bank count"); }
	if (is_directed(est.variant) && w.directed_m.size() != w.size()) { throw DataError("window carries no directed counts"); }
}

} // namespace detail

/// Binomial edge test under constant activities, over every pair with m >= 1.
inline std::vector<TieTestResult> edge_test_constant(WindowedCounts const& window, ActivityEstimate const& est, EdgeTestOptions const& opts = {}) {
	if (is_daily(est.variant)) { throw ConfigError("edge_test_constant needs a constant-activity estimate"); }
	detail::check_match(window, est);
	bool const dir = is_directed(est.variant);
	CountMatrix const& m = dir ? window.directed_m : window.m;
	double const level = effective_level(opts.level, opts.correction, detail::count_tested(window, dir));
	std::vector<TieTestResult> out;
	for (BankIndex i = 0; i < window.size(); ++i) {
		for (BankIndex j = dir ? 0 : i + 1; j < window.size(); ++j) {
			if (i == j || m(i, j) == 0) { continue; }
			auto r = binomial_tie_test(m(i, j), window.tau, est.u(i, j), level);
			r.i = i;
			r.j = j;
			r.variant = est.variant;
			r.correction = opts.correction;
			out.push_back(r);
		}
	}
	return out;
}

/// Poisson edge test under daily activities: m_ij against Poisson(sum_t u_ij(t)).
inline std::vector<TieTestResult> edge_test_daily(WindowedCounts const& window, ActivityEstimate const& est, EdgeTestOptions const& opts = {}) {
	if (!is_daily(est.variant)) { throw ConfigError("edge_test_daily needs a daily-activity estimate"); }
	detail::check_match(window, est);
	bool const dir = is_directed(est.variant);
	CountMatrix const& m = dir ? window.directed_m : window.m;
	double const level = effective_level(opts.level, opts.correction, detail::count_tested(window, dir));
	std::vector<TieTestResult> out;
	for (BankIndex i = 0; i < window.size(); ++i) {
		for (BankIndex j = dir ? 0 : i + 1; j < window.size(); ++j) {
			if (i == j || m(i, j) == 0) { continue; }
			double lambda = 0.0;
			double sum_sq = 0.0;
			for (std::size_t t = 0; t < est.days(); ++t) {
				double const u = est.u(t, i, j);
				lambda += u;
				sum_sq += u * u;
			}
			auto r = poisson_tie_test(m(i, j), lambda, sum_sq, level);
			r.i = i;
			r.j = j;
			r.variant = est.variant;
			r.correction = opts.correction;
			out.push_back(r);
		}
	}
	return out;
}

inline std::vector<TieTestResult> edge_test(WindowedCounts const& window, ActivityEstimate const& est, EdgeTestOptions const& opts = {}) {
	return is_daily(est.variant) ? edge_test_daily(window, est, opts) : edge_test_constant(window, est, opts);
}

/// undirected: all partners; borrowing: lenders to the bank; lending: borrowers from it.
enum class Direction { undirected, borrowing, lending };

inline std::string_view to_string(Direction d) noexcept {
	switch (d) {
	case Direction::undirected: return "undirected";
	case Direction::borrowing: return "borrowing";
	case Direction::lending: return "lending";
	}
	return "undirected";
}

struct NodeTestResult {
	BankIndex bank{};
	int degree{};	 ///< K_i, distinct partners in the window
	double lambda{}; ///< Poisson mean, sum_j p_ij
	int threshold{}; ///< K^{c'}: smallest k with CDF(k) >= c' / 100
	double cdf{};	 ///< Poisson CDF at K_i
	bool dependent = false;
	bool untestable = false; ///< lambda = 0
	double lecam_bound{};
	Direction direction = Direction::undirected;
};

/// Lower-tail Poisson test of an aggregate degree with link probabilities `p`.
inline NodeTestResult poisson_node_test(int degree, std::span<double const> p, double node_level) {
	if (!(node_level > 0.0 && node_level < 50.0)) { throw ConfigError("node-test percentile must lie in (0, 50)"); }
	NodeTestResult r;
	r.degree = degree;
	double sum_sq = 0.0;
	for (double v : p) {
		r.lambda += v;
		sum_sq += v * v;
	}
	r.lecam_bound = dist::lecam_bound(r.lambda, sum_sq);
	if (r.lambda <= 0.0) {
		r.untestable = true;
		r.cdf = 1.0;
		return r;
	}
	r.threshold = dist::poisson_quantile(node_level / 100.0, r.lambda);
	r.cdf = dist::poisson_cdf(degree, r.lambda);
	r.dependent = r.cdf <= node_level / 100.0;
	return r;
}

/// Node-based test for every bank of the window.
inline std::vector<NodeTestResult> node_test(WindowedCounts const& window, ActivityEstimate const& est, double node_level = 1.0,
											 Direction direction = Direction::undirected) {
	detail::check_match(window, est);
	bool const dir = is_directed(est.variant);
	if (dir == (direction == Direction::undirected)) { throw ConfigError("node-test direction does not match the estimate variant"); }
	std::size_t const n = window.size();
	std::vector<NodeTestResult> out;
	out.reserve(n);
	std::vector<double> p;
	for (BankIndex i = 0; i < n; ++i) {
		p.clear();
		int degree = 0;
		for (BankIndex j = 0; j < n; ++j) {
			if (i == j) { continue; }
			// (from, to) orientation of the link counted for bank i
			BankIndex const from = direction == Direction::borrowing ? j : i;
			BankIndex const to = direction == Direction::borrowing ? i : j;
			int const count = dir ? window.directed_m(from, to) : window.m(i, j);
			if (count > 0) { ++degree; }
			p.push_back(window_link_probability(est, from, to));
		}
		auto r = poisson_node_test(degree, p, node_level);
		r.bank = i;
		r.direction = direction;
		out.push_back(r);
	}
	return out;
}

struct ClassifyOptions {
	double level = 99.0;
	double node_level = 1.0;
	Correction correction = Correction::none;
	SolverOptions solver;
};

/// Per-window summary of both tests under one variant.
struct WindowClassification {
	std::size_t window_index{};
	Variant variant = Variant::undirected;
	Correction correction = Correction::none;
	std::size_t n_banks{};
	std::size_t n_ties{}; ///< tested pairs (count >= 1)
	std::size_t n_significant{};
	std::size_t n_untestable{};
	std::size_t n_violations{};
	double frac_significant{};
	std::size_t n_dependent{};	  ///< undirected node test
	std::size_t n_borrowing_dependent{};
	std::size_t n_lending_dependent{};
	double frac_dependent{};
	double frac_borrowing_dependent{};
	double frac_lending_dependent{};
	double m_empirical{};
	double m_expected{};
	double k_empirical{};
	double k_expected{};
	double mean_lecam_bound{};
	bool converged = false;
	double residual_norm{};
	ActivityEstimate estimate;
	std::vector<TieTestResult> ties;
	std::vector<NodeTestResult> nodes;
};

inline WindowClassification classify_window(WindowedCounts const& window, ActivityEstimate est, ClassifyOptions const& opts = {}) {
	WindowClassification c;
	c.window_index = window.index;
	c.variant = est.variant;
	c.correction = opts.correction;
	c.n_banks = window.size();
	c.converged = est.converged;
	c.residual_norm = est.residual_norm;
	bool const dir = is_directed(est.variant);

	c.ties = edge_test(window, est, {opts.level, opts.correction});
	c.n_ties = c.ties.size();
	for (auto const& t : c.ties) {
		c.n_significant += t.significant;
		c.n_untestable += t.untestable;
		c.n_violations += t.model_violation;
	}
	c.frac_significant = c.n_ties ? static_cast<double>(c.n_significant) / static_cast<double>(c.n_ties) : 0.0;

	if (dir) {
		c.nodes = node_test(window, est, opts.node_level, Direction::borrowing);
		auto lending = node_test(window, est, opts.node_level, Direction::lending);
		c.nodes.insert(c.nodes.end(), lending.begin(), lending.end());
	} else {
		c.nodes = node_test(window, est, opts.node_level, Direction::undirected);
	}
	double bound_sum = 0.0;
	for (auto const& r : c.nodes) {
		bound_sum += r.lecam_bound;
		if (!r.dependent) { continue; }
		switch (r.direction) {
		case Direction::undirected: ++c.n_dependent; break;
		case Direction::borrowing: ++c.n_borrowing_dependent; break;
		case Direction::lending: ++c.n_lending_dependent; break;
		}
	}
	c.mean_lecam_bound = c.nodes.empty() ? 0.0 : bound_sum / static_cast<double>(c.nodes.size());
	double const nb = c.n_banks ? static_cast<double>(c.n_banks) : 1.0;
	c.frac_dependent = static_cast<double>(c.n_dependent) / nb;
	c.frac_borrowing_dependent = static_cast<double>(c.n_borrowing_dependent) / nb;
	c.frac_lending_dependent = static_cast<double>(c.n_lending_dependent) / nb;

	if (dir) {
		long long total = 0;
		for (int v : window.directed_m.data()) { total += v; }
		c.m_empirical = static_cast<double>(total);
	} else {
		c.m_empirical = static_cast<double>(window.total_count());
	}
	c.m_expected = expected_edges(est);
	c.k_empirical = empirical_mean_degree(window, dir);
	c.k_expected = expected_mean_degree(est);
	c.estimate = std::move(est);
	return c;
}

/// Estimates activities under `variant`, then runs both tests.
inline WindowClassification classify_window(WindowedCounts const& window, Variant variant, ClassifyOptions const& opts = {}) {
	return classify_window(window, estimate(window, variant, opts.solver), opts);
}

} // namespace reltie
