// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <reltie/ingest.hpp>
#include <reltie/sigtest.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace reltie {

// ---------------------------------------------------------------------------
// tie sets

/// Unordered pairs with at least one significant verdict (either direction when directed), sorted.
inline std::vector<BankPair> significant_pairs(std::span<TieTestResult const> ties) {
	std::vector<BankPair> out;
	for (auto const& t : ties) {
		if (t.significant) { out.push_back(BankPair(t.i, t.j)); }
	}
	std::sort(out.begin(), out.end());
	out.erase(std::unique(out.begin(), out.end()), out.end());
	return out;
}

/// Unordered pairs with m >= 1, sorted.
inline std::vector<BankPair> tie_pairs(WindowedCounts const& w) {
	std::vector<BankPair> out;
	for (BankIndex i = 0; i < w.size(); ++i) {
		for (BankIndex j = i + 1; j < w.size(); ++j) {
			if (w.m(i, j) > 0) { out.push_back(BankPair(i, j)); }
		}
	}
	return out;
}

// ---------------------------------------------------------------------------
// duration spells

enum class SpellKind { significant, nonsignificant };

inline std::string_view to_string(SpellKind k) noexcept { return k == SpellKind::significant ? "significant" : "non-significant"; }

/// Verdicts of one window keyed by bank ids.
struct WindowTieLabels {
	std::size_t window_index{};
	WindowMode mode = WindowMode::fixed;
	std::map<PairKey, bool> significant; ///< every tie of the window
};

inline WindowTieLabels tie_labels(WindowedCounts const& w, std::span<TieTestResult const> ties) {
	WindowTieLabels out;
	out.window_index = w.index;
	out.mode = w.mode;
	for (auto const& t : ties) {
		auto& flag = out.significant[w.key(t.i, t.j)];
		flag = flag || t.significant;
	}
	return out;
}

struct DurationSpell {
	PairKey pair;
	SpellKind kind = SpellKind::significant;
	std::size_t start{}; ///< window index
	int length{};
	bool censored = false; ///< touches the first or last window
};

/// Maximal runs of equal verdicts per pair. A window where the pair is not a tie ends the run.
inline std::vector<DurationSpell> duration_spells(std::span<WindowTieLabels const> windows) {
	for (std::size_t k = 0; k < windows.size(); ++k) {
		if (windows[k].mode == WindowMode::rolling) { throw ConfigError("duration spells need non-overlapping (fixed) windows"); }
		if (k > 0 && windows[k].window_index != windows[k - 1].window_index + 1) { throw ConfigError("windows are not contiguous"); }
	}
	std::vector<DurationSpell> out;
	if (windows.empty()) { return out; }
	std::size_t const first = windows.front().window_index;
	std::size_t const last = windows.back().window_index;
	std::map<PairKey, DurationSpell> open;
	auto close = [&](DurationSpell s) {
		s.censored = s.start == first || s.start + static_cast<std::size_t>(s.length) - 1 == last;
		out.push_back(std::move(s));
	};
	for (auto const& w : windows) {
		for (auto it = open.begin(); it != open.end();) {
			auto const found = w.significant.find(it->first);
			SpellKind const now = found == w.significant.end() ? it->second.kind
								  : found->second			  ? SpellKind::significant
															  : SpellKind::nonsignificant;
			if (found == w.significant.end() || now != it->second.kind) {
				close(it->second);
				it = open.erase(it);
			} else {
				++it->second.length;
				++it;
			}
		}
		for (auto const& [key, sig] : w.significant) {
			if (open.contains(key)) { continue; }
			open.emplace(key, DurationSpell{key, sig ? SpellKind::significant : SpellKind::nonsignificant, w.window_index, 1, false});
		}
	}
	for (auto& [key, s] : open) { close(std::move(s)); }
	std::sort(out.begin(), out.end(), [](DurationSpell const& a, DurationSpell const& b) {
		if (a.pair != b.pair) { return a.pair < b.pair; }
		return a.start < b.start;
	});
	return out;
}

/// Lengths of spells of one kind; censored spells only when asked.
inline std::vector<int> spell_lengths(std::span<DurationSpell const> spells, SpellKind kind, bool include_censored = false) {
	std::vector<int> out;
	for (auto const& s : spells) {
		if (s.kind == kind && (include_censored || !s.censored)) { out.push_back(s.length); }
	}
	return out;
}

/// Points (d, P(D >= d)) of the empirical complementary CDF.
inline std::vector<std::pair<int, double>> empirical_ccdf(std::vector<int> d) {
	std::vector<std::pair<int, double>> out;
	std::sort(d.begin(), d.end());
	double const n = static_cast<double>(d.size());
	for (std::size_t k = 0; k < d.size(); ++k) {
		if (k == 0 || d[k] != d[k - 1]) { out.emplace_back(d[k], static_cast<double>(d.size() - k) / n); }
	}
	return out;
}

// ---------------------------------------------------------------------------
// power-law durations

/// Hurwitz zeta sum_{k>=0} (q + k)^{-s}, s > 1, q > 0, by Euler-Maclaurin summation.
inline double hurwitz_zeta(double s, double q) {
	if (!(s > 1.0) || !(q > 0.0)) { throw ConfigError("hurwitz zeta needs s > 1 and q > 0"); }
	static constexpr double b2k[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6, -3617.0 / 510};
	constexpr int terms = 16;
	long double sum = 0.0L;
	for (int k = 0; k < terms; ++k) { sum += std::pow(static_cast<long double>(q) + k, -static_cast<long double>(s)); }
	long double const a = static_cast<long double>(q) + terms;
	sum += std::pow(a, 1.0L - s) / (s - 1.0L) + 0.5L * std::pow(a, -static_cast<long double>(s));
	// sum_j B_2j / (2j)! * s (s+1) ... (s+2j-2) * a^{-s-2j+1}
	long double rising = s;
	long double factorial = 2.0L;
	long double power = std::pow(a, -static_cast<long double>(s) - 1.0L);
	for (int j = 1; j <= 8; ++j) {
		sum += b2k[j - 1] / factorial * rising * power;
		rising *= (s + 2.0L * j - 1.0L) * (s + 2.0L * j);
		factorial *= (2.0L * j + 1.0L) * (2.0L * j + 2.0L);
		power /= a * a;
	}
	return static_cast<double>(sum);
}

struct PowerLawFit {
	double gamma{};		   ///< exponent of P(d) ∝ d^{-gamma}, d >= d_min
	double std_error{};	   ///< (gamma - 1) / sqrt(n)
	double gamma_approx{}; ///< 1 + n / sum ln(d / (d_min - 1/2))
	std::size_t n{};	   ///< observations >= d_min
	int d_min = 1;
	double ks{}; ///< max |empirical - fitted| CDF distance on the tail
	bool small_sample = false;
	/// Hazard lambda(d) = gamma / d.
	double hazard(double d) const noexcept { return gamma / d; }
};

namespace detail {

inline double powerlaw_loglik(double gamma, double n, double sum_log, int d_min) {
	return -n * std::log(hurwitz_zeta(gamma, d_min)) - gamma * sum_log;
}

inline double powerlaw_ks(std::vector<int> tail, double gamma, int d_min) {
	std::sort(tail.begin(), tail.end());
	double const z = hurwitz_zeta(gamma, d_min);
	double const n = static_cast<double>(tail.size());
	double ks = 0.0;
	for (std::size_t k = 0; k < tail.size(); ++k) {
		if (k + 1 < tail.size() && tail[k + 1] == tail[k]) { continue; }
		double const empirical = static_cast<double>(k + 1) / n;
		double const model = 1.0 - hurwitz_zeta(gamma, tail[k] + 1.0) / z;
		ks = std::max(ks, std::abs(empirical - model));
	}
	return ks;
}

} // namespace detail

/// Discrete power-law exponent by exact maximum likelihood on durations >= d_min.
/// The log-likelihood -n ln zeta(gamma, d_min) - gamma sum ln d is concave in gamma.
inline PowerLawFit powerlaw_exponent(std::span<int const> durations, int d_min = 1) {
	if (d_min < 1) { throw ConfigError("d_min must be at least 1"); }
	std::vector<int> tail;
	for (int d : durations) {
		if (d < 1) { throw DataError("durations must be positive"); }
		if (d >= d_min) { tail.push_back(d); }
	}
	if (tail.size() < 2) { throw DataError("power-law fit needs at least two durations >= d_min"); }
	if (std::all_of(tail.begin(), tail.end(), [&](int d) { return d == tail.front(); })) {
		throw DataError("all durations equal; power-law exponent is degenerate");
	}
	PowerLawFit fit;
	fit.d_min = d_min;
	fit.n = tail.size();
	fit.small_sample = tail.size() < 10;
	double const n = static_cast<double>(tail.size());
	double sum_log = 0.0;
	double sum_log_shift = 0.0;
	for (int d : tail) {
		sum_log += std::log(static_cast<double>(d));
		sum_log_shift += std::log(d / (d_min - 0.5));
	}
	fit.gamma_approx = 1.0 + n / sum_log_shift;

	// golden-section search on the concave log-likelihood
	double lo = 1.0 + 1e-9;
	double hi = std::max(2.0 * fit.gamma_approx, 10.0);
	auto f = [&](double g) { return detail::powerlaw_loglik(g, n, sum_log, d_min); };
	double const phi = (std::sqrt(5.0) - 1.0) / 2.0;
	double x1 = hi - phi * (hi - lo);
	double x2 = lo + phi * (hi - lo);
	double f1 = f(x1);
	double f2 = f(x2);
	while (hi - lo > 1e-10) {
		if (f1 < f2) {
			lo = x1;
			x1 = x2;
			f1 = f2;
			x2 = lo + phi * (hi - lo);
			f2 = f(x2);
		} else {
			hi = x2;
			x2 = x1;
			f2 = f1;
			x1 = hi - phi * (hi - lo);
			f1 = f(x1);
		}
	}
	fit.gamma = 0.5 * (lo + hi);
	fit.std_error = (fit.gamma - 1.0) / std::sqrt(n);
	fit.ks = detail::powerlaw_ks(tail, fit.gamma, d_min);
	return fit;
}

/// Fits every candidate d_min (distinct values leaving >= min_tail observations) and keeps the smallest KS distance.
inline PowerLawFit powerlaw_scan(std::span<int const> durations, std::size_t min_tail = 10) {
	std::vector<int> values(durations.begin(), durations.end());
	std::sort(values.begin(), values.end());
	std::vector<int> candidates;
	for (std::size_t k = 0; k < values.size(); ++k) {
		if ((k == 0 || values[k] != values[k - 1]) && values.size() - k >= min_tail) { candidates.push_back(values[k]); }
	}
	PowerLawFit best;
	bool found = false;
	for (int d_min : candidates) {
		PowerLawFit fit;
		try {
			fit = powerlaw_exponent(durations, d_min);
		} catch (DataError const&) {
			continue;
		}
		if (!found || fit.ks < best.ks) {
			best = fit;
			found = true;
		}
	}
	if (!found) { throw DataError("no admissible d_min for the power-law fit"); }
	return best;
}

// ---------------------------------------------------------------------------
// triangle census

struct TriangleCensus {
	long long total{};
	std::array<long long, 4> by_significant{}; ///< T_0 .. T_3
	double p_nonsig = std::numeric_limits<double>::quiet_NaN(); ///< T_2 / (T_2 + T_3)
	double s_nonsig = std::numeric_limits<double>::quiet_NaN(); ///< non-significant ties / ties
};

namespace detail {

/// tr(A^3) for a symmetric integer matrix.
inline long long trace_cube(SquareMatrix<int> const& a) {
	std::size_t const n = a.size();
	long long trace = 0;
	std::vector<long long> row(n);
	for (std::size_t i = 0; i < n; ++i) {
		// row i of A^2
		std::fill(row.begin(), row.end(), 0);
		for (std::size_t k = 0; k < n; ++k) {
			if (a(i, k) == 0) { continue; }
			for (std::size_t j = 0; j < n; ++j) { row[j] += static_cast<long long>(a(i, k)) * a(k, j); }
		}
		for (std::size_t j = 0; j < n; ++j) { trace += row[j] * a(j, i); }
	}
	return trace;
}

} // namespace detail

/// Triangle counts by number of significant sides, from four trace identities.
inline TriangleCensus triangle_census(SquareMatrix<int> const& adjacency, std::span<BankPair const> significant) {
	std::size_t const n = adjacency.size();
	for (std::size_t i = 0; i < n; ++i) {
		if (adjacency(i, i) != 0) { throw DataError("adjacency has a nonzero diagonal"); }
		for (std::size_t j = 0; j < n; ++j) {
			int const v = adjacency(i, j);
			if ((v != 0 && v != 1) || v != adjacency(j, i)) { throw DataError("adjacency must be symmetric 0/1"); }
		}
	}
	SquareMatrix<int> sig(n);
	for (auto const [i, j] : significant) {
		if (i >= n || j >= n || adjacency(i, j) == 0) { throw DataError("significant tie is not an edge of the network"); }
		sig(i, j) = sig(j, i) = 1;
	}
	SquareMatrix<int> nonsig(n);
	SquareMatrix<int> sign(n);
	long long edges = 0;
	long long sig_edges = 0;
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t j = 0; j < n; ++j) {
			nonsig(i, j) = adjacency(i, j) - sig(i, j);
			sign(i, j) = sig(i, j) - nonsig(i, j);
			if (i < j) {
				edges += adjacency(i, j);
				sig_edges += sig(i, j);
			}
		}
	}
	TriangleCensus c;
	c.total = detail::trace_cube(adjacency) / 6;
	long long const t3 = detail::trace_cube(sig) / 6;
	long long const t0 = detail::trace_cube(nonsig) / 6;
	long long const signed_total = detail::trace_cube(sign) / 6; // T3 - T2 + T1 - T0
	long long const t1 = (c.total - 2 * t3 + signed_total) / 2;
	c.by_significant = {t0, t1, c.total - t0 - t1 - t3, t3};
	if (c.by_significant[2] + t3 > 0) { c.p_nonsig = static_cast<double>(c.by_significant[2]) / static_cast<double>(c.by_significant[2] + t3); }
	if (edges > 0) { c.s_nonsig = static_cast<double>(edges - sig_edges) / static_cast<double>(edges); }
	return c;
}

/// Census of the window's aggregate network.
inline TriangleCensus triangle_census(WindowedCounts const& w, std::span<BankPair const> significant) {
	SquareMatrix<int> a(w.size());
	for (std::size_t i = 0; i < w.size(); ++i) {
		for (std::size_t j = 0; j < w.size(); ++j) { a(i, j) = w.m(i, j) > 0 ? 1 : 0; }
	}
	return triangle_census(a, significant);
}

// ---------------------------------------------------------------------------
// baseline measures

struct PairScore {
	BankPair pair;
	int m{};
	double score{};
	bool defined = true;
};

/// RL = log(1 + m) for every tie.
inline std::vector<PairScore> rl_measure(WindowedCounts const& w) {
	std::vector<PairScore> out;
	for (auto const p : tie_pairs(w)) {
		int const m = w.m(p.lo, p.hi);
		out.push_back({p, m, std::log1p(static_cast<double>(m)), true});
	}
	return out;
}

/// Pair volume over the window.
inline SquareMatrix<double> window_volumes(WindowedCounts const& w) {
	SquareMatrix<double> v(w.size());
	for (auto const& day : w.days) {
		for (auto const& e : day.edges) {
			v(e.u, e.v) += e.volume;
			v(e.v, e.u) += e.volume;
		}
	}
	return v;
}

/// shares(i, j): fraction of bank i's window volume traded with j. Rows of zero-volume banks are NaN.
inline SquareMatrix<double> lpi_shares(WindowedCounts const& w) {
	auto const v = window_volumes(w);
	SquareMatrix<double> s(w.size());
	for (std::size_t i = 0; i < w.size(); ++i) {
		double total = 0.0;
		for (std::size_t j = 0; j < w.size(); ++j) { total += v(i, j); }
		for (std::size_t j = 0; j < w.size(); ++j) { s(i, j) = total > 0.0 ? v(i, j) / total : std::numeric_limits<double>::quiet_NaN(); }
	}
	return s;
}

/// Pair-level LPI: the larger of the two endpoint shares. Undefined when either endpoint has no volume.
inline std::vector<PairScore> lpi_measure(WindowedCounts const& w) {
	auto const s = lpi_shares(w);
	std::vector<PairScore> out;
	for (auto const p : tie_pairs(w)) {
		double const a = s(p.lo, p.hi);
		double const b = s(p.hi, p.lo);
		bool const defined = !std::isnan(a) && !std::isnan(b);
		out.push_back({p, w.m(p.lo, p.hi), defined ? std::max(a, b) : std::numeric_limits<double>::quiet_NaN(), defined});
	}
	return out;
}

inline double jaccard(std::vector<BankPair> a, std::vector<BankPair> b) {
	std::sort(a.begin(), a.end());
	std::sort(b.begin(), b.end());
	std::vector<BankPair> common;
	std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
	std::size_t const uni = a.size() + b.size() - common.size();
	return uni ? static_cast<double>(common.size()) / static_cast<double>(uni) : 1.0;
}

struct JaccardResult {
	double j = std::numeric_limits<double>::quiet_NaN();
	bool defined = false;
	std::vector<BankPair> top; ///< the measure's top |significant| pairs
};

/// Jaccard index between the measure's top-|significant| pairs and the significant set.
/// Order: score descending, then m descending, then pair ids. Undefined scores rank last.
inline JaccardResult jaccard_vs_truth(WindowedCounts const& w, std::vector<PairScore> scores, std::span<BankPair const> significant) {
	JaccardResult r;
	if (significant.empty()) { return r; }
	std::sort(scores.begin(), scores.end(), [&](PairScore const& a, PairScore const& b) {
		if (a.defined != b.defined) { return a.defined; }
		if (a.defined && a.score != b.score) { return a.score > b.score; }
		if (a.m != b.m) { return a.m > b.m; }
		return w.key(a.pair.lo, a.pair.hi) < w.key(b.pair.lo, b.pair.hi);
	});
	std::size_t const k = std::min(significant.size(), scores.size());
	for (std::size_t t = 0; t < k; ++t) { r.top.push_back(scores[t].pair); }
	r.j = jaccard(r.top, {significant.begin(), significant.end()});
	r.defined = true;
	return r;
}

// ---------------------------------------------------------------------------
// rates and loan sizes

struct PairRate {
	BankPair pair;
	int m{};
	double rate{};		  ///< volume-weighted detrended rate, percentage points
	double mean_amount{}; ///< window volume / m
	bool significant = false;
};

/// Significant minus non-significant group means with a two-sample normal 95% interval.
struct GroupDifference {
	std::size_t n_significant{};
	std::size_t n_nonsignificant{};
	double mean_significant = std::numeric_limits<double>::quiet_NaN();
	double mean_nonsignificant = std::numeric_limits<double>::quiet_NaN();
	double difference = std::numeric_limits<double>::quiet_NaN();
	double std_error = std::numeric_limits<double>::quiet_NaN();
	double ci_low = std::numeric_limits<double>::quiet_NaN();
	double ci_high = std::numeric_limits<double>::quiet_NaN();
	bool defined = false; ///< both groups have >= 2 pairs
	bool covers(double x) const noexcept { return defined && ci_low <= x && x <= ci_high; }
};

struct RateComparison {
	std::vector<double> market_rate; ///< per window day; NaN when no volume
	std::vector<PairRate> pairs;
	GroupDifference rate;
	GroupDifference amount;
};

/// Volume-weighted mean rate of the day, NaN on a day without volume.
inline double market_mean_rate(WindowDay const& day) {
	double rv = 0.0;
	double v = 0.0;
	for (auto const& e : day.edges) {
		rv += e.rate_volume;
		v += e.volume;
	}
	return v > 0.0 ? rv / v : std::numeric_limits<double>::quiet_NaN();
}

inline GroupDifference group_difference(std::span<double const> sig, std::span<double const> nonsig) {
	GroupDifference g;
	g.n_significant = sig.size();
	g.n_nonsignificant = nonsig.size();
	auto moments = [](std::span<double const> x, double& mean, double& var) {
		mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
		double ss = 0.0;
		for (double v : x) { ss += (v - mean) * (v - mean); }
		var = x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : std::numeric_limits<double>::quiet_NaN();
	};
	double var_s = 0.0;
	double var_n = 0.0;
	if (!sig.empty()) { moments(sig, g.mean_significant, var_s); }
	if (!nonsig.empty()) { moments(nonsig, g.mean_nonsignificant, var_n); }
	if (sig.size() < 2 || nonsig.size() < 2) { return g; }
	g.difference = g.mean_significant - g.mean_nonsignificant;
	g.std_error = std::sqrt(var_s / static_cast<double>(sig.size()) + var_n / static_cast<double>(nonsig.size()));
	double constexpr z = 1.959963984540054;
	g.ci_low = g.difference - z * g.std_error;
	g.ci_high = g.difference + z * g.std_error;
	g.defined = true;
	return g;
}

/// Detrended rates and average loan sizes of every tie, split by the significant set.
inline RateComparison detrended_rates(WindowedCounts const& w, std::span<BankPair const> significant) {
	RateComparison out;
	std::size_t const n = w.size();
	SquareMatrix<double> weighted(n);
	SquareMatrix<double> volume(n);
	for (auto const& day : w.days) {
		double const mean = market_mean_rate(day);
		out.market_rate.push_back(mean);
		if (std::isnan(mean)) { continue; }
		for (auto const& e : day.edges) {
			weighted(e.u, e.v) += (e.rate() - mean) * e.volume;
			volume(e.u, e.v) += e.volume;
		}
	}
	std::vector<BankPair> sig(significant.begin(), significant.end());
	std::sort(sig.begin(), sig.end());
	std::vector<double> rate_s, rate_n, amount_s, amount_n;
	for (auto const p : tie_pairs(w)) {
		if (!(volume(p.lo, p.hi) > 0.0)) { continue; }
		PairRate r;
		r.pair = p;
		r.m = w.m(p.lo, p.hi);
		r.rate = weighted(p.lo, p.hi) / volume(p.lo, p.hi);
		r.mean_amount = volume(p.lo, p.hi) / r.m;
		r.significant = std::binary_search(sig.begin(), sig.end(), p);
		(r.significant ? rate_s : rate_n).push_back(r.rate);
		(r.significant ? amount_s : amount_n).push_back(r.mean_amount);
		out.pairs.push_back(r);
	}
	out.rate = group_difference(rate_s, rate_n);
	out.amount = group_difference(amount_s, amount_n);
	return out;
}

// ---------------------------------------------------------------------------
// nationality

enum class NationalityMix { domestic_domestic = 0, domestic_foreign = 1, foreign_foreign = 2 };

struct NationalityShares {
	std::size_t n_ties{};
	std::size_t n_significant{};
	std::array<double, 3> all{};		 ///< indexed by NationalityMix
	std::array<double, 3> among_significant{};
	std::size_t n_dependent{};
	double domestic_among_dependent = std::numeric_limits<double>::quiet_NaN();
	std::size_t unknown_codes{}; ///< banks without a readable code, counted as foreign
};

/// Nationality mix of ties and significant ties; dependent banks from any node-test direction.
/// `banks` maps the indices used by `ties` and `nodes` to bank ids.
inline NationalityShares nationality_groups(std::span<std::string const> banks, std::span<TieTestResult const> ties,
											std::span<NodeTestResult const> nodes, std::string const& home = "IT") {
	NationalityShares s;
	std::vector<bool> domestic(banks.size());
	for (std::size_t k = 0; k < banks.size(); ++k) {
		auto const cc = country_code(banks[k]);
		s.unknown_codes += !cc.known;
		domestic[k] = cc.known && cc.code == home;
	}
	std::map<BankPair, bool> pairs;
	for (auto const& t : ties) {
		auto& flag = pairs[BankPair(t.i, t.j)];
		flag = flag || t.significant;
	}
	std::array<std::size_t, 3> all{};
	std::array<std::size_t, 3> sig{};
	for (auto const& [p, significant] : pairs) {
		int const mix = 2 - static_cast<int>(domestic[p.lo]) - static_cast<int>(domestic[p.hi]);
		++all[mix];
		if (significant) { ++sig[mix]; }
	}
	s.n_ties = pairs.size();
	for (std::size_t k = 0; k < 3; ++k) { s.n_significant += sig[k]; }
	for (std::size_t k = 0; k < 3; ++k) {
		s.all[k] = s.n_ties ? static_cast<double>(all[k]) / static_cast<double>(s.n_ties) : 0.0;
		s.among_significant[k] = s.n_significant ? static_cast<double>(sig[k]) / static_cast<double>(s.n_significant) : 0.0;
	}
	std::vector<BankIndex> dependent;
	for (auto const& r : nodes) {
		if (r.dependent) { dependent.push_back(r.bank); }
	}
	std::sort(dependent.begin(), dependent.end());
	dependent.erase(std::unique(dependent.begin(), dependent.end()), dependent.end());
	s.n_dependent = dependent.size();
	if (!dependent.empty()) {
		std::size_t dom = 0;
		for (auto b : dependent) { dom += domestic[b]; }
		s.domestic_among_dependent = static_cast<double>(dom) / static_cast<double>(dependent.size());
	}
	return s;
}

inline NationalityShares nationality_groups(WindowedCounts const& w, std::span<TieTestResult const> ties, std::span<NodeTestResult const> nodes,
											std::string const& home = "IT") {
	return nationality_groups(std::span<std::string const>(w.banks), ties, nodes, home);
}

} // namespace reltie
