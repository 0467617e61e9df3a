// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <reltie/fitness.hpp>
#include <reltie/ingest.hpp>
#include <reltie/parallel.hpp>
#include <reltie/random.hpp>
#include <reltie/sigtest.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

namespace reltie {

/// Core-periphery daily network with planted relationship pairs.
/// A relationship pair without a base edge on day t trades with probability
/// 1 - b0 / (b1 + b2 D), D being its run of consecutive trading days up to t - 1.
struct SyntheticConfig {
	int n_banks = 100;
	double core_fraction = 0.5;
	double p_core_core = 0.06;
	double p_core_periphery = 0.03;
	double relationship_fraction = 0.2;
	double b0 = 1.0;
	double b1 = 1.0;
	double b2 = 0.0;
	int burn_in = 2990;
	int tau = 10;
	int n_windows = 1; ///< evaluation days = tau * n_windows
	std::uint64_t seed = 1;

	// transaction marks
	double base_rate = 3.0;		  ///< percent
	double rate_walk_sd = 0.02;	  ///< daily market-rate innovation
	double rate_noise_sd = 0.05;  ///< idiosyncratic spread per loan
	double relationship_premium = 0.0; ///< added to loans of planted pairs, percent
	double log_amount_mean = 3.0;
	double log_amount_sd = 1.0;
	double foreign_fraction = 0.0; ///< banks labelled with a non-home country code
	std::string home_country = "IT";

	int eval_days() const noexcept { return tau * n_windows; }
	/// No-relationship probability at run length d.
	double p_norel(int d) const noexcept { return b0 / (b1 + b2 * d); }

	void validate() const {
		auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
		if (n_banks < 2) { throw ConfigError("need at least two banks"); }
		if (!prob(core_fraction) || !prob(relationship_fraction)) { throw ConfigError("fractions must lie in [0, 1]"); }
		if (!prob(p_core_core) || !prob(p_core_periphery)) { throw ConfigError("edge probabilities must lie in [0, 1]"); }
		if (!prob(foreign_fraction)) { throw ConfigError("foreign fraction must lie in [0, 1]"); }
		if (!(b0 >= 0.0) || !(b1 > 0.0) || !(b2 >= 0.0)) { throw ConfigError("hazard needs b0 >= 0, b1 > 0, b2 >= 0"); }
		if (b0 > b1) { throw ConfigError("hazard needs b0 <= b1"); }
		if (burn_in < 0 || tau < 1 || n_windows < 1) { throw ConfigError("burn-in, tau and window count out of range"); }
		if (!(rate_walk_sd >= 0.0) || !(rate_noise_sd >= 0.0) || !(log_amount_sd >= 0.0)) { throw ConfigError("negative dispersion"); }
		if (home_country.size() != 2) { throw ConfigError("home country must be a two-letter code"); }
	}
};

struct SyntheticSample {
	SyntheticConfig config;
	DailySeries series; ///< evaluation days only; bank k of the series is bank k of the generator
	std::vector<bool> is_core;
	std::vector<BankPair> relationship_pairs; ///< sorted
	/// runs[p][t]: consecutive trading days of relationship pair p ending at evaluation day t.
	std::vector<std::vector<int>> runs;
	std::vector<TransactionRecord> transactions; ///< one loan per edge per day
};

namespace detail {

inline std::string bank_id(std::string const& code, int k) {
	char buf[16];
	std::snprintf(buf, sizeof buf, "%04d", k);
	return code + buf;
}

inline std::vector<std::string> synthetic_ids(SyntheticConfig const& cfg) {
	static constexpr char const* foreign[] = {"DE", "FR", "GB", "NL", "ES", "AT", "BE", "GR"};
	Rng rng(sub_seed(cfg.seed, 5));
	std::vector<std::string> ids;
	ids.reserve(cfg.n_banks);
	for (int k = 0; k < cfg.n_banks; ++k) {
		std::string code = cfg.home_country;
		if (rng.bernoulli(cfg.foreign_fraction)) {
			code = foreign[rng.below(std::size(foreign))];
			if (code == cfg.home_country) { code = "XX"; }
		}
		ids.push_back(bank_id(code, k));
	}
	// index order follows id order, as for ingested data
	std::sort(ids.begin(), ids.end());
	return ids;
}

} // namespace detail

/// Draws one sample. Only the relationship pairs are simulated through burn-in, since
/// every other pair is independent across days; with b2 = 0 the hazard is memoryless
/// and burn-in is skipped.
inline SyntheticSample generate(SyntheticConfig const& cfg) {
	cfg.validate();
	int const n = cfg.n_banks;
	int const n_core = static_cast<int>(std::lround(cfg.core_fraction * n));
	int const days = cfg.eval_days();

	SyntheticSample s;
	s.config = cfg;
	s.is_core.assign(n, false);
	for (int k = 0; k < n_core; ++k) { s.is_core[k] = true; }
	auto p_class = [&](int i, int j) {
		bool const ci = s.is_core[i];
		bool const cj = s.is_core[j];
		if (ci && cj) { return cfg.p_core_core; }
		if (ci || cj) { return cfg.p_core_periphery; }
		return 0.0;
	};

	// 1. base edges of the evaluation days, pairs in lexicographic order
	Rng base_rng(sub_seed(cfg.seed, 1));
	std::vector<std::vector<BankPair>> base(days);
	for (int t = 0; t < days; ++t) {
		for (int i = 0; i < n; ++i) {
			for (int j = i + 1; j < n; ++j) {
				double const p = p_class(i, j);
				if (p > 0.0 && base_rng.bernoulli(p)) { base[t].push_back(BankPair(i, j)); }
			}
		}
	}

	// 2. relationship pairs among pairs with a base trade in the first evaluation window
	Rng rel_rng(sub_seed(cfg.seed, 2));
	std::vector<BankPair> candidates;
	for (int t = 0; t < cfg.tau; ++t) { candidates.insert(candidates.end(), base[t].begin(), base[t].end()); }
	std::sort(candidates.begin(), candidates.end());
	candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
	auto const n_rel = static_cast<std::size_t>(std::lround(cfg.relationship_fraction * static_cast<double>(candidates.size())));
	for (std::size_t k = 0; k < n_rel; ++k) {
		std::size_t const pick = k + rel_rng.below(candidates.size() - k);
		std::swap(candidates[k], candidates[pick]);
	}
	s.relationship_pairs.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n_rel));
	std::sort(s.relationship_pairs.begin(), s.relationship_pairs.end());

	// 3. hazard dynamics of relationship pairs
	Rng hazard_rng(sub_seed(cfg.seed, 3));
	std::vector<int> run(n_rel, 0);
	if (cfg.b2 > 0.0 && n_rel > 0) {
		for (int t = 0; t < cfg.burn_in; ++t) {
			for (std::size_t k = 0; k < n_rel; ++k) {
				auto const [i, j] = s.relationship_pairs[k];
				bool traded = hazard_rng.bernoulli(p_class(static_cast<int>(i), static_cast<int>(j)));
				if (!traded) { traded = hazard_rng.bernoulli(1.0 - cfg.p_norel(run[k])); }
				run[k] = traded ? run[k] + 1 : 0;
			}
		}
	}
	std::vector<std::vector<BankPair>> edges(days);
	s.runs.assign(n_rel, std::vector<int>(days, 0));
	for (int t = 0; t < days; ++t) {
		auto& today = edges[t];
		today = base[t];
		for (std::size_t k = 0; k < n_rel; ++k) {
			auto const pair = s.relationship_pairs[k];
			bool traded = std::binary_search(base[t].begin(), base[t].end(), pair);
			if (!traded && hazard_rng.bernoulli(1.0 - cfg.p_norel(run[k]))) {
				traded = true;
				today.push_back(pair);
			}
			run[k] = traded ? run[k] + 1 : 0;
			s.runs[k][t] = run[k];
		}
		std::sort(today.begin(), today.end());
	}

	// 4. marks and assembly
	Rng mark_rng(sub_seed(cfg.seed, 4));
	s.series.banks = detail::synthetic_ids(cfg);
	auto const start = std::chrono::sys_days{std::chrono::year{2000} / 1 / 3} + std::chrono::days{cfg.burn_in};
	double market = cfg.base_rate;
	for (int t = 0; t < days; ++t) {
		market += cfg.rate_walk_sd * mark_rng.normal();
		Date const date{start + std::chrono::days{t}};
		DailySnapshot snap{date, {}};
		snap.edges.reserve(edges[t].size());
		for (auto const pair : edges[t]) {
			bool const forward = mark_rng.bernoulli(0.5);
			double rate = market + cfg.rate_noise_sd * mark_rng.normal();
			if (std::binary_search(s.relationship_pairs.begin(), s.relationship_pairs.end(), pair)) { rate += cfg.relationship_premium; }
			double const amount = std::exp(cfg.log_amount_mean + cfg.log_amount_sd * mark_rng.normal());
			DayEdge e;
			e.u = pair.lo;
			e.v = pair.hi;
			e.trades = 1;
			e.forward_trades = forward ? 1 : 0;
			e.backward_trades = forward ? 0 : 1;
			e.volume = amount;
			e.rate_volume = rate * amount;
			snap.edges.push_back(e);
			TransactionRecord r;
			r.date = date;
			r.time_of_day = 12 * 3600;
			r.lender = s.series.banks[forward ? pair.lo : pair.hi];
			r.borrower = s.series.banks[forward ? pair.hi : pair.lo];
			r.maturity = "ON";
			r.rate = rate;
			r.amount = amount;
			s.transactions.push_back(std::move(r));
		}
		s.series.days.push_back(std::move(snap));
	}
	return s;
}

/// Planted pairs of a window, in local indices; pairs with an inactive endpoint are skipped.
inline std::vector<BankPair> planted_in_window(SyntheticSample const& s, WindowedCounts const& w) {
	std::vector<BankPair> out;
	for (auto const [i, j] : s.relationship_pairs) {
		auto const pi = std::lower_bound(w.banks.begin(), w.banks.end(), s.series.banks[i]);
		auto const pj = std::lower_bound(w.banks.begin(), w.banks.end(), s.series.banks[j]);
		if (pi == w.banks.end() || *pi != s.series.banks[i] || pj == w.banks.end() || *pj != s.series.banks[j]) { continue; }
		out.push_back(BankPair(static_cast<BankIndex>(pi - w.banks.begin()), static_cast<BankIndex>(pj - w.banks.begin())));
	}
	std::sort(out.begin(), out.end());
	return out;
}

// ---------------------------------------------------------------------------
// power experiment

struct PowerGridPoint {
	std::string label;
	SyntheticConfig config;
};

struct ReplicationOutcome {
	std::uint64_t seed{};
	std::size_t n_ties{};
	std::size_t n_planted{};
	std::size_t n_significant{};
	std::size_t true_positives{};
	bool converged = false;

	double fraction() const noexcept { return n_ties ? static_cast<double>(n_significant) / static_cast<double>(n_ties) : 0.0; }
	double recall() const noexcept { return n_planted ? static_cast<double>(true_positives) / static_cast<double>(n_planted) : 0.0; }
	/// (TP + TN) / ties
	double accuracy() const noexcept {
		if (!n_ties) { return 0.0; }
		std::size_t const tn = n_ties - n_planted - (n_significant - true_positives);
		return static_cast<double>(true_positives + tn) / static_cast<double>(n_ties);
	}
};

struct PowerSummary {
	std::string label;
	Correction correction = Correction::none;
	int replications{};
	double mean_fraction{};
	double sd_fraction{};
	double q05{};
	double q50{};
	double q95{};
	double mean_precision{}; ///< over replications with at least one detection
	double mean_recall{};
	double mean_accuracy{};
	std::size_t nonconverged{};
	std::vector<ReplicationOutcome> runs;
};

struct PowerOptions {
	int replications = 100;
	double level = 99.0;
	std::vector<Correction> corrections{Correction::none, Correction::bonferroni};
	unsigned jobs = 1;
	SolverOptions solver;
};

/// Sample quantile by linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
	if (v.empty()) { return 0.0; }
	std::sort(v.begin(), v.end());
	double const h = q * static_cast<double>(v.size() - 1);
	auto const lo = static_cast<std::size_t>(std::floor(h));
	std::size_t const hi = std::min(lo + 1, v.size() - 1);
	return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline PowerSummary summarize(std::string label, Correction correction, std::vector<ReplicationOutcome> runs) {
	PowerSummary s;
	s.label = std::move(label);
	s.correction = correction;
	s.replications = static_cast<int>(runs.size());
	std::vector<double> fr;
	double precision = 0.0;
	std::size_t with_detection = 0;
	for (auto const& r : runs) {
		fr.push_back(r.fraction());
		s.mean_recall += r.recall();
		s.mean_accuracy += r.accuracy();
		s.nonconverged += !r.converged;
		if (r.n_significant) {
			precision += static_cast<double>(r.true_positives) / static_cast<double>(r.n_significant);
			++with_detection;
		}
	}
	double const n = runs.empty() ? 1.0 : static_cast<double>(runs.size());
	s.mean_fraction = std::accumulate(fr.begin(), fr.end(), 0.0) / n;
	double ss = 0.0;
	for (double f : fr) { ss += (f - s.mean_fraction) * (f - s.mean_fraction); }
	s.sd_fraction = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
	s.q05 = quantile(fr, 0.05);
	s.q50 = quantile(fr, 0.50);
	s.q95 = quantile(fr, 0.95);
	s.mean_precision = with_detection ? precision / static_cast<double>(with_detection) : 0.0;
	s.mean_recall /= n;
	s.mean_accuracy /= n;
	s.runs = std::move(runs);
	return s;
}

/// Replication r of every grid point uses seed sub_seed(config.seed, r). The first window of
/// each sample is estimated under the undirected constant-activity model and edge-tested.
/// Returns one summary per (grid point, correction), grid-major.
inline std::vector<PowerSummary> power_experiment(std::vector<PowerGridPoint> const& grid, PowerOptions const& opts) {
	if (opts.replications < 1) { throw ConfigError("need at least one replication"); }
	if (opts.corrections.empty()) { throw ConfigError("no correction regime requested"); }
	for (auto const& g : grid) { g.config.validate(); }
	std::size_t const nc = opts.corrections.size();
	std::size_t const reps = static_cast<std::size_t>(opts.replications);
	std::vector<ReplicationOutcome> outcomes(grid.size() * reps * nc);
	parallel_for(grid.size() * reps, opts.jobs, [&](std::size_t job) {
		std::size_t const g = job / reps;
		std::size_t const r = job % reps;
		SyntheticConfig cfg = grid[g].config;
		cfg.n_windows = 1;
		cfg.seed = sub_seed(grid[g].config.seed, r);
		auto const sample = generate(cfg);
		auto const windows = window_counts(sample.series, cfg.tau, WindowMode::fixed, false);
		auto const& w = windows.front();
		auto const est = estimate_undirected(w, opts.solver);
		auto const planted = planted_in_window(sample, w);
		for (std::size_t c = 0; c < nc; ++c) {
			auto const ties = edge_test_constant(w, est, {opts.level, opts.corrections[c]});
			ReplicationOutcome o;
			o.seed = cfg.seed;
			o.n_ties = ties.size();
			o.n_planted = planted.size();
			o.converged = est.converged;
			for (auto const& t : ties) {
				if (!t.significant) { continue; }
				++o.n_significant;
				o.true_positives += std::binary_search(planted.begin(), planted.end(), BankPair(t.i, t.j));
			}
			outcomes[job * nc + c] = o;
		}
	});
	std::vector<PowerSummary> out;
	for (std::size_t g = 0; g < grid.size(); ++g) {
		for (std::size_t c = 0; c < nc; ++c) {
			std::vector<ReplicationOutcome> runs;
			runs.reserve(reps);
			for (std::size_t r = 0; r < reps; ++r) { runs.push_back(outcomes[(g * reps + r) * nc + c]); }
			out.push_back(summarize(grid[g].label, opts.corrections[c], std::move(runs)));
		}
	}
	return out;
}

} // namespace reltie
