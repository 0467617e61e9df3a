#include <reltie/synth.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace reltie;

namespace {

bool same_series(DailySeries const& a, DailySeries const& b) {
	if (a.banks != b.banks || a.days.size() != b.days.size()) { return false; }
	for (std::size_t t = 0; t < a.days.size(); ++t) {
		auto const& x = a.days[t].edges;
		auto const& y = b.days[t].edges;
		if (a.days[t].date != b.days[t].date || x.size() != y.size()) { return false; }
		for (std::size_t k = 0; k < x.size(); ++k) {
			if (x[k].u != y[k].u || x[k].v != y[k].v || x[k].forward_trades != y[k].forward_trades || x[k].volume != y[k].volume ||
				x[k].rate_volume != y[k].rate_volume) {
				return false;
			}
		}
	}
	return true;
}

/// Pearson statistic of observed bin counts against Binomial(tau, p), last bin open.
double chi_square(std::vector<long> const& observed, int tau, double p) {
	long n = 0;
	for (long o : observed) { n += o; }
	double stat = 0.0;
	double used = 0.0;
	for (std::size_t k = 0; k < observed.size(); ++k) {
		double prob = 0.0;
		if (k + 1 < observed.size()) {
			prob = static_cast<double>(oracle::binomial_cdf(static_cast<int>(k), tau, p) -
									   (k ? oracle::binomial_cdf(static_cast<int>(k) - 1, tau, p) : 0.0L));
		} else {
			prob = 1.0 - used;
		}
		used += prob;
		double const e = prob * static_cast<double>(n);
		stat += (static_cast<double>(observed[k]) - e) * (static_cast<double>(observed[k]) - e) / e;
	}
	return stat;
}

} // namespace

TEST(Config, ValidationRejectsBadParameters) {
	SyntheticConfig ok;
	EXPECT_NO_THROW(ok.validate());
	auto bad = ok;
	bad.b0 = 2.0;
	EXPECT_THROW(generate(bad), ConfigError);
	bad = ok;
	bad.core_fraction = 1.5;
	EXPECT_THROW(bad.validate(), ConfigError);
	bad = ok;
	bad.relationship_fraction = -0.1;
	EXPECT_THROW(bad.validate(), ConfigError);
	bad = ok;
	bad.p_core_core = 1.2;
	EXPECT_THROW(bad.validate(), ConfigError);
	bad = ok;
	bad.b1 = 0.0;
	bad.b0 = 0.0;
	EXPECT_THROW(bad.validate(), ConfigError);
	bad = ok;
	bad.n_banks = 1;
	EXPECT_THROW(bad.validate(), ConfigError);
	bad = ok;
	bad.tau = 0;
	EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, HazardFormula) {
	SyntheticConfig cfg;
	cfg.b0 = 1.0;
	cfg.b1 = 1.0;
	cfg.b2 = 1.0;
	EXPECT_DOUBLE_EQ(1.0 - cfg.p_norel(9), 0.9);
	cfg.b2 = 0.0;
	EXPECT_DOUBLE_EQ(cfg.p_norel(100), 1.0);
}

TEST(Config, BaselineDefaults) {
	SyntheticConfig const cfg;
	EXPECT_EQ(cfg.core_fraction, 0.5);
	EXPECT_EQ(cfg.p_core_core, 0.06);
	EXPECT_EQ(cfg.p_core_periphery, 0.03);
	EXPECT_EQ(cfg.b0, 1.0);
	EXPECT_EQ(cfg.relationship_fraction, 0.2);
	EXPECT_EQ(cfg.tau, 10);
	EXPECT_EQ(cfg.burn_in + cfg.tau, 3000);
}

TEST(Generate, DeterministicForFixedSeed) {
	SyntheticConfig cfg;
	cfg.b2 = 3.0;
	cfg.burn_in = 200;
	cfg.n_windows = 3;
	cfg.foreign_fraction = 0.3;
	auto const a = generate(cfg);
	auto const b = generate(cfg);
	EXPECT_TRUE(same_series(a.series, b.series));
	EXPECT_EQ(a.relationship_pairs, b.relationship_pairs);
	EXPECT_EQ(a.runs, b.runs);
	cfg.seed = 2;
	EXPECT_FALSE(same_series(a.series, generate(cfg).series));
}

TEST(Generate, PeripheryPairsNeverTrade) {
	SyntheticConfig cfg;
	cfg.b2 = 5.0;
	cfg.burn_in = 100;
	cfg.n_windows = 5;
	for (std::uint64_t seed = 1; seed <= 5; ++seed) {
		cfg.seed = seed;
		auto const s = generate(cfg);
		for (auto const& d : s.series.days) {
			for (auto const& e : d.edges) { EXPECT_TRUE(s.is_core[e.u] || s.is_core[e.v]); }
		}
	}
}

TEST(Generate, NullCountsAreBinomialByClass) {
	SyntheticConfig cfg;
	cfg.b2 = 0.0;
	std::vector<long> cc(5, 0);
	std::vector<long> cp(4, 0);
	for (std::uint64_t seed = 1; seed <= 5; ++seed) {
		cfg.seed = seed;
		auto const s = generate(cfg);
		std::size_t const n = s.is_core.size();
		CountMatrix m(n);
		for (auto const& d : s.series.days) {
			for (auto const& e : d.edges) { ++m(e.u, e.v); }
		}
		for (std::size_t i = 0; i < n; ++i) {
			for (std::size_t j = i + 1; j < n; ++j) {
				int const c = m(i, j);
				if (s.is_core[i] && s.is_core[j]) {
					++cc[std::min(c, 4)];
				} else if (s.is_core[i] || s.is_core[j]) {
					++cp[std::min(c, 3)];
				}
			}
		}
	}
	// chi-square critical values at the 1% level, 4 and 3 degrees of freedom
	EXPECT_LT(chi_square(cc, cfg.tau, cfg.p_core_core), 13.2767);
	EXPECT_LT(chi_square(cp, cfg.tau, cfg.p_core_periphery), 11.3449);
}

TEST(Generate, NullHazardAddsNoEdges) {
	SyntheticConfig with;
	with.b2 = 0.0;
	with.relationship_fraction = 0.5;
	SyntheticConfig without = with;
	without.relationship_fraction = 0.0;
	auto const a = generate(with);
	auto const b = generate(without);
	EXPECT_FALSE(a.relationship_pairs.empty());
	ASSERT_EQ(a.series.days.size(), b.series.days.size());
	for (std::size_t t = 0; t < a.series.days.size(); ++t) {
		ASSERT_EQ(a.series.days[t].edges.size(), b.series.days[t].edges.size());
		for (std::size_t k = 0; k < a.series.days[t].edges.size(); ++k) {
			EXPECT_EQ(a.series.days[t].edges[k].u, b.series.days[t].edges[k].u);
			EXPECT_EQ(a.series.days[t].edges[k].v, b.series.days[t].edges[k].v);
		}
	}
}

TEST(Generate, RunLengthsReplayFromTrajectory) {
	SyntheticConfig cfg;
	cfg.b2 = 2.0;
	cfg.burn_in = 300;
	cfg.n_windows = 4;
	auto const s = generate(cfg);
	ASSERT_FALSE(s.relationship_pairs.empty());
	for (std::size_t k = 0; k < s.relationship_pairs.size(); ++k) {
		auto const pair = s.relationship_pairs[k];
		for (std::size_t t = 0; t < s.series.days.size(); ++t) {
			auto const& edges = s.series.days[t].edges;
			bool const traded = std::any_of(edges.begin(), edges.end(), [&](DayEdge const& e) { return BankPair(e.u, e.v) == pair; });
			if (!traded) {
				EXPECT_EQ(s.runs[k][t], 0);
			} else if (t == 0) {
				EXPECT_GE(s.runs[k][t], 1);
			} else {
				EXPECT_EQ(s.runs[k][t], s.runs[k][t - 1] + 1);
			}
		}
	}
}

TEST(Generate, PlantedPairsTradeInFirstWindow) {
	SyntheticConfig cfg;
	cfg.b2 = 5.0;
	cfg.burn_in = 100;
	for (std::uint64_t seed = 1; seed <= 5; ++seed) {
		cfg.seed = seed;
		auto const s = generate(cfg);
		auto const w = window_counts(s.series, cfg.tau, WindowMode::fixed, false).front();
		auto const planted = planted_in_window(s, w);
		EXPECT_EQ(planted.size(), s.relationship_pairs.size());
		std::size_t ties = 0;
		for (std::size_t i = 0; i < w.size(); ++i) {
			for (std::size_t j = i + 1; j < w.size(); ++j) { ties += w.m(i, j) > 0; }
		}
		for (auto const p : planted) { EXPECT_GT(w.m(p.lo, p.hi), 0); }
		// about f_rel of the base-traded pairs, which are at most all ties
		EXPECT_LE(static_cast<double>(planted.size()), 0.2 * static_cast<double>(ties) + 1.0);
		EXPECT_GT(planted.size(), 0u);
	}
}

TEST(Generate, StrongHazardMakesPlantedPairsPersistent) {
	SyntheticConfig cfg;
	cfg.b2 = 5.0;
	cfg.burn_in = 500;
	auto const s = generate(cfg);
	auto const w = window_counts(s.series, cfg.tau, WindowMode::fixed, false).front();
	double planted_mean = 0.0;
	for (auto const p : planted_in_window(s, w)) { planted_mean += w.m(p.lo, p.hi); }
	planted_mean /= static_cast<double>(s.relationship_pairs.size());
	EXPECT_GT(planted_mean, 8.0);
}

TEST(Generate, TransactionsMatchSnapshots) {
	SyntheticConfig cfg;
	cfg.b2 = 1.0;
	cfg.burn_in = 50;
	cfg.relationship_premium = 0.05;
	auto const s = generate(cfg);
	auto const rebuilt = build_daily_snapshots(s.transactions);
	ASSERT_EQ(rebuilt.days.size(), s.series.days.size());
	std::size_t edges = 0;
	for (auto const& d : s.series.days) { edges += d.edges.size(); }
	EXPECT_EQ(s.transactions.size(), edges);
	for (std::size_t t = 0; t < rebuilt.days.size(); ++t) {
		ASSERT_EQ(rebuilt.days[t].edges.size(), s.series.days[t].edges.size());
	}
	for (auto const& r : s.transactions) {
		EXPECT_GT(r.amount, 0.0);
		EXPECT_NE(r.lender, r.borrower);
	}
}

TEST(Generate, ForeignLabelsUseOtherCodes) {
	SyntheticConfig cfg;
	cfg.foreign_fraction = 0.4;
	cfg.burn_in = 0;
	auto const s = generate(cfg);
	std::size_t foreign = 0;
	for (auto const& id : s.series.banks) { foreign += country_code(id).code != "IT"; }
	EXPECT_GT(foreign, 20u);
	EXPECT_LT(foreign, 60u);
	EXPECT_TRUE(std::is_sorted(s.series.banks.begin(), s.series.banks.end()));
	EXPECT_EQ(std::set<std::string>(s.series.banks.begin(), s.series.banks.end()).size(), s.series.banks.size());
}

TEST(Random, SubSeedsAreDistinctAndStable) {
	std::set<std::uint64_t> seen;
	for (std::uint64_t r = 0; r < 1000; ++r) { seen.insert(sub_seed(42, r)); }
	EXPECT_EQ(seen.size(), 1000u);
	EXPECT_EQ(sub_seed(42, 7), sub_seed(42, 7));
	Rng a(9);
	Rng b(9);
	for (int k = 0; k < 100; ++k) {
		double const x = a.uniform();
		EXPECT_EQ(x, b.uniform());
		EXPECT_GE(x, 0.0);
		EXPECT_LT(x, 1.0);
		EXPECT_LT(a.below(7), 7u);
		b.below(7);
	}
}

TEST(Power, QuantileInterpolates) {
	EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.5), 3.0);
	EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 2.0, 3.0}, 0.5), 2.5);
	EXPECT_DOUBLE_EQ(quantile({1.0, 2.0}, 0.0), 1.0);
	EXPECT_DOUBLE_EQ(quantile({1.0, 2.0}, 1.0), 2.0);
}

TEST(Power, AccuracyCountsTrueNegatives) {
	ReplicationOutcome o;
	o.n_ties = 100;
	o.n_planted = 20;
	o.n_significant = 22;
	o.true_positives = 18;
	EXPECT_DOUBLE_EQ(o.fraction(), 0.22);
	EXPECT_DOUBLE_EQ(o.recall(), 0.9);
	EXPECT_DOUBLE_EQ(o.accuracy(), (18.0 + 76.0) / 100.0);
}

TEST(Power, NullGridNearLevelAndIndependentOfJobs) {
	SyntheticConfig cfg;
	cfg.b2 = 0.0;
	PowerOptions opts;
	opts.replications = 40;
	opts.jobs = 1;
	auto const serial = power_experiment({{"null", cfg}}, opts);
	opts.jobs = 4;
	auto const parallel = power_experiment({{"null", cfg}}, opts);
	ASSERT_EQ(serial.size(), 2u);
	EXPECT_EQ(serial[0].correction, Correction::none);
	EXPECT_EQ(serial[1].correction, Correction::bonferroni);
	EXPECT_GT(serial[0].mean_fraction, 0.004);
	EXPECT_LT(serial[0].mean_fraction, 0.018);
	EXPECT_LT(serial[1].mean_fraction, serial[0].mean_fraction);
	for (std::size_t k = 0; k < serial.size(); ++k) {
		EXPECT_EQ(serial[k].mean_fraction, parallel[k].mean_fraction);
		ASSERT_EQ(serial[k].runs.size(), parallel[k].runs.size());
		for (std::size_t r = 0; r < serial[k].runs.size(); ++r) {
			EXPECT_EQ(serial[k].runs[r].seed, parallel[k].runs[r].seed);
			EXPECT_EQ(serial[k].runs[r].n_significant, parallel[k].runs[r].n_significant);
		}
	}
	opts.replications = 0;
	EXPECT_THROW(power_experiment({{"null", cfg}}, opts), ConfigError);
}
