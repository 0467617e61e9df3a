// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero on any failure.
#include "cli.hpp"
#include "oracles.hpp"

#include <reltie/io.hpp>
#include <reltie/reltie.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

using namespace reltie;
namespace fs = std::filesystem;

namespace {

// pinned tolerances
constexpr int null_replications = 500;
constexpr double null_fraction_lo = 0.007;
constexpr double null_fraction_hi = 0.013;
constexpr double bonferroni_fraction_max = 0.002;
constexpr double null_seconds_max = 120.0;

constexpr int power_replications = 200;
constexpr double power_fraction_lo = 0.15;
constexpr double power_fraction_hi = 0.25;
constexpr double power_recall_min = 0.7;
constexpr double power_seconds_max = 300.0;

constexpr int mle_instances = 100;
constexpr int mle_max_banks = 50;
constexpr double residual_max = 1e-8;
constexpr double gradient_max = 1e-6;
constexpr double edge_error_max = 0.01;

constexpr int lecam_instances = 200;
constexpr int lecam_max_banks = 20;

constexpr double tail_tol = 1e-12;

constexpr int census_graphs = 200;
constexpr int census_max_banks = 30;

constexpr int powerlaw_reps = 50;
constexpr int powerlaw_n = 10000;
constexpr double powerlaw_gamma = 2.17;
constexpr double powerlaw_tol = 0.05;

constexpr double shift_tol = 1e-12;
constexpr int premium_runs = 100;
constexpr int premium_covered_min = 90;
constexpr double premium = 0.05; // percent

unsigned hardware_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
	bool pass = false;
	std::string detail;
};

std::string num(double x) {
	char buf[64];
	std::snprintf(buf, sizeof buf, "%.6g", x);
	return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
	return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<double> random_activities(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
	std::uniform_real_distribution<double> d(lo, hi);
	std::vector<double> a(n);
	for (auto& x : a) { x = d(rng); }
	return a;
}

Outcome null_calibration() {
	auto const start = std::chrono::steady_clock::now();
	SyntheticConfig cfg;
	cfg.seed = 20240501;
	PowerOptions opts;
	opts.replications = null_replications;
	opts.level = 99.0;
	opts.jobs = hardware_jobs();
	auto const s = power_experiment({{"null", cfg}}, opts);
	double const secs = seconds_since(start);
	double const plain = s[0].mean_fraction;
	double const bonf = s[1].mean_fraction;
	bool const pass = plain >= null_fraction_lo && plain <= null_fraction_hi && bonf < bonferroni_fraction_max && secs < null_seconds_max;
	return {pass, "uncorrected " + num(plain) + ", bonferroni " + num(bonf) + ", " + num(secs) + " s"};
}

Outcome power() {
	auto const start = std::chrono::steady_clock::now();
	SyntheticConfig cfg;
	cfg.seed = 20240502;
	cfg.relationship_fraction = 0.2;
	cfg.b1 = 1.0;
	cfg.b2 = 5.0;
	SyntheticConfig wide = cfg;
	wide.tau = 20;
	PowerOptions opts;
	opts.replications = power_replications;
	opts.corrections = {Correction::none};
	opts.jobs = hardware_jobs();
	auto const s = power_experiment({{"tau10", cfg}, {"tau20", wide}}, opts);
	double const secs = seconds_since(start);
	auto const& t10 = s[0];
	auto const& t20 = s[1];
	bool const pass = t10.mean_fraction >= power_fraction_lo && t10.mean_fraction <= power_fraction_hi && t10.mean_recall >= power_recall_min &&
					  t20.mean_accuracy >= t10.mean_accuracy && secs < power_seconds_max;
	return {pass, "fraction " + num(t10.mean_fraction) + ", recall " + num(t10.mean_recall) + ", accuracy tau=10 " + num(t10.mean_accuracy) +
					  ", tau=20 " + num(t20.mean_accuracy) + ", " + num(secs) + " s"};
}

Outcome mle_correctness() {
	std::mt19937_64 rng(3);
	double worst_residual = 0.0;
	double worst_gradient = 0.0;
	double edge_error = 0.0;
	int nonconverged = 0;
	for (int k = 0; k < mle_instances; ++k) {
		std::size_t const n = 5 + rng() % (mle_max_banks - 4);
		auto const a = random_activities(rng, n, 0.05, 0.6);
		auto const w = oracle::active_window(oracle::fitness_days(a, 10, rng()), n, 10);
		auto const est = estimate_undirected(w);
		nonconverged += !est.converged;
		for (double h : undirected_residuals(w.m, w.tau, est.a)) { worst_residual = std::max(worst_residual, std::fabs(h)); }
		if (est.clipped_pairs.empty()) {
			for (long double g : oracle::loglik_gradient(oracle::dense(w.m), w.tau, est.a)) {
				worst_gradient = std::max(worst_gradient, static_cast<double>(std::fabs(g)));
			}
		}
		double const M = static_cast<double>(w.total_count());
		edge_error += std::fabs(expected_edges(est) - M) / M;
	}
	edge_error /= mle_instances;
	bool const pass = nonconverged == 0 && worst_residual < residual_max && worst_gradient < gradient_max && edge_error < edge_error_max;
	return {pass, "max residual " + num(worst_residual) + ", max gradient " + num(worst_gradient) + ", mean |M*-M|/M " + num(edge_error) +
					  ", nonconverged " + std::to_string(nonconverged)};
}

// L1 gap between the exact degree law and the Poisson law; TV is half of it.
Outcome lecam_soundness() {
	std::mt19937_64 rng(4);
	int violations = 0;
	double worst_ratio = 0.0;
	long checked = 0;
	for (int k = 0; k < lecam_instances; ++k) {
		std::size_t const n = 5 + rng() % (lecam_max_banks - 4);
		auto const a = random_activities(rng, n, 0.05, 0.8);
		auto const w = oracle::active_window(oracle::fitness_days(a, 10, rng()), n, 10);
		if (w.size() < 3) {
			--k;
			continue;
		}
		bool const daily = k % 2 == 1;
		auto const est = daily ? estimate_daily(w, false) : estimate_undirected(w);
		auto const nodes = node_test(w, est, 1.0);
		for (auto const& r : nodes) {
			if (r.untestable) { continue; }
			std::vector<double> p;
			for (std::size_t j = 0; j < w.size(); ++j) {
				if (j != r.bank) { p.push_back(window_link_probability(est, r.bank, j)); }
			}
			double const tv = 0.5 * static_cast<double>(oracle::poisson_l1_gap(p));
			++checked;
			if (tv > r.lecam_bound) { ++violations; }
			if (r.lecam_bound > 0.0) { worst_ratio = std::max(worst_ratio, tv / r.lecam_bound); }
		}
	}
	return {violations == 0, std::to_string(checked) + " node laws, " + std::to_string(violations) + " violations, max TV/bound " + num(worst_ratio)};
}

Outcome tail_equivalence() {
	double worst = 0.0;
	long checked = 0;
	for (int tau = 1; tau <= 30; ++tau) {
		for (int ui = 1; ui <= 99; ++ui) {
			double const u = ui / 100.0;
			for (int m = 0; m <= tau; ++m) {
				auto const r = binomial_tie_test(m, tau, u, 99.0);
				worst = std::max(worst, std::fabs(r.p_value - static_cast<double>(oracle::binomial_upper(m, tau, u))));
				worst = std::max(worst, std::fabs(dist::binomial_cdf(m, tau, u) - static_cast<double>(oracle::binomial_cdf(m, tau, u))));
				++checked;
			}
		}
	}
	for (int li = 1; li <= 300; ++li) {
		double const lambda = li / 10.0;
		for (int k = 0; k <= 80; ++k) {
			auto const r = poisson_tie_test(k, lambda, 0.0, 99.0);
			worst = std::max(worst, std::fabs(r.p_value - static_cast<double>(oracle::poisson_upper(k, lambda))));
			worst = std::max(worst, std::fabs(dist::poisson_cdf(k, lambda) - static_cast<double>(oracle::poisson_cdf(k, lambda))));
			++checked;
		}
	}
	return {worst <= tail_tol, std::to_string(checked) + " grid points, max abs error " + num(worst)};
}

Outcome triangle_census_exact() {
	std::mt19937_64 rng(6);
	std::uniform_real_distribution<double> unif(0.0, 1.0);
	int mismatches = 0;
	for (int g = 0; g < census_graphs; ++g) {
		std::size_t const n = 3 + rng() % (census_max_banks - 2);
		double const density = unif(rng);
		double const sig_share = unif(rng);
		SquareMatrix<int> A(n);
		std::vector<std::vector<int>> a(n, std::vector<int>(n)), sig(n, std::vector<int>(n));
		std::vector<BankPair> labelled;
		for (std::size_t i = 0; i < n; ++i) {
			for (std::size_t j = i + 1; j < n; ++j) {
				if (unif(rng) >= density) { continue; }
				A(i, j) = A(j, i) = a[i][j] = a[j][i] = 1;
				if (unif(rng) < sig_share) {
					sig[i][j] = sig[j][i] = 1;
					labelled.push_back(BankPair(static_cast<BankIndex>(i), static_cast<BankIndex>(j)));
				}
			}
		}
		auto const c = triangle_census(A, labelled);
		auto const t = oracle::triangles(a, sig);
		mismatches += c.by_significant != t || c.total != t[0] + t[1] + t[2] + t[3];
	}
	return {mismatches == 0, std::to_string(census_graphs) + " graphs, " + std::to_string(mismatches) + " mismatches"};
}

Outcome powerlaw_recovery() {
	oracle::PowerLawSampler const sampler(powerlaw_gamma);
	double total = 0.0;
	double worst = 0.0;
	for (int r = 0; r < powerlaw_reps; ++r) {
		std::mt19937_64 rng(7000 + r);
		std::vector<int> d(powerlaw_n);
		for (auto& x : d) { x = sampler(rng); }
		double const err = std::fabs(powerlaw_exponent(d, 1).gamma - powerlaw_gamma);
		total += err;
		worst = std::max(worst, err);
	}
	double const mean = total / powerlaw_reps;
	return {mean <= powerlaw_tol, "mean |gamma - 2.17| " + num(mean) + ", worst " + num(worst)};
}

int run_cli(std::vector<std::string> args, std::string& err) {
	std::ostringstream out, e;
	int const code = cli::run(args, out, e);
	err = e.str();
	return code;
}

Outcome determinism() {
	fs::path const root = fs::temp_directory_path() / "reltie_acceptance_determinism";
	fs::remove_all(root);
	fs::create_directories(root);
	auto at = [&](std::string const& s) { return (root / s).string(); };
	std::string err;
	std::vector<std::string> problems;
	auto need = [&](int code, std::string const& what) {
		if (code != cli::ok) { problems.push_back(what + " exited " + std::to_string(code) + ": " + err); }
	};
	need(run_cli({"simulate", "-o", at("sim"), "--b2", "5", "--n-windows", "4", "--premium", "0.05", "--burn-in", "500"}, err), "simulate");
	auto const snaps = at("sim") + "/snapshots.csv";
	std::vector<std::string> const variants{"undirected", "directed", "undirected-daily", "directed-daily"};
	for (auto const& v : variants) {
		need(run_cli({"test", "-i", snaps, "-o", at("ref_" + v), "--variant", v}, err), "test " + v);
		for (std::string jobs : {"1", "8"}) {
			need(run_cli({"test", "--config", at("ref_" + v) + "/manifest.json", "--jobs", jobs, "-o", at(v + "_" + jobs)}, err), "rerun " + v);
		}
	}
	for (std::string jobs : {"1", "8"}) {
		need(run_cli({"power", "--jobs", jobs, "-o", at("power_" + jobs), "--replications", "16", "--b2", "5", "--burn-in", "200"}, err), "power");
	}
	if (!problems.empty()) { return {false, problems.front()}; }

	int compared = 0;
	auto compare = [&](std::string const& a, std::string const& b, std::vector<std::string> const& files) {
		for (auto const& f : files) {
			++compared;
			if (io::read_file(fs::path(a) / f) != io::read_file(fs::path(b) / f)) { problems.push_back(b + "/" + f + " differs"); }
		}
		auto const ma = io::json::parse(io::read_file(fs::path(a) / "manifest.json"));
		auto const mb = io::json::parse(io::read_file(fs::path(b) / "manifest.json"));
		if (ma.at("outputs") != mb.at("outputs") || ma.at("inputs") != mb.at("inputs")) { problems.push_back(b + " manifest digests differ"); }
	};
	for (auto const& v : variants) {
		compare(at("ref_" + v), at(v + "_1"), {"ties.csv", "nodes.csv", "summary.json"});
		compare(at(v + "_1"), at(v + "_8"), {"ties.csv", "nodes.csv", "summary.json"});
	}
	compare(at("power_1"), at("power_8"), {"power.csv", "runs.csv"});
	fs::remove_all(root);
	if (!problems.empty()) { return {false, problems.front()}; }
	return {true, std::to_string(compared) + " output files byte-identical across jobs 1 and 8"};
}

Outcome rate_detrending() {
	double worst_shift = 0.0;
	std::vector<int> covered(premium_runs, 0);
	std::vector<int> covered_planted(premium_runs, 0);
	std::vector<int> defined(premium_runs, 0);
	std::vector<double> estimates(premium_runs, 0.0);
	std::vector<double> worst(premium_runs, 0.0);
	parallel_for(static_cast<std::size_t>(premium_runs), hardware_jobs(), [&](std::size_t r) {
		SyntheticConfig cfg;
		cfg.seed = sub_seed(909, r);
		cfg.b2 = 5.0;
		cfg.relationship_premium = premium;
		auto const s = generate(cfg);
		auto w = window_counts(s.series, cfg.tau, WindowMode::fixed, false).front();
		auto const significant = significant_pairs(classify_window(w, Variant::undirected).ties);
		auto const before = detrended_rates(w, significant);
		covered_planted[r] = detrended_rates(w, planted_in_window(s, w)).rate.covers(premium);
		defined[r] = before.rate.defined;
		covered[r] = before.rate.covers(premium);
		estimates[r] = before.rate.difference;
		std::mt19937_64 rng(r);
		std::uniform_real_distribution<double> shift(-3.0, 3.0);
		for (auto& d : w.days) {
			double const c = shift(rng);
			for (auto& e : d.edges) { e.rate_volume += c * e.volume; }
		}
		auto const after = detrended_rates(w, significant);
		for (std::size_t k = 0; k < before.pairs.size(); ++k) {
			worst[r] = std::max(worst[r], std::fabs(before.pairs[k].rate - after.pairs[k].rate));
		}
	});
	int n_covered = 0;
	int n_covered_planted = 0;
	int n_defined = 0;
	double mean = 0.0;
	for (int r = 0; r < premium_runs; ++r) {
		n_covered += covered[r];
		n_covered_planted += covered_planted[r];
		n_defined += defined[r];
		mean += estimates[r] / premium_runs;
		worst_shift = std::max(worst_shift, worst[r]);
	}
	bool const pass = worst_shift <= shift_tol && n_covered >= premium_covered_min;
	return {pass, "max shift change " + num(worst_shift) + ", premium covered in " + std::to_string(n_covered) + "/" + std::to_string(premium_runs) +
					  " runs (" + std::to_string(n_defined) + " defined), mean estimate " + num(mean) + "; with planted labels " +
					  std::to_string(n_covered_planted) + "/" + std::to_string(premium_runs)};
}

} // namespace

int main() {
	struct Criterion {
		char const* name;
		Outcome (*check)();
	};
	Criterion const criteria[] = {
		{"null calibration", null_calibration},
		{"power", power},
		{"MLE correctness", mle_correctness},
		{"Poisson approximation soundness", lecam_soundness},
		{"exact tails", tail_equivalence},
		{"triangle census", triangle_census_exact},
		{"power-law exponent recovery", powerlaw_recovery},
		{"determinism", determinism},
		{"rate detrending", rate_detrending},
	};
	int failed = 0;
	int index = 0;
	for (auto const& c : criteria) {
		++index;
		Outcome o;
		try {
			o = c.check();
		} catch (std::exception const& e) {
			o = {false, std::string("exception: ") + e.what()};
		}
		failed += !o.pass;
		std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << index << " (" << c.name << "): " << o.detail << std::endl;
	}
	std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all criteria passed")) << std::endl;
	return failed ? 1 : 0;
}
