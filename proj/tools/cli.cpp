#include "cli.hpp"

#include <reltie/io.hpp>
#include <reltie/reltie.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

namespace reltie::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

class NotConverged : public Error {
  public:
	using Error::Error;
};

json synthetic_defaults() {
	SyntheticConfig const c;
	return {{"n_banks", c.n_banks},
			{"core_fraction", c.core_fraction},
			{"p_core_core", c.p_core_core},
			{"p_core_periphery", c.p_core_periphery},
			{"relationship_fraction", c.relationship_fraction},
			{"b0", c.b0},
			{"b1", c.b1},
			{"b2", c.b2},
			{"burn_in", c.burn_in},
			{"n_windows", c.n_windows},
			{"base_rate", c.base_rate},
			{"rate_walk_sd", c.rate_walk_sd},
			{"rate_noise_sd", c.rate_noise_sd},
			{"relationship_premium", c.relationship_premium},
			{"log_amount_mean", c.log_amount_mean},
			{"log_amount_sd", c.log_amount_sd},
			{"foreign_fraction", c.foreign_fraction}};
}

json defaults() {
	return {{"input", ""},
			{"out", "."},
			{"estimates", ""},
			{"ties", ""},
			{"tau", 10},
			{"window", "fixed"},
			{"variant", "undirected"},
			{"level", 99.0},
			{"node_level", 1.0},
			{"bonferroni", false},
			{"seed", 1},
			{"home_country", "IT"},
			{"strict", false},
			{"allow_rejects", false},
			{"maturities", "ON,ONL"},
			{"open", "09:00:00"},
			{"close", "18:00:00"},
			{"d_min", 1},
			{"scan_d_min", false},
			{"include_censored", false},
			{"replications", 100},
			{"synthetic", synthetic_defaults()},
			{"grid", json::array()}};
}

void merge(json& base, json const& patch) {
	for (auto it = patch.begin(); it != patch.end(); ++it) {
		if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
			merge(base[it.key()], *it);
		} else {
			base[it.key()] = *it;
		}
	}
}

void set_path(json& j, std::string const& key, json value) {
	json* node = &j;
	std::size_t start = 0;
	for (std::size_t dot = key.find('.'); dot != std::string::npos; dot = key.find('.', start)) {
		node = &(*node)[key.substr(start, dot - start)];
		start = dot + 1;
	}
	(*node)[key.substr(start)] = std::move(value);
}

/// Flags of one subcommand; only flags given on the command line override the config file.
struct Registry {
	std::vector<std::function<void(json&)>> setters;

	template <typename T>
	CLI::Option* option(CLI::App* app, std::string const& name, std::string key, std::string const& help) {
		auto value = std::make_shared<T>();
		auto* opt = app->add_option(name, *value, help);
		setters.push_back([opt, value, key = std::move(key)](json& j) {
			if (opt->count() > 0) { set_path(j, key, *value); }
		});
		return opt;
	}
	CLI::Option* flag(CLI::App* app, std::string const& name, std::string key, std::string const& help) {
		auto* opt = app->add_flag(name, help);
		setters.push_back([opt, key = std::move(key)](json& j) {
			if (opt->count() > 0) { set_path(j, key, true); }
		});
		return opt;
	}
	void apply(json& j) const {
		for (auto const& s : setters) { s(j); }
	}
};

WindowMode parse_mode(std::string const& s) {
	if (s == "fixed") { return WindowMode::fixed; }
	if (s == "rolling") { return WindowMode::rolling; }
	throw ConfigError("window mode must be 'fixed' or 'rolling'");
}

Correction correction_of(json const& c) { return c.at("bonferroni").get<bool>() ? Correction::bonferroni : Correction::none; }

fs::path require_path(json const& c, char const* key, char const* flag) {
	auto const s = c.at(key).get<std::string>();
	if (s.empty()) { throw ConfigError(std::string(flag) + " is required"); }
	return s;
}

std::vector<std::string> split_list(std::string const& s) {
	std::vector<std::string> out;
	std::stringstream ss(s);
	std::string item;
	while (std::getline(ss, item, ',')) {
		if (!item.empty()) { out.push_back(item); }
	}
	return out;
}

/// Output directory plus the manifest that labels it.
class Artifacts {
  public:
	Artifacts(json const& config, std::string stage, unsigned jobs) : m_dir(config.at("out").get<std::string>()) {
		fs::create_directories(m_dir);
		m_manifest.stage = std::move(stage);
		m_manifest.config = config;
		m_manifest.runtime = {{"jobs", jobs}};
	}
	void input(fs::path const& p) { m_manifest.inputs.push_back(p); }
	void write(std::string const& name, std::string const& content) {
		auto const path = m_dir / name;
		io::write_file(path, content);
		m_manifest.outputs.push_back(path);
	}
	void finish(json status = json::object()) {
		auto j = m_manifest.to_json();
		j["status"] = std::move(status);
		io::write_file(m_dir / "manifest.json", j.dump(2) + "\n");
	}
	fs::path const& dir() const { return m_dir; }

  private:
	fs::path m_dir;
	io::Manifest m_manifest;
};

struct Loaded {
	DailySeries series;
	std::vector<WindowedCounts> windows;
	Variant variant = Variant::undirected;
};

Loaded load_windows(json const& c, Artifacts& art) {
	Loaded l;
	auto const input = require_path(c, "input", "--input");
	art.input(input);
	l.variant = parse_variant(c.at("variant").get<std::string>());
	l.series = io::read_snapshots_csv(input);
	l.windows = window_counts(l.series, c.at("tau").get<int>(), parse_mode(c.at("window").get<std::string>()), is_directed(l.variant));
	return l;
}

/// Tie verdicts of the configured variant and correction, per window.
std::vector<std::vector<TieTestResult>> load_ties(json const& c, Loaded const& l, Artifacts& art) {
	auto const path = require_path(c, "ties", "--ties");
	art.input(path);
	auto rows = io::read_ties_csv(path);
	Correction const corr = correction_of(c);
	std::erase_if(rows, [&](io::TieRow const& r) { return r.variant != l.variant || r.correction != corr; });
	if (rows.empty()) { throw DataError("no tie verdicts for this variant and correction in '" + path.string() + "'"); }
	std::vector<std::vector<TieTestResult>> out;
	for (auto const& w : l.windows) { out.push_back(io::ties_for_window(rows, w)); }
	return out;
}

std::string first_date(WindowedCounts const& w) { return w.days.empty() ? "" : format_date(w.days.front().date); }

SyntheticConfig synthetic_config(json const& c, json const& overrides = json::object()) {
	json s = c.at("synthetic");
	merge(s, overrides);
	SyntheticConfig cfg;
	cfg.n_banks = s.at("n_banks").get<int>();
	cfg.core_fraction = s.at("core_fraction").get<double>();
	cfg.p_core_core = s.at("p_core_core").get<double>();
	cfg.p_core_periphery = s.at("p_core_periphery").get<double>();
	cfg.relationship_fraction = s.at("relationship_fraction").get<double>();
	cfg.b0 = s.at("b0").get<double>();
	cfg.b1 = s.at("b1").get<double>();
	cfg.b2 = s.at("b2").get<double>();
	cfg.burn_in = s.at("burn_in").get<int>();
	cfg.n_windows = s.at("n_windows").get<int>();
	cfg.base_rate = s.at("base_rate").get<double>();
	cfg.rate_walk_sd = s.at("rate_walk_sd").get<double>();
	cfg.rate_noise_sd = s.at("rate_noise_sd").get<double>();
	cfg.relationship_premium = s.at("relationship_premium").get<double>();
	cfg.log_amount_mean = s.at("log_amount_mean").get<double>();
	cfg.log_amount_sd = s.at("log_amount_sd").get<double>();
	cfg.foreign_fraction = s.at("foreign_fraction").get<double>();
	cfg.tau = overrides.contains("tau") ? overrides.at("tau").get<int>() : c.at("tau").get<int>();
	cfg.seed = c.at("seed").get<std::uint64_t>();
	cfg.home_country = c.at("home_country").get<std::string>();
	cfg.validate();
	return cfg;
}

// ---------------------------------------------------------------------------
// stages

int stage_ingest(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "ingest", jobs);
	auto const input = require_path(c, "input", "--input");
	art.input(input);
	ParseOptions po;
	po.allow_rejects = c.at("allow_rejects").get<bool>();
	auto const mats = split_list(c.at("maturities").get<std::string>());
	po.maturities = {mats.begin(), mats.end()};
	auto const report = parse_transactions(input, po);
	TradingHours const hours{parse_time_of_day(c.at("open").get<std::string>()), parse_time_of_day(c.at("close").get<std::string>())};
	auto const series = build_daily_snapshots(report.records, hours);
	if (series.days.empty()) { throw EmptyInputError("no transactions inside trading hours"); }
	std::size_t outside = 0;
	for (auto const& r : report.records) { outside += !hours.contains(r.time_of_day); }

	std::ostringstream snaps;
	io::write_snapshots_csv(snaps, series);
	art.write("snapshots.csv", snaps.str());
	std::ostringstream rej;
	rej << "line,reason,raw\n";
	for (auto const& r : report.rejects) {
		std::string raw = r.raw;
		std::replace(raw.begin(), raw.end(), '"', '\'');
		rej << r.line << ',' << r.reason << ",\"" << raw << "\"\n";
	}
	art.write("rejects.csv", rej.str());
	art.finish({{"data_rows", report.data_rows},
				{"records", report.records.size()},
				{"rejected", report.rejects.size()},
				{"filtered_maturity", report.filtered_out},
				{"outside_hours", outside},
				{"banks", series.banks.size()},
				{"days", series.days.size()}});
	out << "ingest: " << report.records.size() << " loans kept, " << report.rejects.size() << " rejected, " << report.filtered_out
		<< " other maturities, " << outside << " outside trading hours; " << series.banks.size() << " banks over " << series.days.size()
		<< " days\n";
	return ok;
}

int stage_estimate(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "estimate", jobs);
	auto const l = load_windows(c, art);
	std::vector<ActivityEstimate> est(l.windows.size());
	parallel_for(l.windows.size(), jobs, [&](std::size_t k) { est[k] = estimate(l.windows[k], l.variant); });
	json arr = json::array();
	std::size_t failed = 0;
	double worst = 0.0;
	for (std::size_t k = 0; k < est.size(); ++k) {
		arr.push_back(io::to_json(l.windows[k], est[k]));
		failed += !est[k].converged;
		worst = std::max(worst, est[k].residual_norm);
	}
	art.write("estimates.json", arr.dump(2) + "\n");
	art.finish({{"windows", est.size()}, {"not_converged", failed}, {"max_residual_norm", worst}});
	out << "estimate: " << est.size() << " windows (" << to_string(l.variant) << "), max residual " << worst << ", " << failed
		<< " not converged\n";
	if (failed && c.at("strict").get<bool>()) { throw NotConverged(std::to_string(failed) + " window(s) did not converge"); }
	return ok;
}

int stage_test(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "test", jobs);
	auto const l = load_windows(c, art);
	ClassifyOptions opts;
	opts.level = c.at("level").get<double>();
	opts.node_level = c.at("node_level").get<double>();
	opts.correction = correction_of(c);
	std::map<std::size_t, json> given;
	if (auto const path = c.at("estimates").get<std::string>(); !path.empty()) {
		art.input(path);
		for (auto& e : json::parse(io::read_file(path))) { given[e.at("window_index").get<std::size_t>()] = e; }
	}
	std::vector<WindowClassification> cls(l.windows.size());
	parallel_for(l.windows.size(), jobs, [&](std::size_t k) {
		auto const& w = l.windows[k];
		if (given.empty()) {
			cls[k] = classify_window(w, l.variant, opts);
			return;
		}
		auto const it = given.find(w.index);
		if (it == given.end()) { throw DataError("no estimate for window " + std::to_string(w.index)); }
		auto est = io::estimate_from_json(it->second, w);
		if (est.variant != l.variant) { throw ConfigError("estimates were fitted under a different variant"); }
		cls[k] = classify_window(w, std::move(est), opts);
	});
	std::ostringstream ties, nodes;
	ties << io::ties_csv_header << '\n';
	nodes << io::nodes_csv_header << '\n';
	json windows = json::array();
	std::size_t failed = 0;
	double frac = 0.0;
	for (std::size_t k = 0; k < cls.size(); ++k) {
		io::write_ties_rows(ties, l.windows[k], cls[k].ties);
		io::write_node_rows(nodes, l.windows[k], cls[k].variant, cls[k].nodes);
		windows.push_back(io::summary_json(l.windows[k], cls[k]));
		failed += !cls[k].converged;
		frac += cls[k].frac_significant;
	}
	frac /= std::max<std::size_t>(cls.size(), 1);
	art.write("ties.csv", ties.str());
	art.write("nodes.csv", nodes.str());
	art.write("summary.json", json{{"windows", windows}, {"mean_frac_significant", frac}}.dump(2) + "\n");
	art.finish({{"windows", cls.size()}, {"not_converged", failed}});
	out << "test: " << cls.size() << " windows, mean significant-tie fraction " << frac << " (" << to_string(l.variant) << ", "
		<< to_string(opts.correction) << ")\n";
	if (failed && c.at("strict").get<bool>()) { throw NotConverged(std::to_string(failed) + " window(s) did not converge"); }
	return ok;
}

int stage_duration(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "duration", jobs);
	if (parse_mode(c.at("window").get<std::string>()) == WindowMode::rolling) { throw ConfigError("duration spells need --window fixed"); }
	auto const l = load_windows(c, art);
	auto const ties = load_ties(c, l, art);
	std::vector<WindowTieLabels> labels;
	for (std::size_t k = 0; k < l.windows.size(); ++k) { labels.push_back(tie_labels(l.windows[k], ties[k])); }
	auto const spells = duration_spells(labels);

	std::ostringstream sp;
	sp << "bank_i,bank_j,kind,start,length,censored\n";
	for (auto const& s : spells) {
		sp << s.pair.first << ',' << s.pair.second << ',' << to_string(s.kind) << ',' << s.start << ',' << s.length << ',' << int(s.censored) << '\n';
	}
	art.write("spells.csv", sp.str());

	bool const censored = c.at("include_censored").get<bool>();
	std::ostringstream cc;
	cc << "kind,d,ccdf\n";
	json fits = json::object();
	for (auto const kind : {SpellKind::significant, SpellKind::nonsignificant}) {
		auto const d = spell_lengths(spells, kind, censored);
		for (auto const& [len, p] : empirical_ccdf(d)) { cc << to_string(kind) << ',' << len << ',' << io::fmt(p) << '\n'; }
		json f;
		f["observations"] = d.size();
		try {
			auto const fit = c.at("scan_d_min").get<bool>() ? powerlaw_scan(d) : powerlaw_exponent(d, c.at("d_min").get<int>());
			f["gamma"] = fit.gamma;
			f["std_error"] = fit.std_error;
			f["gamma_approx"] = fit.gamma_approx;
			f["n"] = fit.n;
			f["d_min"] = fit.d_min;
			f["ks"] = fit.ks;
			f["small_sample"] = fit.small_sample;
			f["hazard"] = "lambda(d) = gamma / d";
		} catch (DataError const& e) {
			f["error"] = e.what();
		}
		fits[std::string(to_string(kind))] = std::move(f);
	}
	art.write("ccdf.csv", cc.str());
	art.write("powerlaw.json", fits.dump(2) + "\n");
	art.finish({{"spells", spells.size()}});
	out << "duration: " << spells.size() << " spells over " << l.windows.size() << " windows\n";
	return ok;
}

int stage_triangles(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "triangles", jobs);
	auto const l = load_windows(c, art);
	auto const ties = load_ties(c, l, art);
	std::vector<TriangleCensus> census(l.windows.size());
	parallel_for(l.windows.size(), jobs, [&](std::size_t k) { census[k] = triangle_census(l.windows[k], significant_pairs(ties[k])); });
	std::ostringstream s;
	s << "window,first_date,triangles,t0,t1,t2,t3,p_nonsig,s_nonsig\n";
	for (std::size_t k = 0; k < census.size(); ++k) {
		auto const& t = census[k];
		s << l.windows[k].index << ',' << first_date(l.windows[k]) << ',' << t.total << ',' << t.by_significant[0] << ',' << t.by_significant[1] << ','
		  << t.by_significant[2] << ',' << t.by_significant[3] << ',' << io::fmt(t.p_nonsig) << ',' << io::fmt(t.s_nonsig) << '\n';
	}
	art.write("census.csv", s.str());
	art.finish({{"windows", census.size()}});
	out << "triangles: census of " << census.size() << " windows\n";
	return ok;
}

int stage_compare(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "compare", jobs);
	auto const l = load_windows(c, art);
	auto const ties = load_ties(c, l, art);
	std::ostringstream jac, meas;
	jac << "window,first_date,n_ties,n_significant,j_rl,j_lpi\n";
	meas << "window,bank_i,bank_j,m,rl,lpi,lpi_defined,significant\n";
	for (std::size_t k = 0; k < l.windows.size(); ++k) {
		auto const& w = l.windows[k];
		auto const sig = significant_pairs(ties[k]);
		auto const rl = rl_measure(w);
		auto const lpi = lpi_measure(w);
		auto const j_rl = jaccard_vs_truth(w, rl, sig);
		auto const j_lpi = jaccard_vs_truth(w, lpi, sig);
		jac << w.index << ',' << first_date(w) << ',' << rl.size() << ',' << sig.size() << ',' << io::fmt(j_rl.j) << ',' << io::fmt(j_lpi.j) << '\n';
		for (std::size_t t = 0; t < rl.size(); ++t) {
			auto const p = rl[t].pair;
			auto const key = w.key(p.lo, p.hi);
			meas << w.index << ',' << key.first << ',' << key.second << ',' << rl[t].m << ',' << io::fmt(rl[t].score) << ',' << io::fmt(lpi[t].score)
				 << ',' << int(lpi[t].defined) << ',' << int(std::binary_search(sig.begin(), sig.end(), p)) << '\n';
		}
	}
	art.write("jaccard.csv", jac.str());
	art.write("measures.csv", meas.str());
	art.finish({{"windows", l.windows.size()}});
	out << "compare: Jaccard indices for " << l.windows.size() << " windows\n";
	return ok;
}

int stage_rates(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "rates", jobs);
	auto const l = load_windows(c, art);
	auto const ties = load_ties(c, l, art);
	std::ostringstream summary, pairs, market;
	summary << "window,first_date,n_significant,n_nonsignificant,rate_diff_pp,rate_se,rate_ci_low,rate_ci_high,amount_diff,amount_se,amount_ci_low,"
			   "amount_ci_high\n";
	pairs << "window,bank_i,bank_j,m,significant,rate_pp,mean_amount\n";
	market << "window,date,market_rate\n";
	for (std::size_t k = 0; k < l.windows.size(); ++k) {
		auto const& w = l.windows[k];
		auto const r = detrended_rates(w, significant_pairs(ties[k]));
		summary << w.index << ',' << first_date(w) << ',' << r.rate.n_significant << ',' << r.rate.n_nonsignificant << ',' << io::fmt(r.rate.difference)
				<< ',' << io::fmt(r.rate.std_error) << ',' << io::fmt(r.rate.ci_low) << ',' << io::fmt(r.rate.ci_high) << ','
				<< io::fmt(r.amount.difference) << ',' << io::fmt(r.amount.std_error) << ',' << io::fmt(r.amount.ci_low) << ','
				<< io::fmt(r.amount.ci_high) << '\n';
		for (auto const& p : r.pairs) {
			auto const key = w.key(p.pair.lo, p.pair.hi);
			pairs << w.index << ',' << key.first << ',' << key.second << ',' << p.m << ',' << int(p.significant) << ',' << io::fmt(p.rate) << ','
				  << io::fmt(p.mean_amount) << '\n';
		}
		for (std::size_t t = 0; t < w.days.size(); ++t) { market << w.index << ',' << format_date(w.days[t].date) << ',' << io::fmt(r.market_rate[t]) << '\n'; }
	}
	art.write("rates.csv", summary.str());
	art.write("pair_rates.csv", pairs.str());
	art.write("market.csv", market.str());
	art.finish({{"windows", l.windows.size()}});
	out << "rates: group differences for " << l.windows.size() << " windows (percentage points; 1 bp = 0.01)\n";
	return ok;
}

int stage_simulate(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "simulate", jobs);
	auto const cfg = synthetic_config(c);
	auto const s = generate(cfg);
	std::ostringstream tx, snaps, truth, banks;
	io::write_transactions_csv(tx, s.transactions);
	io::write_snapshots_csv(snaps, s.series);
	truth << "bank_i,bank_j\n";
	for (auto const [i, j] : s.relationship_pairs) { truth << s.series.banks[i] << ',' << s.series.banks[j] << '\n'; }
	banks << "bank,core,country\n";
	for (std::size_t k = 0; k < s.series.banks.size(); ++k) {
		banks << s.series.banks[k] << ',' << int(s.is_core[k]) << ',' << country_code(s.series.banks[k]).code << '\n';
	}
	art.write("transactions.csv", tx.str());
	art.write("snapshots.csv", snaps.str());
	art.write("truth.csv", truth.str());
	art.write("banks.csv", banks.str());
	art.finish({{"days", s.series.days.size()}, {"loans", s.transactions.size()}, {"relationship_pairs", s.relationship_pairs.size()}});
	out << "simulate: " << s.series.days.size() << " days, " << s.transactions.size() << " loans, " << s.relationship_pairs.size()
		<< " planted relationship pairs\n";
	return ok;
}

int stage_power(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "power", jobs);
	std::vector<PowerGridPoint> grid;
	json points = c.at("grid");
	if (points.empty()) { points = json::array({json{{"label", "default"}}}); }
	for (auto const& p : points) {
		json overrides = p;
		std::string const label = overrides.value("label", "point" + std::to_string(grid.size()));
		overrides.erase("label");
		grid.push_back({label, synthetic_config(c, overrides)});
	}
	PowerOptions opts;
	opts.replications = c.at("replications").get<int>();
	opts.level = c.at("level").get<double>();
	opts.jobs = jobs;
	auto const res = power_experiment(grid, opts);

	std::ostringstream summary, runs;
	summary << "label,correction,tau,b0,b1,b2,relationship_fraction,replications,mean_fraction,sd_fraction,q05,q50,q95,mean_precision,mean_recall,"
			   "mean_accuracy,nonconverged\n";
	runs << "label,correction,replication,seed,n_ties,n_planted,n_significant,true_positives,fraction\n";
	for (std::size_t k = 0; k < res.size(); ++k) {
		auto const& s = res[k];
		auto const& g = grid[k / opts.corrections.size()].config;
		summary << s.label << ',' << to_string(s.correction) << ',' << g.tau << ',' << io::fmt(g.b0) << ',' << io::fmt(g.b1) << ',' << io::fmt(g.b2) << ','
				<< io::fmt(g.relationship_fraction) << ',' << s.replications << ',' << io::fmt(s.mean_fraction) << ',' << io::fmt(s.sd_fraction) << ','
				<< io::fmt(s.q05) << ',' << io::fmt(s.q50) << ',' << io::fmt(s.q95) << ',' << io::fmt(s.mean_precision) << ','
				<< io::fmt(s.mean_recall) << ',' << io::fmt(s.mean_accuracy) << ',' << s.nonconverged << '\n';
		for (std::size_t r = 0; r < s.runs.size(); ++r) {
			auto const& o = s.runs[r];
			runs << s.label << ',' << to_string(s.correction) << ',' << r << ',' << o.seed << ',' << o.n_ties << ',' << o.n_planted << ','
				 << o.n_significant << ',' << o.true_positives << ',' << io::fmt(o.fraction()) << '\n';
		}
		out << "power: " << s.label << " [" << to_string(s.correction) << "] mean fraction " << s.mean_fraction << ", recall " << s.mean_recall
			<< ", accuracy " << s.mean_accuracy << '\n';
	}
	art.write("power.csv", summary.str());
	art.write("runs.csv", runs.str());
	art.finish({{"grid_points", grid.size()}, {"replications", opts.replications}});
	return ok;
}

int stage_report(json const& c, unsigned jobs, std::ostream& out) {
	Artifacts art(c, "report", jobs);
	fs::path const dir = require_path(c, "input", "--input");
	auto const summary_path = dir / "summary.json";
	auto const ties_path = dir / "ties.csv";
	auto const nodes_path = dir / "nodes.csv";
	art.input(summary_path);
	art.input(ties_path);
	art.input(nodes_path);
	auto const summary = json::parse(io::read_file(summary_path));
	auto const tie_rows = io::read_ties_csv(ties_path);
	auto const node_table = io::read_csv(nodes_path);
	std::size_t const n_w = node_table.column("window"), n_b = node_table.column("bank"), n_d = node_table.column("dependent");
	std::string const home = c.at("home_country").get<std::string>();

	std::ostringstream s;
	s << "window,first_date,variant,correction,n_banks,n_ties,n_significant,frac_significant,frac_dependent,frac_borrowing_dependent,"
		 "frac_lending_dependent,m_empirical,m_expected,k_empirical,k_expected,mean_lecam_bound,converged,dd_share,df_share,ff_share,dd_share_sig,"
		 "df_share_sig,ff_share_sig,domestic_among_dependent,unknown_codes\n";
	for (auto const& w : summary.at("windows")) {
		std::size_t const idx = w.at("window_index").get<std::size_t>();
		// bank ids of this window, from its verdict rows
		std::vector<std::string> banks;
		for (auto const& r : tie_rows) {
			if (r.window == idx) {
				banks.push_back(r.bank_i);
				banks.push_back(r.bank_j);
			}
		}
		for (auto const& r : node_table.rows) {
			if (io::parse_integer(r[n_w]) == static_cast<long long>(idx)) { banks.push_back(r[n_b]); }
		}
		std::sort(banks.begin(), banks.end());
		banks.erase(std::unique(banks.begin(), banks.end()), banks.end());
		auto local = [&](std::string const& id) { return static_cast<BankIndex>(std::lower_bound(banks.begin(), banks.end(), id) - banks.begin()); };
		std::vector<TieTestResult> ties;
		for (auto const& r : tie_rows) {
			if (r.window != idx) { continue; }
			TieTestResult t;
			t.i = local(r.bank_i);
			t.j = local(r.bank_j);
			t.significant = r.significant;
			ties.push_back(t);
		}
		std::vector<NodeTestResult> nodes;
		for (auto const& r : node_table.rows) {
			if (io::parse_integer(r[n_w]) != static_cast<long long>(idx)) { continue; }
			NodeTestResult n;
			n.bank = local(r[n_b]);
			n.dependent = r[n_d] == "1";
			nodes.push_back(n);
		}
		auto const nat = nationality_groups(banks, ties, nodes, home);
		auto num = [&](char const* key) { return w.contains(key) ? io::fmt(w.at(key).get<double>()) : std::string("nan"); };
		s << idx << ',' << w.at("first_date").get<std::string>() << ',' << w.at("variant").get<std::string>() << ','
		  << w.at("correction").get<std::string>() << ',' << w.at("n_banks").get<std::size_t>() << ',' << w.at("n_ties").get<std::size_t>() << ','
		  << w.at("n_significant").get<std::size_t>() << ',' << num("frac_significant") << ',' << num("frac_dependent") << ','
		  << num("frac_borrowing_dependent") << ',' << num("frac_lending_dependent") << ',' << num("m_empirical") << ',' << num("m_expected") << ','
		  << num("k_empirical") << ',' << num("k_expected") << ',' << num("mean_lecam_bound") << ',' << int(w.at("converged").get<bool>());
		for (double v : nat.all) { s << ',' << io::fmt(v); }
		for (double v : nat.among_significant) { s << ',' << io::fmt(v); }
		s << ',' << io::fmt(nat.domestic_among_dependent) << ',' << nat.unknown_codes << '\n';
	}
	art.write("report.csv", s.str());
	art.finish({{"windows", summary.at("windows").size()}});
	out << "report: " << summary.at("windows").size() << " windows written to " << (art.dir() / "report.csv").string() << '\n';
	return ok;
}

// ---------------------------------------------------------------------------
// command line

struct Command {
	CLI::App* app{};
	Registry flags;
	int (*stage)(json const&, unsigned, std::ostream&){};
	std::string config_file;
};

void add_io(Command& cmd, char const* input_help) {
	cmd.flags.option<std::string>(cmd.app, "-i,--input", "input", input_help);
	cmd.flags.option<std::string>(cmd.app, "-o,--out", "out", "Output directory (default: current directory)");
	cmd.app->add_option("--config", cmd.config_file, "JSON config or manifest; flags override its values");
}

void add_window(Command& cmd) {
	cmd.flags.option<int>(cmd.app, "--tau", "tau", "Window length in days (default 10)")->check(CLI::PositiveNumber);
	cmd.flags.option<std::string>(cmd.app, "--window", "window", "Window mode: fixed|rolling (default fixed)")
		->check(CLI::IsMember({"fixed", "rolling"}));
	cmd.flags.option<std::string>(cmd.app, "--variant", "variant", "undirected|directed|undirected-daily|directed-daily")
		->check(CLI::IsMember({"undirected", "directed", "undirected-daily", "directed-daily"}));
}

void add_verdicts(Command& cmd) {
	cmd.flags.option<std::string>(cmd.app, "--ties", "ties", "ties.csv written by 'test'");
	cmd.flags.flag(cmd.app, "--bonferroni", "bonferroni", "Use the Bonferroni-corrected verdicts");
}

void add_synthetic(Command& cmd) {
	auto* a = cmd.app;
	auto& f = cmd.flags;
	f.option<int>(a, "--tau", "tau", "Window length in days (default 10)")->check(CLI::PositiveNumber);
	f.option<std::uint64_t>(a, "--seed", "seed", "Random seed (default 1)");
	f.option<int>(a, "--n-banks", "synthetic.n_banks", "Number of banks (default 100)");
	f.option<double>(a, "--core-fraction", "synthetic.core_fraction", "Fraction of core banks (default 0.5)");
	f.option<double>(a, "--p-cc", "synthetic.p_core_core", "Core-core daily edge probability (default 0.06)");
	f.option<double>(a, "--p-cp", "synthetic.p_core_periphery", "Core-periphery daily edge probability (default 0.03)");
	f.option<double>(a, "--f-rel", "synthetic.relationship_fraction", "Fraction of planted relationship pairs (default 0.2)");
	f.option<double>(a, "--b0", "synthetic.b0", "Hazard parameter b0 (default 1)");
	f.option<double>(a, "--b1", "synthetic.b1", "Hazard parameter b1 (default 1)");
	f.option<double>(a, "--b2", "synthetic.b2", "Hazard parameter b2 (default 0)");
	f.option<int>(a, "--burn-in", "synthetic.burn_in", "Burn-in days (default 2990)");
	f.option<int>(a, "--n-windows", "synthetic.n_windows", "Evaluation windows (default 1)");
	f.option<double>(a, "--premium", "synthetic.relationship_premium", "Rate premium of planted pairs, percentage points");
	f.option<double>(a, "--foreign-fraction", "synthetic.foreign_fraction", "Fraction of banks with a foreign code");
	f.option<std::string>(a, "--home-country", "home_country", "Home country code (default IT)");
}

} // namespace

int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err) {
	CLI::App app{"reltie: significance testing of bilateral ties in temporal transaction networks", "reltie"};
	app.set_version_flag("--version", "reltie 0.1.0");
	app.require_subcommand(1);
	unsigned jobs = 1;
	app.add_option("--jobs", jobs, "Worker threads (output does not depend on it)")->check(CLI::PositiveNumber);
	std::map<std::string, std::unique_ptr<Command>> commands;
	auto make = [&](std::string const& name, std::string const& help, int (*stage)(json const&, unsigned, std::ostream&)) -> Command& {
		auto cmd = std::make_unique<Command>();
		cmd->app = app.add_subcommand(name, help);
		cmd->stage = stage;
		cmd->app->add_option("--jobs", jobs, "Worker threads (output does not depend on it)")->check(CLI::PositiveNumber);
		return *commands.emplace(name, std::move(cmd)).first->second;
	};

	{
		auto& c = make("ingest", "Parse a transaction CSV into daily snapshots", stage_ingest);
		add_io(c, "Transaction CSV (date,time,lender,borrower,maturity,rate,amount)");
		c.flags.flag(c.app, "--allow-rejects", "allow_rejects", "Continue when more than 1% of rows are malformed");
		c.flags.option<std::string>(c.app, "--maturities", "maturities", "Comma-separated maturities to keep (default ON,ONL)");
		c.flags.option<std::string>(c.app, "--open", "open", "Start of trading hours, HH:MM:SS (default 09:00:00)");
		c.flags.option<std::string>(c.app, "--close", "close", "End of trading hours, HH:MM:SS (default 18:00:00)");
	}
	{
		auto& c = make("estimate", "Fit activities per window", stage_estimate);
		add_io(c, "snapshots.csv");
		add_window(c);
		c.flags.flag(c.app, "--strict", "strict", "Exit with status 3 when a window does not converge");
	}
	{
		auto& c = make("test", "Edge and node tests per window", stage_test);
		add_io(c, "snapshots.csv");
		add_window(c);
		c.flags.option<std::string>(c.app, "--estimates", "estimates", "estimates.json from 'estimate' (fitted here when absent)");
		c.flags.option<double>(c.app, "--level", "level", "Edge-test percentile c (default 99)");
		c.flags.option<double>(c.app, "--node-level", "node_level", "Node-test percentile c' (default 1)");
		c.flags.flag(c.app, "--bonferroni", "bonferroni", "Bonferroni-correct the edge test");
		c.flags.flag(c.app, "--strict", "strict", "Exit with status 3 when a window does not converge");
	}
	{
		auto& c = make("duration", "Spells of (non-)significant ties and power-law fits", stage_duration);
		add_io(c, "snapshots.csv");
		add_window(c);
		add_verdicts(c);
		c.flags.option<int>(c.app, "--d-min", "d_min", "Lower cutoff of the power-law fit (default 1)");
		c.flags.flag(c.app, "--scan-d-min", "scan_d_min", "Choose d_min by minimum KS distance");
		c.flags.flag(c.app, "--include-censored", "include_censored", "Keep spells touching the data boundary in the fit");
	}
	{
		auto& c = make("triangles", "Triangle census by number of significant ties", stage_triangles);
		add_io(c, "snapshots.csv");
		add_window(c);
		add_verdicts(c);
	}
	{
		auto& c = make("compare", "RL and LPI against the significant ties (Jaccard)", stage_compare);
		add_io(c, "snapshots.csv");
		add_window(c);
		add_verdicts(c);
	}
	{
		auto& c = make("rates", "Detrended rates and loan sizes by tie class", stage_rates);
		add_io(c, "snapshots.csv");
		add_window(c);
		add_verdicts(c);
	}
	{
		auto& c = make("simulate", "Generate a synthetic core-periphery sample", stage_simulate);
		c.flags.option<std::string>(c.app, "-o,--out", "out", "Output directory (default: current directory)");
		c.app->add_option("--config", c.config_file, "JSON config or manifest; flags override its values");
		add_synthetic(c);
	}
	{
		auto& c = make("power", "Monte Carlo power and calibration study", stage_power);
		c.flags.option<std::string>(c.app, "-o,--out", "out", "Output directory (default: current directory)");
		c.app->add_option("--config", c.config_file, "JSON config or manifest; its \"grid\" lists per-point overrides");
		add_synthetic(c);
		c.flags.option<int>(c.app, "--replications", "replications", "Replications per grid point (default 100)");
		c.flags.option<double>(c.app, "--level", "level", "Edge-test percentile c (default 99)");
	}
	{
		auto& c = make("report", "Per-window summary table from a 'test' output directory", stage_report);
		add_io(c, "Directory written by 'test'");
		c.flags.option<std::string>(c.app, "--home-country", "home_country", "Home country code (default IT)");
	}

	try {
		std::vector<std::string> reversed(args.rbegin(), args.rend());
		app.parse(reversed);
	} catch (CLI::ParseError const& e) {
		int const code = app.exit(e, out, err);
		return code == 0 ? ok : usage;
	}

	for (auto const& [name, cmd] : commands) {
		if (!cmd->app->parsed()) { continue; }
		json config = defaults();
		try {
			if (!cmd->config_file.empty()) {
				json file = json::parse(io::read_file(cmd->config_file));
				if (file.contains("config") && file.contains("stage")) { file = file.at("config"); }
				if (!file.is_object()) { throw ConfigError("config file must hold a JSON object"); }
				merge(config, file);
			}
			cmd->flags.apply(config);
		} catch (std::exception const& e) {
			err << "error: cannot load config: " << e.what() << '\n';
			return usage;
		}
		try {
			return cmd->stage(config, jobs, out);
		} catch (NotConverged const& e) {
			err << "error: " << e.what() << '\n';
			return not_converged;
		} catch (ConfigError const& e) {
			err << "error: " << e.what() << '\n' << cmd->app->help();
			return usage;
		} catch (json::type_error const& e) {
			err << "error: config value of the wrong type: " << e.what() << '\n';
			return usage;
		} catch (json::exception const& e) {
			err << "error: malformed JSON input: " << e.what() << '\n';
			return data_error;
		} catch (std::exception const& e) {
			err << "error: " << e.what() << '\n';
			return data_error;
		}
	}
	return usage;
}

} // namespace reltie::cli
