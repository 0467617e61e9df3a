// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20, nlohmann/json

#pragma once

#include <reltie/analysis.hpp>
#include <reltie/fitness.hpp>
#include <reltie/ingest.hpp>
#include <reltie/sigtest.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace reltie::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// primitives

/// Shortest text that reads back to the same double ("nan" for NaN).
inline std::string fmt(double x) {
	if (std::isnan(x)) { return "nan"; }
	if (std::isinf(x)) { return x > 0 ? "inf" : "-inf"; }
	char buf[32];
	for (int precision = 15; precision <= 17; ++precision) {
		std::snprintf(buf, sizeof buf, "%.*g", precision, x);
		if (std::strtod(buf, nullptr) == x) { break; }
	}
	return buf;
}

inline double parse_number(std::string_view s) {
	if (s == "nan") { return std::numeric_limits<double>::quiet_NaN(); }
	if (s == "inf") { return std::numeric_limits<double>::infinity(); }
	if (s == "-inf") { return -std::numeric_limits<double>::infinity(); }
	double v = 0.0;
	if (!detail::parse_double(s, v)) { throw DataError("bad number '" + std::string(s) + "'"); }
	return v;
}

inline long long parse_integer(std::string_view s) {
	long long v = 0;
	auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if (ec != std::errc{} || ptr != s.data() + s.size()) { throw DataError("bad integer '" + std::string(s) + "'"); }
	return v;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) noexcept {
	for (unsigned char c : bytes) {
		h ^= c;
		h *= 0x100000001b3ull;
	}
	return h;
}

inline std::string hex64(std::uint64_t v) {
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
	return buf;
}

inline std::string read_file(std::filesystem::path const& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) { throw DataError("cannot read '" + path.string() + "'"); }
	std::ostringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

inline void write_file(std::filesystem::path const& path, std::string const& content) {
	std::ofstream out(path, std::ios::binary);
	if (!out) { throw DataError("cannot write '" + path.string() + "'"); }
	out << content;
	if (!out) { throw DataError("write failed for '" + path.string() + "'"); }
}

inline std::string file_digest(std::filesystem::path const& path) { return hex64(fnv1a(read_file(path))); }

/// Header-indexed CSV table; cells are unquoted, ids must not contain commas.
struct CsvTable {
	std::vector<std::string> header;
	std::vector<std::vector<std::string>> rows;

	std::size_t column(std::string_view name) const {
		for (std::size_t k = 0; k < header.size(); ++k) {
			if (header[k] == name) { return k; }
		}
		throw DataError("CSV column '" + std::string(name) + "' missing");
	}
};

inline CsvTable read_csv(std::istream& in) {
	CsvTable t;
	std::string line;
	bool first = true;
	std::size_t line_no = 0;
	while (std::getline(in, line)) {
		++line_no;
		if (!line.empty() && line.back() == '\r') { line.pop_back(); }
		if (line.empty()) { continue; }
		std::vector<std::string> cells;
		for (auto c : detail::split_csv(line)) { cells.emplace_back(c); }
		if (first) {
			t.header = std::move(cells);
			first = false;
			continue;
		}
		if (cells.size() != t.header.size()) { throw DataError("CSV line " + std::to_string(line_no) + ": wrong number of cells"); }
		t.rows.push_back(std::move(cells));
	}
	if (first) { throw EmptyInputError("empty CSV input"); }
	return t;
}

inline CsvTable read_csv(std::filesystem::path const& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) { throw DataError("cannot read '" + path.string() + "'"); }
	return read_csv(in);
}

// ---------------------------------------------------------------------------
// transactions and snapshots

inline void write_transactions_csv(std::ostream& out, std::span<TransactionRecord const> records) {
	out << transaction_csv_header << '\n';
	for (auto const& r : records) {
		out << format_date(r.date) << ',' << format_time_of_day(r.time_of_day) << ',' << r.lender << ',' << r.borrower << ',' << r.maturity << ','
			<< fmt(r.rate) << ',' << fmt(r.amount) << '\n';
	}
}

inline constexpr std::string_view snapshot_csv_header = "date,bank_u,bank_v,trades,forward_trades,backward_trades,volume,rate_volume";

/// One row per day edge; a day without edges is kept as a row with empty bank cells.
inline void write_snapshots_csv(std::ostream& out, DailySeries const& series) {
	out << snapshot_csv_header << '\n';
	for (auto const& day : series.days) {
		std::string const date = format_date(day.date);
		if (day.edges.empty()) { out << date << ",,,0,0,0,0,0\n"; }
		for (auto const& e : day.edges) {
			out << date << ',' << series.banks[e.u] << ',' << series.banks[e.v] << ',' << e.trades << ',' << e.forward_trades << ','
				<< e.backward_trades << ',' << fmt(e.volume) << ',' << fmt(e.rate_volume) << '\n';
		}
	}
}

/// Inverse of write_snapshots_csv. Bank ids are re-sorted, so local indices follow id order.
inline DailySeries read_snapshots_csv(std::istream& in) {
	auto const t = read_csv(in);
	std::size_t const c_date = t.column("date"), c_u = t.column("bank_u"), c_v = t.column("bank_v"), c_tr = t.column("trades"),
					  c_fw = t.column("forward_trades"), c_bw = t.column("backward_trades"), c_vol = t.column("volume"),
					  c_rv = t.column("rate_volume");
	std::set<std::string> ids;
	for (auto const& r : t.rows) {
		if (!r[c_u].empty()) {
			ids.insert(r[c_u]);
			ids.insert(r[c_v]);
		}
	}
	DailySeries series;
	series.banks.assign(ids.begin(), ids.end());
	std::unordered_map<std::string, BankIndex> index;
	for (BankIndex k = 0; k < series.banks.size(); ++k) { index.emplace(series.banks[k], k); }
	for (auto const& r : t.rows) {
		Date const date = parse_date(r[c_date]);
		if (series.days.empty() || series.days.back().date != date) {
			if (!series.days.empty() && !(std::chrono::sys_days{series.days.back().date} < std::chrono::sys_days{date})) {
				throw DataError("snapshot rows not sorted by date");
			}
			series.days.push_back({date, {}});
		}
		if (r[c_u].empty()) { continue; }
		if (r[c_u] == r[c_v]) { throw DataError("snapshot self-loop"); }
		DayEdge e;
		BankIndex const a = index.at(r[c_u]);
		BankIndex const b = index.at(r[c_v]);
		e.u = std::min(a, b);
		e.v = std::max(a, b);
		e.trades = static_cast<int>(parse_integer(r[c_tr]));
		int const fw = static_cast<int>(parse_integer(r[c_fw]));
		int const bw = static_cast<int>(parse_integer(r[c_bw]));
		// orientation is relative to the row's bank_u
		e.forward_trades = a < b ? fw : bw;
		e.backward_trades = a < b ? bw : fw;
		e.volume = parse_number(r[c_vol]);
		e.rate_volume = parse_number(r[c_rv]);
		series.days.back().edges.push_back(e);
	}
	for (auto& day : series.days) {
		std::sort(day.edges.begin(), day.edges.end(), [](DayEdge const& x, DayEdge const& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
		for (std::size_t k = 1; k < day.edges.size(); ++k) {
			if (day.edges[k].u == day.edges[k - 1].u && day.edges[k].v == day.edges[k - 1].v) { throw DataError("duplicate pair within a day"); }
		}
	}
	if (series.days.empty()) { throw EmptyInputError("no snapshot rows"); }
	return series;
}

inline DailySeries read_snapshots_csv(std::filesystem::path const& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) { throw DataError("cannot read '" + path.string() + "'"); }
	return read_snapshots_csv(in);
}

// ---------------------------------------------------------------------------
// estimates

inline json activity_map(WindowedCounts const& w, std::vector<double> const& a) {
	json out = json::object();
	for (std::size_t k = 0; k < a.size(); ++k) { out[w.banks[k]] = a[k]; }
	return out;
}

inline json to_json(WindowedCounts const& w, ActivityEstimate const& est) {
	json j;
	j["window_index"] = est.window_index;
	j["variant"] = to_string(est.variant);
	j["tau"] = est.tau;
	j["first_date"] = w.days.empty() ? "" : format_date(w.days.front().date);
	j["last_date"] = w.days.empty() ? "" : format_date(w.days.back().date);
	switch (est.variant) {
	case Variant::undirected: j["activity"] = activity_map(w, est.a); break;
	case Variant::directed:
		j["activity_out"] = activity_map(w, est.a_out);
		j["activity_in"] = activity_map(w, est.a_in);
		break;
	case Variant::undirected_daily:
	case Variant::directed_daily: {
		json days = json::array();
		for (std::size_t t = 0; t < est.days(); ++t) {
			json d;
			d["date"] = format_date(w.days[t].date);
			if (est.variant == Variant::undirected_daily) {
				d["activity"] = activity_map(w, est.daily_a[t]);
			} else {
				d["activity_out"] = activity_map(w, est.daily_out[t]);
				d["activity_in"] = activity_map(w, est.daily_in[t]);
			}
			days.push_back(std::move(d));
		}
		j["daily"] = std::move(days);
		break;
	}
	}
	j["residual_norm"] = est.residual_norm;
	j["converged"] = est.converged;
	j["iterations"] = est.iterations;
	j["fallback_steps"] = est.fallback_steps;
	json clipped = json::array();
	for (auto const& c : est.clipped_pairs) {
		json p;
		if (c.day >= 0) { p["day"] = c.day; }
		p["from"] = w.banks[c.from];
		p["to"] = w.banks[c.to];
		clipped.push_back(std::move(p));
	}
	j["clipped_pairs"] = std::move(clipped);
	return j;
}

namespace detail {

inline std::vector<double> read_activity(json const& m, WindowedCounts const& w) {
	std::vector<double> a(w.size());
	if (m.size() != w.size()) { throw DataError("activity map does not match the window's banks"); }
	for (std::size_t k = 0; k < w.size(); ++k) {
		auto const it = m.find(w.banks[k]);
		if (it == m.end()) { throw DataError("activity missing for bank '" + w.banks[k] + "'"); }
		a[k] = it->get<double>();
	}
	return a;
}

} // namespace detail

/// Reads an estimate back against the window it was fitted on.
inline ActivityEstimate estimate_from_json(json const& j, WindowedCounts const& w) {
	ActivityEstimate est;
	try {
		est.window_index = j.at("window_index").get<std::size_t>();
		est.variant = parse_variant(j.at("variant").get<std::string>());
		est.tau = j.at("tau").get<int>();
		if (est.window_index != w.index || est.tau != w.tau) { throw DataError("estimate belongs to a different window"); }
		switch (est.variant) {
		case Variant::undirected: est.a = detail::read_activity(j.at("activity"), w); break;
		case Variant::directed:
			est.a_out = detail::read_activity(j.at("activity_out"), w);
			est.a_in = detail::read_activity(j.at("activity_in"), w);
			break;
		case Variant::undirected_daily:
		case Variant::directed_daily:
			for (auto const& d : j.at("daily")) {
				if (est.variant == Variant::undirected_daily) {
					est.daily_a.push_back(detail::read_activity(d.at("activity"), w));
				} else {
					est.daily_out.push_back(detail::read_activity(d.at("activity_out"), w));
					est.daily_in.push_back(detail::read_activity(d.at("activity_in"), w));
				}
			}
			if (est.days() != w.days.size()) { throw DataError("daily estimate does not cover the window"); }
			break;
		}
		est.residual_norm = j.at("residual_norm").get<double>();
		est.converged = j.at("converged").get<bool>();
		est.iterations = j.value("iterations", 0);
		est.fallback_steps = j.value("fallback_steps", 0);
		std::unordered_map<std::string, BankIndex> index;
		for (BankIndex k = 0; k < w.size(); ++k) { index.emplace(w.banks[k], k); }
		for (auto const& c : j.at("clipped_pairs")) {
			est.clipped_pairs.push_back({c.value("day", -1), index.at(c.at("from").get<std::string>()), index.at(c.at("to").get<std::string>())});
		}
	} catch (json::exception const& e) {
		throw DataError(std::string("malformed estimate JSON: ") + e.what());
	} catch (std::out_of_range const&) {
		throw DataError("estimate names a bank outside the window");
	}
	return est;
}

// ---------------------------------------------------------------------------
// test results

inline constexpr std::string_view ties_csv_header =
	"window,variant,correction,bank_i,bank_j,m,null_mean,p_value,threshold,significant,untestable,model_violation,lecam_bound";

inline void write_ties_rows(std::ostream& out, WindowedCounts const& w, std::span<TieTestResult const> ties) {
	for (auto const& t : ties) {
		out << w.index << ',' << to_string(t.variant) << ',' << to_string(t.correction) << ',' << w.banks[t.i] << ',' << w.banks[t.j] << ',' << t.m
			<< ',' << fmt(t.null_mean) << ',' << fmt(t.p_value) << ',' << t.threshold << ',' << int(t.significant) << ',' << int(t.untestable) << ','
			<< int(t.model_violation) << ',' << fmt(t.lecam_bound) << '\n';
	}
}

inline constexpr std::string_view nodes_csv_header = "window,variant,bank,direction,degree,lambda,threshold,cdf,dependent,untestable,lecam_bound";

inline void write_node_rows(std::ostream& out, WindowedCounts const& w, Variant variant, std::span<NodeTestResult const> nodes) {
	for (auto const& r : nodes) {
		out << w.index << ',' << to_string(variant) << ',' << w.banks[r.bank] << ',' << to_string(r.direction) << ',' << r.degree << ','
			<< fmt(r.lambda) << ',' << r.threshold << ',' << fmt(r.cdf) << ',' << int(r.dependent) << ',' << int(r.untestable) << ','
			<< fmt(r.lecam_bound) << '\n';
	}
}

inline json summary_json(WindowedCounts const& w, WindowClassification const& c) {
	json j;
	j["window_index"] = c.window_index;
	j["first_date"] = w.days.empty() ? "" : format_date(w.days.front().date);
	j["variant"] = to_string(c.variant);
	j["correction"] = to_string(c.correction);
	j["n_banks"] = c.n_banks;
	j["n_ties"] = c.n_ties;
	j["n_significant"] = c.n_significant;
	j["n_untestable"] = c.n_untestable;
	j["n_model_violations"] = c.n_violations;
	j["frac_significant"] = c.frac_significant;
	if (is_directed(c.variant)) {
		j["n_borrowing_dependent"] = c.n_borrowing_dependent;
		j["n_lending_dependent"] = c.n_lending_dependent;
		j["frac_borrowing_dependent"] = c.frac_borrowing_dependent;
		j["frac_lending_dependent"] = c.frac_lending_dependent;
	} else {
		j["n_dependent"] = c.n_dependent;
		j["frac_dependent"] = c.frac_dependent;
	}
	j["m_empirical"] = c.m_empirical;
	j["m_expected"] = c.m_expected;
	j["k_empirical"] = c.k_empirical;
	j["k_expected"] = c.k_expected;
	j["mean_lecam_bound"] = c.mean_lecam_bound;
	j["converged"] = c.converged;
	j["residual_norm"] = c.residual_norm;
	return j;
}

/// Tie verdicts read back from a ties CSV.
struct TieRow {
	std::size_t window{};
	Variant variant = Variant::undirected;
	Correction correction = Correction::none;
	std::string bank_i;
	std::string bank_j;
	int m{};
	bool significant = false;
};

inline std::vector<TieRow> read_ties_csv(std::istream& in) {
	auto const t = read_csv(in);
	std::size_t const c_w = t.column("window"), c_v = t.column("variant"), c_c = t.column("correction"), c_i = t.column("bank_i"),
					  c_j = t.column("bank_j"), c_m = t.column("m"), c_s = t.column("significant");
	std::vector<TieRow> out;
	out.reserve(t.rows.size());
	for (auto const& r : t.rows) {
		TieRow row;
		row.window = static_cast<std::size_t>(parse_integer(r[c_w]));
		row.variant = parse_variant(r[c_v]);
		row.correction = r[c_c] == "bonferroni" ? Correction::bonferroni : Correction::none;
		row.bank_i = r[c_i];
		row.bank_j = r[c_j];
		row.m = static_cast<int>(parse_integer(r[c_m]));
		row.significant = r[c_s] == "1";
		out.push_back(std::move(row));
	}
	return out;
}

inline std::vector<TieRow> read_ties_csv(std::filesystem::path const& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) { throw DataError("cannot read '" + path.string() + "'"); }
	return read_ties_csv(in);
}

/// Verdicts of `rows` belonging to window `w`, mapped to local indices and checked against its counts.
inline std::vector<TieTestResult> ties_for_window(std::span<TieRow const> rows, WindowedCounts const& w) {
	std::unordered_map<std::string, BankIndex> index;
	for (BankIndex k = 0; k < w.size(); ++k) { index.emplace(w.banks[k], k); }
	std::vector<TieTestResult> out;
	for (auto const& r : rows) {
		if (r.window != w.index) { continue; }
		auto const i = index.find(r.bank_i);
		auto const j = index.find(r.bank_j);
		if (i == index.end() || j == index.end()) { throw DataError("tie verdict names a bank inactive in window " + std::to_string(w.index)); }
		int const m = is_directed(r.variant) ? (w.directed_m.empty() ? -1 : w.directed_m(i->second, j->second)) : w.m(i->second, j->second);
		if (m >= 0 && m != r.m) { throw DataError("tie verdicts do not match the window counts; check --tau and --window"); }
		TieTestResult t;
		t.i = i->second;
		t.j = j->second;
		t.m = r.m;
		t.significant = r.significant;
		t.variant = r.variant;
		t.correction = r.correction;
		out.push_back(t);
	}
	return out;
}

// ---------------------------------------------------------------------------
// manifests

/// Run record written next to every artifact set. "runtime" holds settings that must not affect outputs.
struct Manifest {
	std::string stage;
	json config = json::object();
	json runtime = json::object();
	std::vector<std::filesystem::path> inputs;
	std::vector<std::filesystem::path> outputs;

	json to_json() const {
		json j;
		j["tool"] = "reltie";
		j["version"] = "0.1.0";
		j["stage"] = stage;
		j["config"] = config;
		json in = json::array();
		for (auto const& p : inputs) { in.push_back({{"path", p.string()}, {"fnv1a64", file_digest(p)}}); }
		j["inputs"] = std::move(in);
		json out = json::array();
		for (auto const& p : outputs) { out.push_back({{"path", p.filename().string()}, {"fnv1a64", file_digest(p)}}); }
		j["outputs"] = std::move(out);
		j["runtime"] = runtime;
		return j;
	}
};

} // namespace reltie::io
