// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <reltie/core.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace reltie {

/// One time-stamped overnight loan.
struct TransactionRecord {
	Date date{};
	int time_of_day{}; ///< seconds since midnight
	std::string lender;
	std::string borrower;
	std::string maturity;
	double rate{};	 ///< percent per annum, may be negative
	double amount{}; ///< millions of currency, > 0
};

struct RejectEntry {
	std::size_t line{}; ///< 1-based line number in the file
	std::string reason;
	std::string raw;
};

struct ParseOptions {
	std::set<std::string> maturities{"ON", "ONL"};
	/// Fraction of malformed data rows tolerated before the parse aborts.
	double max_reject_rate = 0.01;
	bool allow_rejects = false;
};

struct ParseReport {
	std::vector<TransactionRecord> records;
	std::vector<RejectEntry> rejects;
	std::size_t data_rows{};
	std::size_t filtered_out{}; ///< well-formed rows dropped by the maturity filter
};

namespace detail {

inline std::string_view trim(std::string_view s) {
	while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) { s.remove_prefix(1); }
	while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) { s.remove_suffix(1); }
	if (s.size() >= 2 && s.front() == '"' && s.back() == '"') { s = s.substr(1, s.size() - 2); }
	return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
	std::vector<std::string_view> out;
	std::size_t start = 0;
	for (std::size_t k = 0; k <= line.size(); ++k) {
		if (k == line.size() || line[k] == ',') {
			out.push_back(trim(line.substr(start, k - start)));
			start = k + 1;
		}
	}
	return out;
}

inline bool parse_double(std::string_view s, double& out) {
	if (s.empty()) { return false; }
	if (s.front() == '+') { s.remove_prefix(1); }
	auto const* end = s.data() + s.size();
	auto const [ptr, ec] = std::from_chars(s.data(), end, out);
	return ec == std::errc{} && ptr == end;
}

inline std::string lower(std::string_view s) {
	std::string r(s);
	std::transform(r.begin(), r.end(), r.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
	return r;
}

} // namespace detail

inline constexpr std::string_view transaction_csv_header = "date,time,lender,borrower,maturity,rate,amount";

/// Parses the transaction CSV layout (header required).
inline ParseReport parse_transactions(std::istream& in, ParseOptions const& options = {}) {
	ParseReport report;
	std::string line;
	std::size_t line_no = 0;

	// header, skipping a UTF-8 BOM
	while (std::getline(in, line)) {
		++line_no;
		if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) { line.erase(0, 3); }
		if (!detail::trim(line).empty()) { break; }
	}
	{
		auto const cols = detail::split_csv(line);
		auto const expected = detail::split_csv(transaction_csv_header);
		bool ok = cols.size() == expected.size();
		for (std::size_t k = 0; ok && k < cols.size(); ++k) { ok = detail::lower(cols[k]) == expected[k]; }
		if (!ok) { throw DataError("missing or unexpected CSV header; expected '" + std::string(transaction_csv_header) + "'"); }
	}

	while (std::getline(in, line)) {
		++line_no;
		if (!line.empty() && line.back() == '\r') { line.pop_back(); }
		if (detail::trim(line).empty()) { continue; }
		++report.data_rows;
		auto reject = [&](std::string reason) { report.rejects.push_back({line_no, std::move(reason), line}); };

		auto const cols = detail::split_csv(line);
		if (cols.size() != 7) {
			reject("expected 7 columns, got " + std::to_string(cols.size()));
			continue;
		}
		TransactionRecord rec;
		try {
			rec.date = parse_date(cols[0]);
			rec.time_of_day = parse_time_of_day(cols[1]);
		} catch (DataError const& e) {
			reject(e.what());
			continue;
		}
		rec.lender = std::string(cols[2]);
		rec.borrower = std::string(cols[3]);
		rec.maturity = std::string(cols[4]);
		if (rec.lender.empty() || rec.borrower.empty()) {
			reject("empty bank id");
			continue;
		}
		if (rec.lender == rec.borrower) {
			reject("self-loop: lender equals borrower");
			continue;
		}
		if (!detail::parse_double(cols[5], rec.rate) || !std::isfinite(rec.rate)) {
			reject("rate is not a finite number");
			continue;
		}
		if (!detail::parse_double(cols[6], rec.amount) || !std::isfinite(rec.amount) || rec.amount <= 0.0) {
			reject("amount must be a positive number");
			continue;
		}
		if (!options.maturities.contains(rec.maturity)) {
			++report.filtered_out;
			continue;
		}
		report.records.push_back(std::move(rec));
	}

	if (report.data_rows > 0 && !options.allow_rejects) {
		double const rate = static_cast<double>(report.rejects.size()) / static_cast<double>(report.data_rows);
		if (rate > options.max_reject_rate) {
			std::ostringstream msg;
			msg << report.rejects.size() << " of " << report.data_rows << " rows rejected (first at line " << report.rejects.front().line
				<< ": " << report.rejects.front().reason << "); override to continue";
			throw DataError(msg.str());
		}
	}
	if (report.records.empty()) { throw EmptyInputError("no transactions survived parsing and filtering"); }
	return report;
}

inline ParseReport parse_transactions(std::filesystem::path const& path, ParseOptions const& options = {}) {
	std::ifstream in(path, std::ios::binary);
	if (!in) { throw DataError("cannot read '" + path.string() + "'"); }
	return parse_transactions(in, options);
}

/// Inclusive time-of-day interval.
struct TradingHours {
	int open = 9 * 3600;
	int close = 18 * 3600;

	bool contains(int t) const noexcept { return t >= open && t <= close; }
};

/// Same-day aggregate of one unordered pair, u < v.
struct DayEdge {
	BankIndex u{};
	BankIndex v{};
	int trades{};
	int forward_trades{};  ///< u lent to v
	int backward_trades{}; ///< v lent to u
	double volume{};
	double rate_volume{}; ///< sum of rate * amount

	double rate() const noexcept { return rate_volume / volume; }
	bool forward() const noexcept { return forward_trades > 0; }
	bool backward() const noexcept { return backward_trades > 0; }
};

struct DailySnapshot {
	Date date{};
	std::vector<DayEdge> edges; ///< sorted by (u, v), one per pair
};

/// Daily snapshots sharing a bank index space.
struct DailySeries {
	std::vector<std::string> banks; ///< sorted ids
	std::vector<DailySnapshot> days;
};

/// Collapses same-day trades of a pair into one edge; drops trades outside `hours`.
inline DailySeries build_daily_snapshots(std::span<TransactionRecord const> records, TradingHours hours = {}) {
	if (hours.close < hours.open) { throw ConfigError("empty trading-hours interval"); }
	DailySeries series;
	std::set<std::string> ids;
	for (auto const& r : records) {
		if (!hours.contains(r.time_of_day)) { continue; }
		ids.insert(r.lender);
		ids.insert(r.borrower);
	}
	series.banks.assign(ids.begin(), ids.end());
	std::unordered_map<std::string, BankIndex> index;
	for (BankIndex k = 0; k < series.banks.size(); ++k) { index.emplace(series.banks[k], k); }

	std::map<std::chrono::sys_days, std::map<BankPair, DayEdge>> by_day;
	for (auto const& r : records) {
		if (!hours.contains(r.time_of_day)) { continue; }
		BankIndex const lender = index.at(r.lender);
		BankIndex const borrower = index.at(r.borrower);
		BankPair const pair{lender, borrower};
		auto& edge = by_day[std::chrono::sys_days{r.date}][pair];
		edge.u = pair.lo;
		edge.v = pair.hi;
		++edge.trades;
		(lender == pair.lo ? edge.forward_trades : edge.backward_trades) += 1;
		edge.volume += r.amount;
		edge.rate_volume += r.rate * r.amount;
	}
	for (auto& [day, edges] : by_day) {
		DailySnapshot snap{Date{day}, {}};
		snap.edges.reserve(edges.size());
		for (auto& [pair, edge] : edges) { snap.edges.push_back(edge); }
		series.days.push_back(std::move(snap));
	}
	return series;
}

enum class WindowMode { fixed, rolling };

/// One day of a window, in the window's local bank indices.
struct WindowDay {
	Date date{};
	std::vector<DayEdge> edges;
};

/// Trade-day counts over one aggregate period.
struct WindowedCounts {
	std::size_t index{};
	int tau{};
	WindowMode mode = WindowMode::fixed;
	bool directed = false;
	std::vector<std::string> banks; ///< active banks, sorted; local index -> id
	std::vector<WindowDay> days;
	CountMatrix m;			///< m(i,j): days with >= 1 trade between i and j
	CountMatrix directed_m; ///< directed_m(i,j): days with >= 1 loan i -> j; empty unless directed

	std::size_t size() const noexcept { return banks.size(); }
	PairKey key(BankIndex i, BankIndex j) const { return PairKey(banks[i], banks[j]); }
	/// M: total trade-day incidences over unordered pairs.
	long long total_count() const {
		long long total = 0;
		for (std::size_t i = 0; i < size(); ++i) {
			for (std::size_t j = i + 1; j < size(); ++j) { total += m(i, j); }
		}
		return total;
	}
};

/// Builds count matrices from per-day edges (local indices) and checks the window invariants.
inline WindowedCounts make_window(std::size_t index, int tau, WindowMode mode, bool directed, std::vector<std::string> banks,
								  std::vector<WindowDay> days) {
	WindowedCounts w;
	w.index = index;
	w.tau = tau;
	w.mode = mode;
	w.directed = directed;
	w.banks = std::move(banks);
	w.days = std::move(days);
	std::size_t const n = w.banks.size();
	w.m = CountMatrix(n);
	if (directed) { w.directed_m = CountMatrix(n); }
	for (auto const& day : w.days) {
		for (auto const& e : day.edges) {
			if (e.u >= n || e.v >= n || e.u >= e.v) { throw DataError("window edge outside bank range or not canonical"); }
			++w.m(e.u, e.v);
			++w.m(e.v, e.u);
			if (directed) {
				if (e.forward()) { ++w.directed_m(e.u, e.v); }
				if (e.backward()) { ++w.directed_m(e.v, e.u); }
			}
		}
	}
	for (std::size_t i = 0; i < n; ++i) {
		int degree = 0;
		for (std::size_t j = 0; j < n; ++j) {
			if (w.m(i, j) > tau) { throw DataError("trade-day count exceeds window length"); }
			degree += w.m(i, j);
		}
		if (degree == 0) { throw DataError("bank '" + w.banks[i] + "' listed but inactive in window"); }
	}
	return w;
}

/// Splits snapshots into tau-day windows of active banks.
/// Fixed mode drops trailing days that do not fill a window.
inline std::vector<WindowedCounts> window_counts(DailySeries const& series, int tau, WindowMode mode, bool directed) {
	if (tau < 1) { throw ConfigError("window length must be positive"); }
	std::size_t const t_max = series.days.size();
	if (static_cast<std::size_t>(tau) > t_max) { throw DataError("window longer than data"); }
	for (std::size_t t = 1; t < t_max; ++t) {
		if (!(std::chrono::sys_days{series.days[t - 1].date} < std::chrono::sys_days{series.days[t].date})) {
			throw DataError("snapshots not sorted by date");
		}
	}
	std::size_t const count = mode == WindowMode::fixed ? t_max / tau : t_max - tau + 1;
	std::size_t const stride = mode == WindowMode::fixed ? tau : 1;

	std::vector<WindowedCounts> windows;
	windows.reserve(count);
	std::vector<BankIndex> local(series.banks.size());
	for (std::size_t w = 0; w < count; ++w) {
		std::size_t const first = w * stride;
		std::vector<BankIndex> active;
		for (std::size_t t = first; t < first + tau; ++t) {
			for (auto const& e : series.days[t].edges) {
				active.push_back(e.u);
				active.push_back(e.v);
			}
		}
		std::sort(active.begin(), active.end());
		active.erase(std::unique(active.begin(), active.end()), active.end());
		std::vector<std::string> banks;
		banks.reserve(active.size());
		for (BankIndex k = 0; k < active.size(); ++k) {
			local[active[k]] = k;
			banks.push_back(series.banks[active[k]]);
		}
		std::vector<WindowDay> days;
		days.reserve(tau);
		for (std::size_t t = first; t < first + tau; ++t) {
			WindowDay day{series.days[t].date, {}};
			day.edges.reserve(series.days[t].edges.size());
			for (auto e : series.days[t].edges) {
				e.u = local[e.u];
				e.v = local[e.v];
				day.edges.push_back(e);
			}
			days.push_back(std::move(day));
		}
		windows.push_back(make_window(w, tau, mode, directed, std::move(banks), std::move(days)));
	}
	return windows;
}

/// Days of the series not covered by any fixed window.
inline std::size_t dropped_trailing_days(std::size_t t_max, int tau) noexcept { return tau > 0 ? t_max % static_cast<std::size_t>(tau) : 0; }

struct CountryCode {
	std::string code; ///< two uppercase letters, or "??"
	bool known = false;
};

/// Country prefix of a bank id, e.g. "IT0002" -> "IT".
inline CountryCode country_code(std::string_view bank_id) {
	if (bank_id.size() < 2 || !std::isalpha(static_cast<unsigned char>(bank_id[0])) ||
		!std::isalpha(static_cast<unsigned char>(bank_id[1]))) {
		return {"??", false};
	}
	std::string code{static_cast<char>(std::toupper(static_cast<unsigned char>(bank_id[0]))),
					 static_cast<char>(std::toupper(static_cast<unsigned char>(bank_id[1])))};
	return {std::move(code), true};
}

} // namespace reltie
