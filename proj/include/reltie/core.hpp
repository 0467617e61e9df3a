// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reltie {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
	using std::runtime_error::runtime_error;
};

/// Input data is unreadable, malformed or inconsistent.
class DataError : public Error {
  public:
	using Error::Error;
};

/// Parsing and filtering left nothing to work with.
class EmptyInputError : public DataError {
  public:
	using DataError::DataError;
};

/// A caller-supplied parameter is out of its domain.
class ConfigError : public Error {
  public:
	using Error::Error;
};

using BankIndex = std::uint32_t;
using Date = std::chrono::year_month_day;

/// Unordered bank pair stored as (lo, hi).
struct BankPair {
	BankIndex lo{};
	BankIndex hi{};

	constexpr BankPair() = default;
	constexpr BankPair(BankIndex a, BankIndex b) noexcept : lo(a < b ? a : b), hi(a < b ? b : a) {}

	friend constexpr auto operator<=>(BankPair const&, BankPair const&) = default;
};

/// Pair of bank ids, canonical order (first < second). Stable across windows.
struct PairKey {
	std::string first;
	std::string second;

	PairKey() = default;
	PairKey(std::string a, std::string b) {
		if (b < a) { std::swap(a, b); }
		first = std::move(a);
		second = std::move(b);
	}

	friend auto operator<=>(PairKey const&, PairKey const&) = default;
	friend bool operator==(PairKey const&, PairKey const&) = default;
};

/// Dense row-major square matrix.
template <typename T>
class SquareMatrix {
  public:
	SquareMatrix() = default;
	explicit SquareMatrix(std::size_t n, T fill = T{}) : m_n(n), m_data(n * n, fill) {}

	std::size_t size() const noexcept { return m_n; }
	bool empty() const noexcept { return m_n == 0; }

	T& operator()(std::size_t i, std::size_t j) noexcept { return m_data[i * m_n + j]; }
	T const& operator()(std::size_t i, std::size_t j) const noexcept { return m_data[i * m_n + j]; }

	std::vector<T> const& data() const noexcept { return m_data; }

	friend bool operator==(SquareMatrix const&, SquareMatrix const&) = default;

  private:
	std::size_t m_n{};
	std::vector<T> m_data;
};

using CountMatrix = SquareMatrix<int>;

inline Date parse_date(std::string_view text) {
	int y = 0;
	unsigned m = 0;
	unsigned d = 0;
	if (text.size() != 10 || text[4] != '-' || text[7] != '-') { throw DataError("bad date '" + std::string(text) + "'"); }
	for (std::size_t k : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
		if (text[k] < '0' || text[k] > '9') { throw DataError("bad date '" + std::string(text) + "'"); }
	}
	y = std::stoi(std::string(text.substr(0, 4)));
	m = static_cast<unsigned>(std::stoi(std::string(text.substr(5, 2))));
	d = static_cast<unsigned>(std::stoi(std::string(text.substr(8, 2))));
	Date const date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
	if (!date.ok()) { throw DataError("invalid calendar date '" + std::string(text) + "'"); }
	return date;
}

inline std::string format_date(Date date) {
	char buf[16];
	std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()), static_cast<unsigned>(date.month()),
				  static_cast<unsigned>(date.day()));
	return buf;
}

/// Seconds since midnight for "HH:MM:SS".
inline int parse_time_of_day(std::string_view text) {
	if (text.size() != 8 || text[2] != ':' || text[5] != ':') { throw DataError("bad time '" + std::string(text) + "'"); }
	for (std::size_t k : {0u, 1u, 3u, 4u, 6u, 7u}) {
		if (text[k] < '0' || text[k] > '9') { throw DataError("bad time '" + std::string(text) + "'"); }
	}
	int const h = (text[0] - '0') * 10 + (text[1] - '0');
	int const m = (text[3] - '0') * 10 + (text[4] - '0');
	int const s = (text[6] - '0') * 10 + (text[7] - '0');
	if (h > 23 || m > 59 || s > 59) { throw DataError("time out of range '" + std::string(text) + "'"); }
	return h * 3600 + m * 60 + s;
}

inline std::string format_time_of_day(int seconds) {
	char buf[16];
	std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", seconds / 3600, (seconds / 60) % 60, seconds % 60);
	return buf;
}

} // namespace reltie
