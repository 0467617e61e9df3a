// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace reltie {

/// Runs body(k) for k in [0, n) on up to `jobs` threads. Results must be written by index;
/// the first exception is rethrown after all workers stop.
template <typename Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
	jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
	if (jobs == 1) {
		for (std::size_t k = 0; k < n; ++k) { body(k); }
		return;
	}
	std::atomic<std::size_t> next{0};
	std::atomic<bool> failed{false};
	std::exception_ptr error;
	std::mutex error_mutex;
	auto worker = [&] {
		for (std::size_t k = next++; k < n && !failed; k = next++) {
			try {
				body(k);
			} catch (...) {
				std::lock_guard lock(error_mutex);
				if (!error) { error = std::current_exception(); }
				failed = true;
			}
		}
	};
	{
		std::vector<std::jthread> pool;
		pool.reserve(jobs);
		for (unsigned t = 0; t < jobs; ++t) { pool.emplace_back(worker); }
	}
	if (error) { std::rethrow_exception(error); }
}

} // namespace reltie
