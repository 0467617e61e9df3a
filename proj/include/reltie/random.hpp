// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace reltie {

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
	z += 0x9E3779B97F4A7C15ull;
	z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
	z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
	return z ^ (z >> 31);
}

/// Seed of stream `stream` derived from `seed`: mix64(seed ^ mix64(stream)).
/// Replication r of an experiment uses sub_seed(seed, r).
inline constexpr std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) noexcept { return mix64(seed ^ mix64(stream)); }

/// mt19937_64 with portable uniform and normal draws (the engine's output sequence is fixed by the standard).
class Rng {
  public:
	explicit Rng(std::uint64_t seed) : m_engine(seed) {}

	/// Uniform on [0, 1) with 53 random bits.
	double uniform() noexcept { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }
	bool bernoulli(double p) noexcept { return uniform() < p; }
	/// Uniform integer on [0, n).
	std::uint64_t below(std::uint64_t n) noexcept {
		// rejection keeps the draw unbiased
		std::uint64_t const limit = ~0ull - (~0ull % n);
		std::uint64_t x = m_engine();
		while (x >= limit) { x = m_engine(); }
		return x % n;
	}
	/// Standard normal by Box-Muller.
	double normal() noexcept {
		if (m_has_spare) {
			m_has_spare = false;
			return m_spare;
		}
		double u1 = uniform();
		while (u1 <= 0.0) { u1 = uniform(); }
		double const u2 = uniform();
		double const r = std::sqrt(-2.0 * std::log(u1));
		m_spare = r * std::sin(2.0 * std::numbers::pi * u2);
		m_has_spare = true;
		return r * std::cos(2.0 * std::numbers::pi * u2);
	}

  private:
	std::mt19937_64 m_engine;
	double m_spare = 0.0;
	bool m_has_spare = false;
};

} // namespace reltie
