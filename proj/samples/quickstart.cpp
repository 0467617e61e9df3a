// Simulates a small market with planted relationships and tests its first windows.
#include <reltie/reltie.hpp>

#include <algorithm>
#include <iostream>

int main() {
	reltie::SyntheticConfig cfg;
	cfg.burn_in = 200;
	cfg.b2 = 5.0;
	cfg.n_windows = 3;
	cfg.seed = 42;
	auto const sample = reltie::generate(cfg);

	auto const windows = reltie::window_counts(sample.series, cfg.tau, reltie::WindowMode::fixed, false);
	for (auto const& w : windows) {
		auto const est = reltie::estimate(w, reltie::Variant::undirected);
		auto const c = reltie::classify_window(w, est);
		auto const planted = reltie::planted_in_window(sample, w);
		std::size_t hits = 0;
		for (auto const& t : c.ties) {
			if (t.significant && std::binary_search(planted.begin(), planted.end(), reltie::BankPair(t.i, t.j))) { ++hits; }
		}
		std::cout << "window " << w.index << ": " << c.n_ties << " pairs, " << c.n_significant << " significant ("
				  << c.frac_significant << "), " << hits << " of " << planted.size() << " planted pairs found, "
				  << c.n_dependent << " dependent banks\n";
	}
}
