// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20

#pragma once

#include <reltie/core.hpp>
#include <reltie/ingest.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reltie {

/// Which null model the activities describe.
enum class Variant { undirected, directed, undirected_daily, directed_daily };

inline constexpr bool is_directed(Variant v) noexcept { return v == Variant::directed || v == Variant::directed_daily; }
inline constexpr bool is_daily(Variant v) noexcept { return v == Variant::undirected_daily || v == Variant::directed_daily; }

inline std::string_view to_string(Variant v) noexcept {
	switch (v) {
	case Variant::undirected: return "undirected";
	case Variant::directed: return "directed";
	case Variant::undirected_daily: return "undirected-daily";
	case Variant::directed_daily: return "directed-daily";
	}
	return "undirected";
}

inline Variant parse_variant(std::string_view s) {
	for (Variant v : {Variant::undirected, Variant::directed, Variant::undirected_daily, Variant::directed_daily}) {
		if (to_string(v) == s) { return v; }
	}
	throw ConfigError("unknown variant '" + std::string(s) + "'");
}

struct SolverOptions {
	double tol = 1e-10; ///< bound on max_i |H_i| at the solution
	int max_iter = 200;
	/// Skip the damped Newton iteration and use only the fixed-point map.
	bool fixed_point_only = false;
};

/// Matching probabilities are capped here inside the likelihood.
inline constexpr double probability_cap = 1.0 - 1e-12;

/// A pair whose fitted product reached 1; treated as u = 1. `day` is -1 for constant variants.
struct ClippedPair {
	int day = -1;
	BankIndex from{};
	BankIndex to{};

	friend bool operator==(ClippedPair const&, ClippedPair const&) = default;
};

struct ActivityEstimate {
	std::size_t window_index{};
	Variant variant = Variant::undirected;
	int tau{};
	std::vector<double> a;						  ///< undirected
	std::vector<double> a_out;					  ///< directed
	std::vector<double> a_in;					  ///< directed
	std::vector<std::vector<double>> daily_a;	  ///< [day][bank]
	std::vector<std::vector<double>> daily_out;	  ///< [day][bank]
	std::vector<std::vector<double>> daily_in;	  ///< [day][bank]
	double residual_norm{};
	bool converged = false;
	int iterations{};
	int fallback_steps{};
	std::vector<ClippedPair> clipped_pairs;

	std::size_t size() const noexcept {
		switch (variant) {
		case Variant::undirected: return a.size();
		case Variant::directed: return a_out.size();
		case Variant::undirected_daily: return daily_a.empty() ? 0 : daily_a.front().size();
		case Variant::directed_daily: return daily_out.empty() ? 0 : daily_out.front().size();
		}
		return 0;
	}
	std::size_t days() const noexcept { return is_directed(variant) ? daily_out.size() : daily_a.size(); }

	/// Constant-activity matching probability (i -> j when directed), min(product, 1).
	double u(std::size_t i, std::size_t j) const noexcept {
		double const p = variant == Variant::directed ? a_out[i] * a_in[j] : a[i] * a[j];
		return std::min(p, 1.0);
	}
	/// Matching probability on day t of the window.
	double u(std::size_t t, std::size_t i, std::size_t j) const noexcept {
		double const p = variant == Variant::directed_daily ? daily_out[t][i] * daily_in[t][j] : daily_a[t][i] * daily_a[t][j];
		return std::min(p, 1.0);
	}
	bool clipped(std::size_t i, std::size_t j) const noexcept { return u(i, j) >= probability_cap; }
};

namespace detail {

/// Independent Bernoulli(tau, e^{x_s + x_t}) counts on a set of parameter pairs.
struct ProductPair {
	std::uint32_t s{};
	std::uint32_t t{};
	int m{};
};

struct ProductProblem {
	std::size_t n_params{};
	int tau{};
	std::vector<ProductPair> pairs;
};

struct ProductSolution {
	std::vector<double> a;
	double residual{};
	bool converged = false;
	int iterations{};
	int fallback_steps{};
};

/// Activity assigned to parameters whose only positive counts were absorbed by saturated partners.
inline constexpr double vanishing_activity = 1e-6;
/// Log-activities are confined to [-bound, bound]; likelihoods whose supremum lies at infinity stop there.
inline constexpr double log_activity_bound = 50.0;

class ProductSolver {
  public:
	ProductSolver(ProductProblem const& problem, SolverOptions const& options) : m_problem(problem), m_options(options) {}

	ProductSolution solve(std::vector<double> const& init) {
		classify();
		ProductSolution sol;
		sol.a.assign(m_problem.n_params, 0.0);
		std::size_t const n = m_active.size();
		if (n > 0) {
			Eigen::VectorXd x(n);
			for (std::size_t k = 0; k < n; ++k) {
				double const a0 = init[m_active[k]];
				x[k] = a0 > 0.0 && std::isfinite(a0) ? std::log(a0) : std::log(0.1);
			}
			make_feasible(x);
			x = clamp(x);
			iterate(x, sol);
			for (std::size_t k = 0; k < n; ++k) { sol.a[m_active[k]] = std::exp(x[k]); }
		} else {
			sol.converged = true;
		}
		for (std::size_t k = 0; k < m_problem.n_params; ++k) {
			if (m_status[k] == Status::vanishing) { sol.a[k] = vanishing_activity; }
		}
		for (std::size_t k = 0; k < m_problem.n_params; ++k) {
			if (m_status[k] != Status::saturated) { continue; }
			double value = 1.0;
			for (auto const& p : m_problem.pairs) {
				if (p.m != m_problem.tau || (p.s != k && p.t != k)) { continue; }
				std::uint32_t const other = p.s == k ? p.t : p.s;
				if (m_status[other] != Status::saturated && sol.a[other] > 0.0) { value = std::max(value, 1.0 / sol.a[other]); }
			}
			sol.a[k] = value;
		}
		return sol;
	}

  private:
	enum class Status { active, pinned, saturated, vanishing };

	struct Eval {
		long double loglik = 0.0L;
		Eigen::VectorXd grad;
		double residual = 0.0;
		bool feasible = true;
	};

	void classify() {
		std::size_t const np = m_problem.n_params;
		int const tau = m_problem.tau;
		m_status.assign(np, Status::active);
		std::vector<long long> total(np, 0);
		for (auto const& p : m_problem.pairs) {
			total[p.s] += p.m;
			total[p.t] += p.m;
		}
		for (std::size_t k = 0; k < np; ++k) {
			if (total[k] == 0) { m_status[k] = Status::pinned; }
		}
		// peel saturated and vanishing parameters until stable
		for (bool changed = true; changed;) {
			changed = false;
			std::vector<int> pairs_live(np, 0);
			std::vector<int> pairs_unsat(np, 0);
			std::vector<int> pairs_positive(np, 0);
			for (auto const& p : m_problem.pairs) {
				if (m_status[p.s] != Status::active || m_status[p.t] != Status::active) { continue; }
				for (auto k : {p.s, p.t}) {
					++pairs_live[k];
					if (p.m < tau) { ++pairs_unsat[k]; }
					if (p.m > 0) { ++pairs_positive[k]; }
				}
			}
			for (std::size_t k = 0; k < np; ++k) {
				if (m_status[k] != Status::active) { continue; }
				if (pairs_live[k] > 0 && pairs_unsat[k] == 0) {
					m_status[k] = Status::saturated;
					changed = true;
				} else if (pairs_positive[k] == 0) {
					m_status[k] = Status::vanishing;
					changed = true;
				}
			}
		}
		m_active.clear();
		m_local.assign(np, -1);
		for (std::size_t k = 0; k < np; ++k) {
			if (m_status[k] == Status::active) {
				m_local[k] = static_cast<int>(m_active.size());
				m_active.push_back(static_cast<std::uint32_t>(k));
			}
		}
		m_pairs.clear();
		for (auto const& p : m_problem.pairs) {
			if (m_local[p.s] >= 0 && m_local[p.t] >= 0) {
				m_pairs.push_back({static_cast<std::uint32_t>(m_local[p.s]), static_cast<std::uint32_t>(m_local[p.t]), p.m});
			}
		}
	}

	Eval evaluate(Eigen::VectorXd const& x) const {
		int const tau = m_problem.tau;
		Eval ev;
		ev.grad = Eigen::VectorXd::Zero(x.size());
		for (auto const& p : m_pairs) {
			double const s = x[p.s] + x[p.t];
			if (p.m == tau) {
				ev.loglik += static_cast<long double>(tau) * s;
				ev.grad[p.s] += tau;
				ev.grad[p.t] += tau;
				continue;
			}
			if (s >= 0.0) {
				ev.feasible = false;
				return ev;
			}
			double const u = std::exp(s);
			double const one_minus = -std::expm1(s);
			ev.loglik += static_cast<long double>(p.m) * s + static_cast<long double>(tau - p.m) * std::log1p(-u);
			double const h = (p.m - tau * u) / one_minus;
			ev.grad[p.s] += h;
			ev.grad[p.t] += h;
		}
		for (Eigen::Index k = 0; k < x.size(); ++k) {
			if (!at_bound(x[k], ev.grad[k])) { ev.residual = std::max(ev.residual, std::fabs(ev.grad[k])); }
		}
		return ev;
	}

	static Eigen::VectorXd clamp(Eigen::VectorXd const& x) { return x.cwiseMax(-log_activity_bound).cwiseMin(log_activity_bound); }

	/// True when the ascent direction of coordinate k points out of the box.
	static bool at_bound(double x, double g) noexcept {
		return (x >= log_activity_bound && g > 0.0) || (x <= -log_activity_bound && g < 0.0);
	}

	Eigen::MatrixXd curvature(Eigen::VectorXd const& x) const {
		int const tau = m_problem.tau;
		Eigen::MatrixXd J = Eigen::MatrixXd::Zero(x.size(), x.size());
		for (auto const& p : m_pairs) {
			if (p.m == tau) { continue; }
			double const s = x[p.s] + x[p.t];
			double const u = std::exp(s);
			double const om = -std::expm1(s);
			double const w = (tau - p.m) * u / (om * om);
			J(p.s, p.s) += w;
			J(p.t, p.t) += w;
			J(p.s, p.t) += w;
			J(p.t, p.s) += w;
		}
		return J;
	}

	void make_feasible(Eigen::VectorXd& x) const {
		for (int guard = 0; guard < 200; ++guard) {
			double worst = -std::numeric_limits<double>::infinity();
			for (auto const& p : m_pairs) {
				if (p.m < m_problem.tau) { worst = std::max(worst, x[p.s] + x[p.t]); }
			}
			if (worst < 0.0) { return; }
			x.array() -= 0.5 * worst + std::log(2.0);
		}
	}

	/// One Jacobi sweep of a_k <- (tau S_k + sum m/(1-u)) / (sum tau a_o/(1-u)), kept feasible.
	bool fixed_point_step(Eigen::VectorXd& x) const {
		int const tau = m_problem.tau;
		Eigen::VectorXd num = Eigen::VectorXd::Zero(x.size());
		Eigen::VectorXd den = Eigen::VectorXd::Zero(x.size());
		for (auto const& p : m_pairs) {
			if (p.m == tau) {
				num[p.s] += tau;
				num[p.t] += tau;
				continue;
			}
			double const om = -std::expm1(x[p.s] + x[p.t]);
			num[p.s] += p.m / om;
			num[p.t] += p.m / om;
			den[p.s] += tau * std::exp(x[p.t]) / om;
			den[p.t] += tau * std::exp(x[p.s]) / om;
		}
		Eigen::VectorXd target = x;
		for (Eigen::Index k = 0; k < x.size(); ++k) {
			if (num[k] > 0.0 && den[k] > 0.0) { target[k] = std::log(num[k] / den[k]); }
		}
		Eigen::VectorXd step = clamp(target) - x;
		for (int halving = 0; halving < 60; ++halving) {
			Eigen::VectorXd trial = x + step;
			if (evaluate(trial).feasible) {
				x = trial;
				return true;
			}
			step *= 0.5;
		}
		return false;
	}

	void iterate(Eigen::VectorXd& x, ProductSolution& sol) const {
		Eval ev = evaluate(x);
		double mu = 1e-8;
		int iter = 0;
		for (; iter < m_options.max_iter; ++iter) {
			if (ev.residual < m_options.tol) { break; }
			bool stepped = false;
			if (!m_options.fixed_point_only) {
				// projected Newton: coordinates held at the box are dropped from the system
				Eigen::MatrixXd J = curvature(x);
				Eigen::VectorXd g = ev.grad;
				for (Eigen::Index k = 0; k < x.size(); ++k) {
					if (!at_bound(x[k], g[k])) { continue; }
					J.row(k).setZero();
					J.col(k).setZero();
					J(k, k) = 1.0;
					g[k] = 0.0;
				}
				double const scale = std::max(1.0, J.diagonal().maxCoeff());
				for (int attempt = 0; attempt < 8 && !stepped; ++attempt) {
					Eigen::MatrixXd damped = J;
					damped.diagonal().array() += mu * scale;
					Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
					if (ldlt.info() != Eigen::Success) {
						mu *= 100.0;
						continue;
					}
					Eigen::VectorXd const delta = ldlt.solve(g);
					if (!delta.allFinite()) {
						mu *= 100.0;
						continue;
					}
					double t = 1.0;
					for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
						Eigen::VectorXd trial = clamp(x + t * delta);
						Eval next = evaluate(trial);
						if (!next.feasible) { continue; }
						long double const gain = next.loglik - ev.loglik;
						bool const armijo = gain >= 1e-4L * g.dot(trial - x);
						// near the optimum the likelihood change drowns in rounding; accept residual decrease
						bool const flat = gain >= -1e-12L * (1.0L + std::fabs(ev.loglik)) && next.residual < ev.residual;
						if (armijo || flat) {
							x = trial;
							ev = std::move(next);
							stepped = true;
							break;
						}
					}
					if (stepped) {
						mu = t == 1.0 ? std::max(mu * 0.1, 1e-14) : mu;
					} else {
						mu *= 100.0;
					}
				}
			}
			if (!stepped) {
				if (!fixed_point_step(x)) { break; }
				++sol.fallback_steps;
				ev = evaluate(x);
				mu = 1e-8;
			}
		}
		sol.iterations = iter;
		sol.residual = ev.residual;
		sol.converged = ev.residual < m_options.tol;
	}

	ProductProblem const& m_problem;
	SolverOptions m_options;
	std::vector<Status> m_status;
	std::vector<std::uint32_t> m_active;
	std::vector<int> m_local;
	std::vector<ProductPair> m_pairs;
};

inline ProductProblem undirected_problem(CountMatrix const& m, int tau) {
	ProductProblem pb{m.size(), tau, {}};
	pb.pairs.reserve(m.size() * (m.size() - 1) / 2);
	for (std::uint32_t i = 0; i < m.size(); ++i) {
		for (std::uint32_t j = i + 1; j < m.size(); ++j) { pb.pairs.push_back({i, j, m(i, j)}); }
	}
	return pb;
}

/// Parameters 0..n-1 are out-activities, n..2n-1 in-activities.
inline ProductProblem directed_problem(CountMatrix const& dm, int tau) {
	std::uint32_t const n = static_cast<std::uint32_t>(dm.size());
	ProductProblem pb{2 * dm.size(), tau, {}};
	pb.pairs.reserve(dm.size() * (dm.size() - 1));
	for (std::uint32_t i = 0; i < n; ++i) {
		for (std::uint32_t j = 0; j < n; ++j) {
			if (i != j) { pb.pairs.push_back({i, n + j, dm(i, j)}); }
		}
	}
	return pb;
}

/// Configuration-model start: a_i = (k_i / tau) / sqrt(2 M / tau).
inline std::vector<double> configuration_start(CountMatrix const& m, int tau) {
	std::size_t const n = m.size();
	std::vector<double> k(n, 0.0);
	double total = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t j = 0; j < n; ++j) {
			if (i != j) { k[i] += m(i, j); }
		}
		total += k[i];
	}
	double const norm = std::sqrt(total / tau); // sqrt(2M / tau)
	std::vector<double> a(n, 0.0);
	if (norm > 0.0) {
		for (std::size_t i = 0; i < n; ++i) { a[i] = (k[i] / tau) / norm; }
	}
	return a;
}

/// Directed configuration start: u_{i->j} = k_i^out k_j^in / (M tau).
inline std::vector<double> directed_configuration_start(CountMatrix const& dm, int tau) {
	std::size_t const n = dm.size();
	std::vector<double> a(2 * n, 0.0);
	double total = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t j = 0; j < n; ++j) {
			if (i == j) { continue; }
			a[i] += dm(i, j);
			a[n + j] += dm(i, j);
			total += dm(i, j);
		}
	}
	double const norm = std::sqrt(total / tau);
	for (double& v : a) { v = norm > 0.0 ? (v / tau) / norm : 0.0; }
	return a;
}

inline void normalize_gauge(std::span<double> out, std::span<double> in) {
	double so = 0.0;
	double si = 0.0;
	for (double v : out) { so += v; }
	for (double v : in) { si += v; }
	if (so <= 0.0 || si <= 0.0) { return; }
	double const c = std::sqrt(si / so);
	for (double& v : out) { v *= c; }
	for (double& v : in) { v /= c; }
}

inline CountMatrix day_adjacency(WindowDay const& day, std::size_t n, bool directed) {
	CountMatrix A(n);
	for (auto const& e : day.edges) {
		if (directed) {
			if (e.forward()) { A(e.u, e.v) = 1; }
			if (e.backward()) { A(e.v, e.u) = 1; }
		} else {
			A(e.u, e.v) = 1;
			A(e.v, e.u) = 1;
		}
	}
	return A;
}

inline void absorb(ActivityEstimate& est, ProductSolution const& sol) {
	est.residual_norm = std::max(est.residual_norm, sol.residual);
	est.converged = est.converged && sol.converged;
	est.iterations += sol.iterations;
	est.fallback_steps += sol.fallback_steps;
}

inline void collect_clipped(ActivityEstimate& est) {
	std::size_t const n = est.size();
	auto scan = [&](int day, auto&& prob) {
		for (BankIndex i = 0; i < n; ++i) {
			for (BankIndex j = is_directed(est.variant) ? 0 : i + 1; j < n; ++j) {
				if (i != j && prob(i, j) >= probability_cap) { est.clipped_pairs.push_back({day, i, j}); }
			}
		}
	};
	if (is_daily(est.variant)) {
		for (std::size_t t = 0; t < est.days(); ++t) {
			scan(static_cast<int>(t), [&](std::size_t i, std::size_t j) {
				return is_directed(est.variant) ? est.daily_out[t][i] * est.daily_in[t][j] : est.daily_a[t][i] * est.daily_a[t][j];
			});
		}
	} else {
		scan(-1, [&](std::size_t i, std::size_t j) { return is_directed(est.variant) ? est.a_out[i] * est.a_in[j] : est.a[i] * est.a[j]; });
	}
}

} // namespace detail

/// Constant activities over the window: solves H_i(a) = sum_j (m_ij - tau a_i a_j) / (1 - a_i a_j) = 0.
inline ActivityEstimate estimate_undirected(WindowedCounts const& window, SolverOptions const& options = {}) {
	if (window.size() < 2) { throw DataError("activity estimation needs at least two active banks"); }
	auto const problem = detail::undirected_problem(window.m, window.tau);
	auto const init = detail::configuration_start(window.m, window.tau);
	auto const sol = detail::ProductSolver(problem, options).solve(init);
	ActivityEstimate est;
	est.window_index = window.index;
	est.variant = Variant::undirected;
	est.tau = window.tau;
	est.converged = true;
	est.a = sol.a;
	detail::absorb(est, sol);
	detail::collect_clipped(est);
	return est;
}

/// Constant in/out activities with u_{i->j} = a_i^out a_j^in; gauge fixed by sum a^out = sum a^in.
inline ActivityEstimate estimate_directed(WindowedCounts const& window, SolverOptions const& options = {}) {
	if (window.size() < 2) { throw DataError("activity estimation needs at least two active banks"); }
	if (window.directed_m.size() != window.size()) { throw DataError("window carries no directed counts"); }
	auto const problem = detail::directed_problem(window.directed_m, window.tau);
	auto const init = detail::directed_configuration_start(window.directed_m, window.tau);
	auto const sol = detail::ProductSolver(problem, options).solve(init);
	std::size_t const n = window.size();
	ActivityEstimate est;
	est.window_index = window.index;
	est.variant = Variant::directed;
	est.tau = window.tau;
	est.converged = true;
	est.a_out.assign(sol.a.begin(), sol.a.begin() + n);
	est.a_in.assign(sol.a.begin() + n, sol.a.end());
	detail::normalize_gauge(est.a_out, est.a_in);
	detail::absorb(est, sol);
	detail::collect_clipped(est);
	return est;
}

/// Per-day activities (tau = 1 per day); banks idle on a day get activity 0 for that day.
inline ActivityEstimate estimate_daily(WindowedCounts const& window, bool directed, SolverOptions const& options = {}) {
	if (window.size() < 2) { throw DataError("activity estimation needs at least two active banks"); }
	std::size_t const n = window.size();
	ActivityEstimate est;
	est.window_index = window.index;
	est.variant = directed ? Variant::directed_daily : Variant::undirected_daily;
	est.tau = window.tau;
	est.converged = true;
	for (auto const& day : window.days) {
		auto const A = detail::day_adjacency(day, n, directed);
		if (directed) {
			auto const problem = detail::directed_problem(A, 1);
			auto const sol = detail::ProductSolver(problem, options).solve(detail::directed_configuration_start(A, 1));
			std::vector<double> out(sol.a.begin(), sol.a.begin() + n);
			std::vector<double> in(sol.a.begin() + n, sol.a.end());
			detail::normalize_gauge(out, in);
			est.daily_out.push_back(std::move(out));
			est.daily_in.push_back(std::move(in));
			detail::absorb(est, sol);
		} else {
			auto const problem = detail::undirected_problem(A, 1);
			auto const sol = detail::ProductSolver(problem, options).solve(detail::configuration_start(A, 1));
			est.daily_a.push_back(sol.a);
			detail::absorb(est, sol);
		}
	}
	detail::collect_clipped(est);
	return est;
}

/// Dispatches on the variant.
inline ActivityEstimate estimate(WindowedCounts const& window, Variant variant, SolverOptions const& options = {}) {
	switch (variant) {
	case Variant::undirected: return estimate_undirected(window, options);
	case Variant::directed: return estimate_directed(window, options);
	case Variant::undirected_daily: return estimate_daily(window, false, options);
	case Variant::directed_daily: return estimate_daily(window, true, options);
	}
	throw ConfigError("unknown variant");
}

/// Log-likelihood of the window counts, constants dropped, u capped at `probability_cap`.
/// Undirected sums over unordered pairs; directed over ordered pairs; daily over days.
inline double log_likelihood(WindowedCounts const& window, ActivityEstimate const& est) {
	std::size_t const n = window.size();
	long double ll = 0.0L;
	auto term = [&](int m, int trials, double u) {
		if (m == 0 && u <= 0.0) { return; }
		double const p = std::clamp(u, 1e-300, probability_cap);
		ll += static_cast<long double>(m) * std::log(p) + static_cast<long double>(trials - m) * std::log1p(-p);
	};
	if (!is_daily(est.variant)) {
		for (std::size_t i = 0; i < n; ++i) {
			for (std::size_t j = is_directed(est.variant) ? 0 : i + 1; j < n; ++j) {
				if (i == j) { continue; }
				int const m = is_directed(est.variant) ? window.directed_m(i, j) : window.m(i, j);
				double const p = is_directed(est.variant) ? est.a_out[i] * est.a_in[j] : est.a[i] * est.a[j];
				term(m, window.tau, p);
			}
		}
		return static_cast<double>(ll);
	}
	for (std::size_t t = 0; t < window.days.size(); ++t) {
		auto const A = detail::day_adjacency(window.days[t], n, is_directed(est.variant));
		for (std::size_t i = 0; i < n; ++i) {
			for (std::size_t j = is_directed(est.variant) ? 0 : i + 1; j < n; ++j) {
				if (i == j) { continue; }
				double const p = is_directed(est.variant) ? est.daily_out[t][i] * est.daily_in[t][j] : est.daily_a[t][i] * est.daily_a[t][j];
				term(A(i, j), 1, p);
			}
		}
	}
	return static_cast<double>(ll);
}

/// Residuals H_i of the undirected first-order conditions at `a`.
inline std::vector<double> undirected_residuals(CountMatrix const& m, int tau, std::span<double const> a) {
	std::vector<double> h(m.size(), 0.0);
	for (std::size_t i = 0; i < m.size(); ++i) {
		for (std::size_t j = 0; j < m.size(); ++j) {
			if (i == j || a[i] == 0.0 || a[j] == 0.0) { continue; }
			double const u = a[i] * a[j];
			h[i] += m(i, j) == tau ? tau : (m(i, j) - tau * u) / (1.0 - u);
		}
	}
	return h;
}

/// Residuals of the 2N directed conditions: [out-system..., in-system...].
inline std::vector<double> directed_residuals(CountMatrix const& dm, int tau, std::span<double const> a_out, std::span<double const> a_in) {
	std::size_t const n = dm.size();
	std::vector<double> h(2 * n, 0.0);
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t j = 0; j < n; ++j) {
			if (i == j || a_out[i] == 0.0 || a_in[j] == 0.0) { continue; }
			double const u = a_out[i] * a_in[j];
			double const term = dm(i, j) == tau ? tau : (dm(i, j) - tau * u) / (1.0 - u);
			h[i] += term;
			h[n + j] += term;
		}
	}
	return h;
}

/// Expected trade-day count M* under the null.
inline double expected_edges(ActivityEstimate const& est) {
	std::size_t const n = est.size();
	double total = 0.0;
	bool const dir = is_directed(est.variant);
	if (!is_daily(est.variant)) {
		for (std::size_t i = 0; i < n; ++i) {
			for (std::size_t j = dir ? 0 : i + 1; j < n; ++j) {
				if (i != j) { total += est.u(i, j); }
			}
		}
		return est.tau * total;
	}
	for (std::size_t t = 0; t < est.days(); ++t) {
		for (std::size_t i = 0; i < n; ++i) {
			for (std::size_t j = dir ? 0 : i + 1; j < n; ++j) {
				if (i != j) { total += est.u(t, i, j); }
			}
		}
	}
	return total;
}

/// Probability that i -> j (or {i,j}) trades at least once in the window under the null.
inline double window_link_probability(ActivityEstimate const& est, std::size_t i, std::size_t j) {
	if (!is_daily(est.variant)) {
		double const u = est.u(i, j);
		return u >= 1.0 ? 1.0 : -std::expm1(est.tau * std::log1p(-u));
	}
	double log_none = 0.0;
	for (std::size_t t = 0; t < est.days(); ++t) {
		double const u = est.u(t, i, j);
		if (u >= 1.0) { return 1.0; }
		log_none += std::log1p(-u);
	}
	return -std::expm1(log_none);
}

/// Expected mean aggregate degree K* = (1/N) sum_{i != j} [1 - (1 - u)^tau].
inline double expected_mean_degree(ActivityEstimate const& est) {
	std::size_t const n = est.size();
	if (n == 0) { return 0.0; }
	double total = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t j = 0; j < n; ++j) {
			if (i == j || (!is_directed(est.variant) && j < i)) { continue; }
			double const p = window_link_probability(est, i, j);
			total += is_directed(est.variant) ? p : 2.0 * p;
		}
	}
	return total / static_cast<double>(n);
}

/// Empirical mean aggregate degree K = (1/N) sum_{i != j} A_ij (out-degree when directed).
inline double empirical_mean_degree(WindowedCounts const& window, bool directed = false) {
	std::size_t const n = window.size();
	if (n == 0) { return 0.0; }
	CountMatrix const& m = directed ? window.directed_m : window.m;
	long long links = 0;
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t j = 0; j < n; ++j) {
			if (i != j && m(i, j) > 0) { ++links; }
		}
	}
	return static_cast<double>(links) / static_cast<double>(n);
}

} // namespace reltie
