#include "cli.hpp"

#include <reltie/io.hpp>
#include <reltie/reltie.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace reltie;
namespace fs = std::filesystem;

namespace {

class Workspace : public ::testing::Test {
  protected:
	void SetUp() override {
		auto const* info = ::testing::UnitTest::GetInstance()->current_test_info();
		m_root = fs::temp_directory_path() / ("reltie_" + std::string(info->test_suite_name()) + "_" + info->name());
		fs::remove_all(m_root);
		fs::create_directories(m_root);
	}
	void TearDown() override { fs::remove_all(m_root); }

	std::string dir(std::string const& name) const { return (m_root / name).string(); }

	int run(std::vector<std::string> args) {
		std::ostringstream out, err;
		int const code = cli::run(args, out, err);
		last_out = out.str();
		last_err = err.str();
		return code;
	}

	/// simulate into `name` with a short burn-in and planted pairs.
	std::string simulate(std::string const& name, std::vector<std::string> extra = {}) {
		std::vector<std::string> args{"simulate", "-o", dir(name), "--burn-in", "50", "--b2", "3", "--n-windows", "3", "--n-banks", "60"};
		args.insert(args.end(), extra.begin(), extra.end());
		EXPECT_EQ(run(args), cli::ok) << last_err;
		return dir(name);
	}

	fs::path m_root;
	std::string last_out;
	std::string last_err;
};

bool same_files(fs::path const& a, fs::path const& b, std::vector<std::string> const& names) {
	for (auto const& n : names) {
		if (io::read_file(a / n) != io::read_file(b / n)) { return false; }
	}
	return true;
}

} // namespace

TEST(Format, ShortestRoundTrip) {
	std::mt19937_64 rng(1);
	std::uniform_real_distribution<double> d(-1e6, 1e6);
	for (int k = 0; k < 2000; ++k) {
		double const x = d(rng) * std::pow(10.0, static_cast<int>(rng() % 30) - 15);
		EXPECT_EQ(io::parse_number(io::fmt(x)), x);
	}
	EXPECT_EQ(io::fmt(0.1), "0.1");
	EXPECT_EQ(io::fmt(std::nan("")), "nan");
	EXPECT_TRUE(std::isnan(io::parse_number("nan")));
	EXPECT_THROW(io::parse_number("1.2.3"), DataError);
}

TEST(Format, DigestIsStable) {
	EXPECT_EQ(io::hex64(io::fnv1a("")), "cbf29ce484222325");
	EXPECT_EQ(io::hex64(io::fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Snapshots, CsvRoundTripIsByteStable) {
	SyntheticConfig cfg;
	cfg.burn_in = 10;
	cfg.n_windows = 2;
	cfg.relationship_premium = 0.05;
	auto const s = generate(cfg);
	std::ostringstream first;
	io::write_snapshots_csv(first, s.series);
	std::istringstream in(first.str());
	auto const back = io::read_snapshots_csv(in);
	std::ostringstream second;
	io::write_snapshots_csv(second, back);
	EXPECT_EQ(first.str(), second.str());
	ASSERT_EQ(back.days.size(), s.series.days.size());
	for (std::size_t t = 0; t < back.days.size(); ++t) {
		ASSERT_EQ(back.days[t].edges.size(), s.series.days[t].edges.size());
		for (std::size_t k = 0; k < back.days[t].edges.size(); ++k) {
			EXPECT_EQ(back.days[t].edges[k].volume, s.series.days[t].edges[k].volume);
			EXPECT_EQ(back.days[t].edges[k].rate_volume, s.series.days[t].edges[k].rate_volume);
		}
	}
}

TEST(Snapshots, EmptyDaysSurviveRoundTrip) {
	DailySeries s;
	s.banks = {"IT0001", "IT0002"};
	DayEdge e;
	e.u = 0;
	e.v = 1;
	e.trades = 1;
	e.forward_trades = 1;
	e.volume = 2.0;
	e.rate_volume = 3.0;
	s.days.push_back({parse_date("2010-01-04"), {e}});
	s.days.push_back({parse_date("2010-01-05"), {}});
	std::ostringstream out;
	io::write_snapshots_csv(out, s);
	std::istringstream in(out.str());
	auto const back = io::read_snapshots_csv(in);
	ASSERT_EQ(back.days.size(), 2u);
	EXPECT_TRUE(back.days[1].edges.empty());
}

TEST(Estimates, JsonRoundTripIsExact) {
	SyntheticConfig cfg;
	cfg.burn_in = 10;
	cfg.b2 = 2.0;
	auto const s = generate(cfg);
	auto const w = window_counts(s.series, cfg.tau, WindowMode::fixed, true).front();
	for (auto v : {Variant::undirected, Variant::directed, Variant::undirected_daily, Variant::directed_daily}) {
		auto const est = estimate(w, v);
		auto const text = io::to_json(w, est).dump();
		auto const back = io::estimate_from_json(io::json::parse(text), w);
		EXPECT_EQ(back.variant, v);
		EXPECT_EQ(back.a, est.a);
		EXPECT_EQ(back.a_out, est.a_out);
		EXPECT_EQ(back.a_in, est.a_in);
		EXPECT_EQ(back.daily_a, est.daily_a);
		EXPECT_EQ(back.daily_out, est.daily_out);
		EXPECT_EQ(back.converged, est.converged);
		EXPECT_EQ(back.clipped_pairs, est.clipped_pairs);
	}
}

TEST(Ties, CsvRoundTripMatchesWindow) {
	SyntheticConfig cfg;
	cfg.burn_in = 10;
	cfg.b2 = 2.0;
	auto const s = generate(cfg);
	auto const w = window_counts(s.series, cfg.tau, WindowMode::fixed, false).front();
	auto const c = classify_window(w, Variant::undirected);
	std::stringstream csv;
	csv << io::ties_csv_header << '\n';
	io::write_ties_rows(csv, w, c.ties);
	auto const rows = io::read_ties_csv(csv);
	auto const back = io::ties_for_window(rows, w);
	ASSERT_EQ(back.size(), c.ties.size());
	for (std::size_t k = 0; k < back.size(); ++k) {
		EXPECT_EQ(back[k].i, c.ties[k].i);
		EXPECT_EQ(back[k].significant, c.ties[k].significant);
	}
	auto shifted = rows;
	shifted.front().m += 1;
	EXPECT_THROW(io::ties_for_window(shifted, w), DataError);
}

TEST_F(Workspace, UsageErrorsExitWithOne) {
	EXPECT_EQ(run({}), cli::usage);
	EXPECT_EQ(run({"bogus"}), cli::usage);
	EXPECT_EQ(run({"test", "--no-such-flag"}), cli::usage);
	EXPECT_EQ(run({"test", "-o", dir("t")}), cli::usage);
	EXPECT_NE(last_err.find("--input"), std::string::npos);
	EXPECT_EQ(run({"test", "--variant", "sideways", "-i", "x"}), cli::usage);
	EXPECT_EQ(run({"--help"}), cli::ok);
	EXPECT_EQ(run({"--version"}), cli::ok);
}

TEST_F(Workspace, DataErrorsExitWithTwo) {
	EXPECT_EQ(run({"test", "-i", dir("missing.csv"), "-o", dir("t")}), cli::data_error);
	io::write_file(dir("bad.csv"), "not,a,transaction,file\n1,2,3,4\n");
	EXPECT_EQ(run({"ingest", "-i", dir("bad.csv"), "-o", dir("i")}), cli::data_error);
	auto const sim = simulate("sim");
	EXPECT_EQ(run({"test", "-i", sim + "/snapshots.csv", "-o", dir("t"), "--tau", "1000"}), cli::data_error);
}

TEST_F(Workspace, SimulateIsDeterministic) {
	auto const a = simulate("a", {"--seed", "7"});
	auto const b = simulate("b", {"--seed", "7"});
	std::vector<std::string> const files{"transactions.csv", "snapshots.csv", "truth.csv", "banks.csv"};
	EXPECT_TRUE(same_files(a, b, files));
	auto const c = simulate("c", {"--seed", "8"});
	EXPECT_FALSE(same_files(a, c, {"snapshots.csv"}));
}

TEST_F(Workspace, PipelineStagesAndManifests) {
	auto const sim = simulate("sim", {"--premium", "0.05"});
	ASSERT_EQ(run({"ingest", "-i", sim + "/transactions.csv", "-o", dir("ingest")}), cli::ok) << last_err;
	// the ingested snapshots equal the simulated ones
	EXPECT_EQ(io::read_file(sim + "/snapshots.csv"), io::read_file(dir("ingest") + "/snapshots.csv"));
	auto const snaps = dir("ingest") + "/snapshots.csv";
	ASSERT_EQ(run({"estimate", "-i", snaps, "-o", dir("est"), "--strict"}), cli::ok) << last_err;
	ASSERT_EQ(run({"test", "-i", snaps, "-o", dir("test")}), cli::ok) << last_err;
	ASSERT_EQ(run({"test", "-i", snaps, "-o", dir("test2"), "--estimates", dir("est") + "/estimates.json"}), cli::ok) << last_err;
	EXPECT_TRUE(same_files(dir("test"), dir("test2"), {"ties.csv", "nodes.csv", "summary.json"}));

	auto const ties = dir("test") + "/ties.csv";
	for (auto stage : {"duration", "triangles", "compare", "rates"}) {
		EXPECT_EQ(run({stage, "-i", snaps, "--ties", ties, "-o", dir(stage)}), cli::ok) << stage << ": " << last_err;
		EXPECT_TRUE(fs::exists(dir(stage) + "/manifest.json")) << stage;
	}
	EXPECT_EQ(run({"report", "-i", dir("test"), "-o", dir("report")}), cli::ok) << last_err;
	EXPECT_TRUE(fs::exists(dir("report") + "/report.csv"));

	auto const manifest = io::json::parse(io::read_file(dir("test") + "/manifest.json"));
	EXPECT_EQ(manifest.at("stage"), "test");
	EXPECT_EQ(manifest.at("config").at("tau"), 10);
	EXPECT_EQ(manifest.at("config").at("level"), 99.0);
	EXPECT_EQ(manifest.at("config").at("node_level"), 1.0);
	EXPECT_EQ(manifest.at("config").at("bonferroni"), false);
	EXPECT_EQ(manifest.at("config").at("variant"), "undirected");
	EXPECT_EQ(manifest.at("inputs").at(0).at("fnv1a64"), io::file_digest(snaps));
	for (auto const& o : manifest.at("outputs")) {
		EXPECT_EQ(o.at("fnv1a64"), io::file_digest(dir("test") + "/" + o.at("path").get<std::string>()));
	}
}

TEST_F(Workspace, RerunFromManifestIsByteIdentical) {
	auto const sim = simulate("sim");
	ASSERT_EQ(run({"test", "-i", sim + "/snapshots.csv", "-o", dir("first"), "--variant", "directed", "--bonferroni"}), cli::ok) << last_err;
	ASSERT_EQ(run({"test", "--config", dir("first") + "/manifest.json", "-o", dir("second")}), cli::ok) << last_err;
	EXPECT_TRUE(same_files(dir("first"), dir("second"), {"ties.csv", "nodes.csv", "summary.json"}));
	auto const m = io::json::parse(io::read_file(dir("second") + "/manifest.json"));
	EXPECT_EQ(m.at("config").at("variant"), "directed");
	EXPECT_EQ(m.at("config").at("bonferroni"), true);
}

TEST_F(Workspace, FlagsOverrideConfigFileOverDefaults) {
	auto const sim = simulate("sim");
	io::write_file(dir("cfg.json"), R"({"tau": 5, "level": 95.0})");
	auto const snaps = sim + "/snapshots.csv";
	ASSERT_EQ(run({"test", "-i", snaps, "-o", dir("file"), "--config", dir("cfg.json")}), cli::ok) << last_err;
	ASSERT_EQ(run({"test", "-i", snaps, "-o", dir("flag"), "--config", dir("cfg.json"), "--tau", "15"}), cli::ok) << last_err;
	auto const file = io::json::parse(io::read_file(dir("file") + "/manifest.json")).at("config");
	auto const flag = io::json::parse(io::read_file(dir("flag") + "/manifest.json")).at("config");
	EXPECT_EQ(file.at("tau"), 5);
	EXPECT_EQ(file.at("level"), 95.0);
	EXPECT_EQ(flag.at("tau"), 15);
	EXPECT_EQ(flag.at("level"), 95.0);
	EXPECT_EQ(file.at("node_level"), 1.0);
	io::write_file(dir("broken.json"), "{ nope");
	EXPECT_EQ(run({"test", "-i", snaps, "-o", dir("x"), "--config", dir("broken.json")}), cli::usage);
}

TEST_F(Workspace, JobsDoNotChangeOutputs) {
	auto const sim = simulate("sim");
	auto const snaps = sim + "/snapshots.csv";
	ASSERT_EQ(run({"--jobs", "1", "test", "-i", snaps, "-o", dir("j1"), "--variant", "undirected-daily"}), cli::ok) << last_err;
	ASSERT_EQ(run({"test", "--jobs", "4", "-i", snaps, "-o", dir("j4"), "--variant", "undirected-daily"}), cli::ok) << last_err;
	EXPECT_TRUE(same_files(dir("j1"), dir("j4"), {"ties.csv", "nodes.csv", "summary.json"}));
	ASSERT_EQ(run({"power", "--jobs", "1", "-o", dir("p1"), "--replications", "6", "--burn-in", "20"}), cli::ok) << last_err;
	ASSERT_EQ(run({"power", "--jobs", "3", "-o", dir("p3"), "--replications", "6", "--burn-in", "20"}), cli::ok) << last_err;
	EXPECT_TRUE(same_files(dir("p1"), dir("p3"), {"power.csv", "runs.csv"}));
}
