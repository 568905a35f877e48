#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nfcast/bench.hpp"
#include "nfcast/error.hpp"
#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace nfcast;
namespace fs = std::filesystem;

namespace {

const char *const kSmallConfig = R"(# tiny yearly experiment
id = small
data_file = SN_y_v1.txt
cadence = yearly
embedding = 3
horizons = 1, 2
split = date
train_start = 1800
train_end = 1900
test_end = 1930
model = anfis
rules = 3
epochs = 4
learning_rate = 1e-5
seed = 2
ref_nmse = 0.5
)";

std::string read_file(const fs::path &p) {
	std::ifstream in(p, std::ios::binary);
	std::ostringstream s;
	s << in.rdbuf();
	return s.str();
}

RunOptions options_in(const fs::path &out) {
	RunOptions o;
	o.data_dir = testing::data_dir();
	o.out_dir = out;
	return o;
}

std::string with_line(std::string text, const std::string &key, const std::string &value) {
	std::istringstream in(text);
	std::ostringstream out;
	std::string line;
	bool replaced = false;
	while (std::getline(in, line)) {
		if (line.rfind(key + " =", 0) == 0) {
			out << key << " = " << value << '\n';
			replaced = true;
		} else {
			out << line << '\n';
		}
	}
	if (!replaced) {
		out << key << " = " << value << '\n';
	}
	return out.str();
}

} // namespace

TEST_CASE("config parsing") {
	const auto cfg = parse_experiment_config(kSmallConfig);
	CHECK(cfg.id == "small");
	CHECK(cfg.group == "small");
	CHECK(cfg.horizons == std::vector<std::size_t>{1, 2});
	CHECK(cfg.model.kind == ModelKind::anfis);
	CHECK(cfg.model.anfis.epochs == 4);
	CHECK(cfg.model.seed == 2);
	CHECK(cfg.train_start == Timestamp::yearly(1800));
	CHECK(cfg.reference.nmse == 0.5);

	SUBCASE("echo round trips") {
		const auto again = parse_experiment_config(cfg.echo());
		CHECK(again.echo() == cfg.echo());
		for (const auto &entry : fs::directory_iterator(testing::config_dir())) {
			const auto bundled = load_experiment_config(entry.path());
			CHECK(parse_experiment_config(bundled.echo()).echo() == bundled.echo());
		}
	}
	SUBCASE("BELFIS stage overrides") {
		auto text = with_line(kSmallConfig, "model", "belfis");
		text = with_line(text, "rules", "16");
		text = with_line(text, "mo.learning_rate", "1e-3");
		const auto b = parse_experiment_config(text);
		CHECK(b.model.belfis.rules == RuleAllocation{8, 4, 4});
		CHECK(b.model.belfis.bl.learning_rate == 1e-5);
		CHECK(b.model.belfis.mo.learning_rate == 1e-3);
		CHECK(b.model.belfis.cm.epochs == 4);
		const auto custom = parse_experiment_config(with_line(text, "allocation", "10,3,3"));
		CHECK(custom.model.belfis.rules == RuleAllocation{10, 3, 3});
		CHECK_THROWS_AS(parse_experiment_config(with_line(text, "allocation", "10,3,4")), ConfigError);
	}
	SUBCASE("errors") {
		CHECK_THROWS_AS(parse_experiment_config(std::string(kSmallConfig) + "id = twice\n"), ParseError);
		CHECK_THROWS_AS(parse_experiment_config(std::string(kSmallConfig) + "colour = blue\n"), ConfigError);
		CHECK_THROWS_AS(parse_experiment_config(std::string(kSmallConfig) + "no equals sign\n"), ParseError);
		CHECK_THROWS_AS(parse_experiment_config("id = x\ncadence = yearly\nmodel = anfis\n"), ConfigError);
		CHECK_THROWS_AS(parse_experiment_config(with_line(kSmallConfig, "model", "lstm")), ConfigError);
		CHECK_THROWS_AS(parse_experiment_config(with_line(kSmallConfig, "horizons", "1, 0")), ConfigError);
		CHECK_THROWS_AS(parse_experiment_config(with_line(kSmallConfig, "test_end", "1890")), ConfigError);
		CHECK_THROWS_AS(parse_experiment_config(with_line(kSmallConfig, "epochs", "many")), ConfigError);
		CHECK_THROWS_AS(parse_experiment_config(with_line(kSmallConfig, "id", "has space")), ConfigError);
		CHECK_THROWS_AS(parse_experiment_config(with_line(kSmallConfig, "smoothing", "sidc")), ConfigError);
		CHECK_THROWS_AS(load_experiment_config("/nonexistent.cfg"), ConfigError);
	}
}

TEST_CASE("sha256") {
	CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
	CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
	const auto dir = testing::scratch_dir("sha");
	write_atomic(dir / "f.txt", "abc");
	CHECK(sha256_file(dir / "f.txt") == sha256_hex("abc"));
	CHECK_FALSE(fs::exists(dir / "f.txt.tmp"));
	write_atomic(dir / "f.txt", "abcd");
	CHECK(read_file(dir / "f.txt") == "abcd");
}

TEST_CASE("data directory override") {
	::setenv("NFCAST_DATA_DIR", "/some/where", 1);
	CHECK(resolve_data_dir("data") == fs::path("/some/where"));
	::unsetenv("NFCAST_DATA_DIR");
	CHECK(resolve_data_dir("data") == fs::path("data"));
}

TEST_CASE("run_experiment writes reproducible artifacts") {
	const auto out = testing::scratch_dir("run");
	const auto cfg = parse_experiment_config(kSmallConfig);
	const auto a = run_experiment(cfg, options_in(out / "a"));
	const auto b = run_experiment(cfg, options_in(out / "b"));
	REQUIRE(a.horizons.size() == 2);

	for (const char *name : {"report_h1.json", "report_h2.json", "report_h1.csv", "forecast_h1.csv", "forecast_h2.csv"}) {
		INFO(name);
		CHECK(read_file(out / "a" / "small" / name) == read_file(out / "b" / "small" / name));
	}
	CHECK(fs::exists(out / "a" / "small" / "manifest.json"));
	CHECK(a.manifest.data_sha256 == sha256_file(testing::data_dir() / "SN_y_v1.txt"));
	CHECK(a.manifest.config_hash == sha256_hex(cfg.echo()));
	CHECK(a.manifest.artifacts.size() == 7);
	CHECK(read_file(out / "a" / "small" / "manifest.json").find("wall_clock_seconds") != std::string::npos);
	CHECK(read_file(out / "a" / "small" / "report_h1.json").find("wall_clock") == std::string::npos);

	const auto &r = a.horizons[0].report;
	CHECK(r.test_first == "1901");
	CHECK(r.test_last == "1930");
	CHECK(r.test_rows == 30);
	CHECK(r.train_rows == 101);
	CHECK(r.nmse.has_value());
	CHECK(r.baseline_nmse.has_value());
	CHECK(r.reference.nmse == 0.5);
	CHECK(a.horizons[1].report.horizon == 2);

	SUBCASE("the echoed config reruns to the same report") {
		const auto echoed = parse_experiment_config(r.config_echo);
		const auto c = run_experiment(echoed, options_in(out / "c"));
		CHECK(read_file(out / "c" / "small" / "report_h1.json") == read_file(out / "a" / "small" / "report_h1.json"));
	}
	SUBCASE("seed override") {
		RunOptions o = options_in(out / "d");
		o.seed = 9;
		const auto d = run_experiment(cfg, o);
		CHECK(d.manifest.seed == 9);
		CHECK(d.horizons[0].report.config_echo.find("seed = 9") != std::string::npos);
	}
	SUBCASE("forecast CSV feeds the overlay plot") {
		std::ifstream in(out / "a" / "small" / "forecast_h1.csv");
		const auto plot = emit_plot_data(in, PlotStyle::overlay);
		CHECK(std::count(plot.begin(), plot.end(), '\n') == 31);
	}
}

TEST_CASE("persistence baseline runs without training") {
	const auto cfg = parse_experiment_config(with_line(kSmallConfig, "model", "persistence"));
	RunOptions o;
	o.data_dir = testing::data_dir();
	const auto result = run_experiment(cfg, o);
	const auto &r = result.horizons[0].report;
	CHECK(r.model_id == "persistence");
	CHECK(r.loss_traces.empty());
	CHECK(r.nmse == r.baseline_nmse);
}

TEST_CASE("windows past the data end are clamped with a warning") {
	const auto cfg = parse_experiment_config(with_line(kSmallConfig, "test_end", "2030"));
	RunOptions o;
	o.data_dir = testing::data_dir();
	const auto r = run_experiment(cfg, o).horizons[0].report;
	CHECK(r.test_last == "2008");
	CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("recursive strategy") {
	auto text = with_line(kSmallConfig, "strategy", "recursive");
	text = with_line(text, "horizons", "1");
	text = with_line(text, "steps", "11");
	text = with_line(text, "train_end", "1995");
	const auto cfg = parse_experiment_config(text);
	RunOptions o;
	o.data_dir = testing::data_dir();
	const auto hr = run_experiment(cfg, o).horizons[0];
	REQUIRE(hr.forecast.size() == 11);
	CHECK(hr.forecast.front().time == Timestamp::yearly(1996));
	CHECK(hr.forecast.back().time == Timestamp::yearly(2006));
	CHECK(hr.report.strategy == "recursive");
	for (const auto &row : hr.forecast) {
		CHECK(row.predicted >= 0.0);
		CHECK(row.observed.has_value());
	}
}

TEST_CASE("failed runs leave no artifacts") {
	const auto out = testing::scratch_dir("fail");
	const auto cfg = parse_experiment_config(with_line(kSmallConfig, "data_file", "missing.txt"));
	CHECK_THROWS(run_experiment(cfg, options_in(out)));
	CHECK_FALSE(fs::exists(out / "small"));
	const auto too_many_rules = parse_experiment_config(with_line(kSmallConfig, "rules", "500"));
	CHECK_THROWS_AS(run_experiment(too_many_rules, options_in(out)), ConfigError);
	CHECK_FALSE(fs::exists(out / "small"));
}

TEST_CASE("suite") {
	const auto scratch = testing::scratch_dir("suite");
	SUBCASE("the two cycles 16-18 configs give a two-row table with a delta") {
		fs::create_directories(scratch / "cfg");
		for (const char *name : {"cycles_16_18_anfis.cfg", "cycles_16_18_belfis.cfg"}) {
			fs::copy_file(testing::config_dir() / name, scratch / "cfg" / name);
		}
		const auto suite = run_suite(scratch / "cfg", options_in(scratch / "out"), 2);
		REQUIRE(suite.rows.size() == 2);
		CHECK(suite.all_ok());
		REQUIRE(suite.verdicts.size() == 1);
		CHECK(suite.verdicts[0].group == "cycles_16_18");
		REQUIRE(suite.rows[0].belfis_minus_anfis.has_value());
		CHECK(*suite.rows[0].belfis_minus_anfis ==
		      doctest::Approx(*suite.rows[1].report->nmse - *suite.rows[0].report->nmse));
		const auto csv = read_file(scratch / "out" / "suite.csv");
		CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
		CHECK(fs::exists(scratch / "out" / "suite.json"));

		std::istringstream in(csv);
		const auto curve = emit_plot_data(in, PlotStyle::error_curve);
		CHECK(curve.rfind("model,horizon,nmse\nanfis,1,", 0) == 0);
		CHECK(curve.find("\nbelfis,1,") != std::string::npos);
	}
	SUBCASE("failures are recorded per row and duplicates rejected") {
		fs::create_directories(scratch / "cfg");
		std::ofstream(scratch / "cfg" / "a.cfg") << kSmallConfig;
		std::ofstream(scratch / "cfg" / "b.cfg") << with_line(kSmallConfig, "data_file", "missing.txt");
		std::ofstream(scratch / "cfg" / "c.cfg") << kSmallConfig;
		std::ofstream(scratch / "cfg" / "d.cfg") << "broken";
		const auto suite = run_suite(scratch / "cfg", options_in(scratch / "out"), 3);
		CHECK_FALSE(suite.all_ok());
		REQUIRE(suite.rows.size() == 6);
		CHECK(suite.rows[0].ok);
		CHECK(suite.rows[1].ok);
		CHECK_FALSE(suite.rows[2].ok);
		CHECK_FALSE(suite.rows[3].ok);
		CHECK(suite.rows[3].error.find("duplicate") != std::string::npos);
		CHECK_FALSE(suite.rows[5].ok);
		const auto csv = read_file(scratch / "out" / "suite.csv");
		CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
	}
	SUBCASE("empty directory") {
		fs::create_directories(scratch / "empty");
		CHECK_THROWS_AS(run_suite(scratch / "empty", options_in(scratch / "out")), ConfigError);
		CHECK_THROWS_AS(run_suite(scratch / "absent", options_in(scratch / "out")), ConfigError);
	}
}

TEST_CASE("plot data") {
	SUBCASE("three-point overlay") {
		std::istringstream in("timestamp,observed,predicted\n2009,1,2\n2010,,3.5\n2011,4,4\n");
		const auto out = emit_plot_data(in, PlotStyle::overlay);
		CHECK(out == "timestamp,observed,predicted\n2009,1,2\n2010,,3.5\n2011,4,4\n");
	}
	SUBCASE("error curve sorted by model then horizon") {
		std::istringstream in("model,horizon,nmse,extra\nbelfis,10,0.2,x\nanfis,5,0.1,\"a,b\"\nbelfis,1,0.01,y\n"
		                      "anfis,1,0.02,z\n");
		CHECK(emit_plot_data(in, PlotStyle::error_curve) ==
		      "model,horizon,nmse\nanfis,1,0.02\nanfis,5,0.1\nbelfis,1,0.01\nbelfis,10,0.2\n");
	}
	SUBCASE("errors") {
		std::istringstream empty("timestamp,observed,predicted\n");
		CHECK_THROWS_AS(emit_plot_data(empty, PlotStyle::overlay), ShapeError);
		std::istringstream bad("timestamp,observed,predicted\n2009,x,1\n");
		CHECK_THROWS_AS(emit_plot_data(bad, PlotStyle::overlay), ParseError);
		std::istringstream no_cols("a,b\n1,2\n");
		CHECK_THROWS_AS(emit_plot_data(no_cols, PlotStyle::error_curve), ParseError);
		std::istringstream bad_nmse("model,horizon,nmse\nanfis,1,zz\n");
		CHECK_THROWS_AS(emit_plot_data(bad_nmse, PlotStyle::error_curve), ParseError);
		CHECK_THROWS_AS(parse_plot_style("bars"), ConfigError);
	}
}

TEST_CASE("training SSE does not rise at the documented stable learning rate") {
	RunOptions o;
	o.data_dir = testing::data_dir();
	for (const auto &entry : fs::directory_iterator(testing::config_dir())) {
		auto cfg = load_experiment_config(entry.path());
		REQUIRE_MESSAGE(cfg.lr_stable_max.has_value(), entry.path().filename().string());
		const double lr = *cfg.lr_stable_max;
		cfg.model.anfis.learning_rate = lr;
		cfg.model.belfis.bl.learning_rate = lr;
		cfg.model.belfis.mo.learning_rate = lr;
		cfg.model.belfis.cm.learning_rate = lr;
		for (const auto &hr : run_experiment(cfg, o).horizons) {
			for (const auto &[stage, sse] : hr.report.loss_traces) {
				INFO(cfg.id << " h=" << hr.report.horizon << " stage " << stage << ": " << sse.front() << " -> "
				            << sse.back());
				CHECK(sse.back() <= sse.front());
			}
		}
	}
}
