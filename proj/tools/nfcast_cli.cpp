// nfcast: sunspot forecasting experiments from the command line.

#include "nfcast/bench.hpp"
#include "nfcast/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace nfcast;

namespace {

std::string fmt(const std::optional<double> &v) {
	if (!v) {
		return "n/a";
	}
	std::ostringstream o;
	o.precision(4);
	o << *v;
	return o.str();
}

void print_report(const EvalReport &r) {
	std::cout << r.experiment_id << " h=" << r.horizon << " " << r.model_id << " [" << r.test_first << ".."
	          << r.test_last << ", " << r.test_rows << " rows]  nmse=" << fmt(r.nmse) << " rmse=" << fmt(r.rmse)
	          << " baseline=" << fmt(r.baseline_nmse);
	if (r.predicted_peak) {
		std::cout << "  peak " << r.predicted_peak->time.str() << "=" << fmt(r.predicted_peak->value);
	}
	if (r.reference.nmse) {
		std::cout << "  (ref nmse " << fmt(r.reference.nmse) << ")";
	}
	std::cout << '\n';
	for (const auto &w : r.warnings) {
		std::cout << "  warning: " << w << '\n';
	}
}

fs::path locate(const fs::path &file, const fs::path &data_dir) {
	if (fs::exists(file) || file.is_absolute()) {
		return file;
	}
	return data_dir / file;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"Neuro-fuzzy sunspot forecasting bench"};
	app.require_subcommand(1);
	std::string data_dir_flag;
	app.add_option("--data-dir", data_dir_flag, "Data directory (default: $NFCAST_DATA_DIR or ./data)");

	auto *ingest = app.add_subcommand("ingest", "Parse a SILSO file and print the canonical series CSV");
	std::string ingest_file, cadence_text = "yearly", smooth_text = "none", ingest_out;
	ingest->add_option("file", ingest_file)->required();
	ingest->add_option("--cadence", cadence_text)->check(CLI::IsMember({"yearly", "monthly"}));
	ingest->add_option("--smooth", smooth_text)->check(CLI::IsMember({"none", "sidc", "plain"}));
	ingest->add_option("-o,--out", ingest_out, "Write to a file instead of stdout");

	auto *run = app.add_subcommand("run", "Run one experiment config");
	std::string run_config, out_dir = "runs";
	std::optional<std::uint64_t> seed;
	run->add_option("config", run_config)->required();
	run->add_option("-o,--out", out_dir, "Artifact directory");
	run->add_option("--seed", seed, "Override the config seed");

	auto *suite = app.add_subcommand("suite", "Run every *.cfg in a directory");
	std::string suite_dir;
	std::size_t jobs = 1;
	suite->add_option("dir", suite_dir)->required();
	suite->add_option("-o,--out", out_dir, "Artifact directory");
	suite->add_option("--seed", seed, "Override every config seed");
	suite->add_option("-j,--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);

	auto *plot = app.add_subcommand("plotdata", "Emit plot-ready CSV from a forecast or report CSV");
	std::string plot_file, style_text = "overlay";
	plot->add_option("csv", plot_file)->required();
	plot->add_option("--style", style_text)->check(CLI::IsMember({"overlay", "error-curve"}));

	auto *validate = app.add_subcommand("validate", "Check a config and print its canonical form");
	std::string validate_config;
	validate->add_option("config", validate_config)->required();

	CLI11_PARSE(app, argc, argv);

	RunOptions options;
	options.data_dir = data_dir_flag.empty() ? resolve_data_dir("data") : fs::path(data_dir_flag);
	options.seed = seed;

	try {
		if (*ingest) {
			auto series = load_silso_file(locate(ingest_file, options.data_dir).string(), parse_cadence(cadence_text));
			if (smooth_text != "none") {
				series = smooth_13_month(series, smooth_text == "sidc" ? SmoothingKind::sidc : SmoothingKind::plain_mean);
			}
			std::ostringstream out;
			write_series_csv(out, series);
			if (ingest_out.empty()) {
				std::cout << out.str();
			} else {
				write_atomic(ingest_out, out.str());
			}
			std::cerr << series.points().size() << " points " << series.front_time().str() << ".."
			          << series.back_time().str() << '\n';
			return 0;
		}
		if (*run) {
			options.out_dir = out_dir;
			const auto result = run_experiment(load_experiment_config(run_config), options);
			for (const auto &h : result.horizons) {
				print_report(h.report);
			}
			std::cout << "artifacts in " << (fs::path(out_dir) / result.horizons.front().report.experiment_id).string()
			          << " (" << fmt(result.manifest.wall_clock_seconds) << " s)\n";
			return 0;
		}
		if (*suite) {
			options.out_dir = out_dir;
			const auto result = run_suite(suite_dir, options, jobs);
			for (const auto &row : result.rows) {
				if (row.report) {
					print_report(*row.report);
				} else {
					std::cout << row.config_file << " FAILED: " << row.error << '\n';
				}
			}
			for (const auto &v : result.verdicts) {
				std::cout << "group " << v.group << " h=" << v.horizon << ": belfis " << fmt(v.belfis_nmse)
				          << " vs anfis " << fmt(v.anfis_nmse) << (v.belfis_better() ? "  belfis not worse" : "  anfis better")
				          << '\n';
			}
			std::cout << "suite written to " << out_dir << '\n';
			return result.all_ok() ? 0 : 1;
		}
		if (*plot) {
			std::ifstream in(plot_file);
			if (!in) {
				throw ConfigError("cannot open '" + plot_file + "'");
			}
			std::cout << emit_plot_data(in, parse_plot_style(style_text));
			return 0;
		}
		if (*validate) {
			const auto cfg = load_experiment_config(validate_config);
			const auto data = fs::path(cfg.data_file).is_absolute() ? fs::path(cfg.data_file)
			                                                        : options.data_dir / cfg.data_file;
			if (!fs::exists(data)) {
				throw ConfigError("data file '" + data.string() + "' not found");
			}
			std::cout << cfg.echo();
			return 0;
		}
	} catch (const ConfigError &e) {
		std::cerr << "config error: " << e.what() << '\n';
		return 2;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << '\n';
		return 1;
	}
	return 0;
}
