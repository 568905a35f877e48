#pragma once

#include "nfcast/dataset.hpp"
#include "nfcast/forecast.hpp"
#include "nfcast/metrics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nfcast {

enum class SplitKind { by_date, by_count };
enum class Strategy { open_loop, recursive };
enum class MultiHorizon { direct, iterated };

/// One declarative experiment, read from a `key = value` file.
struct ExperimentConfig {
	std::string id;
	std::string group; // runs sharing a group and horizon are compared across models
	std::string description;

	std::string data_file;
	Cadence cadence = Cadence::yearly;
	std::optional<SmoothingKind> smoothing; // nullopt: raw series

	std::size_t embedding = 4;
	std::vector<std::size_t> horizons{1};
	MultiHorizon multi_horizon = MultiHorizon::direct;
	Strategy strategy = Strategy::open_loop;

	SplitKind split = SplitKind::by_date;
	std::optional<Timestamp> train_start; // first training target; nullopt: earliest available
	Timestamp train_end;                  // last training target (date split, recursive)
	Timestamp test_end;                   // last test target (date split)
	Timestamp count_start;                // first target of the count split
	std::size_t n_train = 0;
	std::optional<std::size_t> n_test;
	std::size_t steps = 0; // recursive forecast length

	std::optional<Timestamp> peak_start;
	std::optional<Timestamp> peak_end;

	ModelSpec model;
	std::optional<RuleAllocation> allocation;
	std::size_t rules = 4; // ANFIS rule count or BELFIS total
	std::optional<double> lr_stable_max;

	ReferenceNumbers reference;

	/// Throws ConfigError on inconsistent settings.
	void validate() const;

	/// Canonical `key = value` text; parsing it yields an equal config.
	std::string echo() const;
};

ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);

/// sha256 hex digests.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path &path);

struct RunOptions {
	std::filesystem::path data_dir = "data";
	std::optional<std::filesystem::path> out_dir; // nullopt: no artifacts written
	std::optional<std::uint64_t> seed;            // overrides the config seed
};

/// Data directory from NFCAST_DATA_DIR when set, else `fallback`.
std::filesystem::path resolve_data_dir(const std::filesystem::path &fallback);

struct RunManifest {
	std::string tool_version;
	std::string config_hash;
	std::string data_file;
	std::string data_sha256;
	std::uint64_t seed = 0;
	double wall_clock_seconds = 0.0;
	std::vector<std::string> artifacts;

	std::string to_json() const;
};

struct HorizonResult {
	EvalReport report;
	std::vector<ForecastRow> forecast;
};

struct ExperimentResult {
	std::vector<HorizonResult> horizons;
	RunManifest manifest;
};

/// Loads data, splits, trains, evaluates and (with out_dir) writes
/// report_h<h>.json/.csv, forecast_h<h>.csv and manifest.json under
/// out_dir/<id>. Artifacts of a failed run are removed.
ExperimentResult run_experiment(const ExperimentConfig &cfg, const RunOptions &options);

struct SuiteRow {
	std::string config_file;
	std::string experiment_id;
	bool ok = false;
	std::string error;
	std::optional<EvalReport> report;
	std::optional<double> belfis_minus_anfis; // NMSE delta within group + horizon
};

struct GroupVerdict {
	std::string group;
	int horizon = 1;
	double belfis_nmse = 0.0;
	double anfis_nmse = 0.0;
	bool belfis_better() const { return belfis_nmse <= anfis_nmse; }
};

struct SuiteResult {
	std::vector<SuiteRow> rows;
	std::vector<GroupVerdict> verdicts;
	bool all_ok() const;
};

/// Runs every *.cfg under `dir` (sorted by name) with up to `jobs` workers and,
/// with out_dir, writes suite.csv and suite.json next to the per-run folders.
SuiteResult run_suite(const std::filesystem::path &dir, const RunOptions &options, std::size_t jobs = 1);

std::string suite_csv(const SuiteResult &suite);
std::string suite_json(const SuiteResult &suite);

enum class PlotStyle { overlay, error_curve };
PlotStyle parse_plot_style(std::string_view text);

/// overlay: forecast CSV in, `timestamp,observed,predicted` out.
/// error-curve: report or suite CSV in, `model,horizon,nmse` rows out sorted
/// by model then horizon.
std::string emit_plot_data(std::istream &in, PlotStyle style);

/// Writes through a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path &path, std::string_view content);

} // namespace nfcast
