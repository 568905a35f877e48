#pragma once

#include "nfcast/dataset.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nfcast {

/// Σ(y - ŷ)² / Σ(y - ȳ)², with ȳ the mean of the observations passed in.
double nmse(std::span<const double> observed, std::span<const double> predicted);

/// sqrt(mean((y - ŷ)²)).
double rmse(std::span<const double> observed, std::span<const double> predicted);

struct Peak {
	Timestamp time;
	double value = 0.0;

	friend bool operator==(const Peak &, const Peak &) = default;
};

/// Maximum value; ties go to the earliest stamp.
Peak find_peak(std::span<const Timestamp> times, std::span<const double> values);

struct ReferenceNumbers {
	std::optional<double> nmse;
	std::optional<double> rmse;
	std::optional<double> peak;
	std::string note;
};

/// Outcome of one experiment at one horizon.
struct EvalReport {
	std::string experiment_id;
	std::string group;   // experiments sharing a group are compared across models
	std::string model_id; // anfis | belfis | persistence
	int horizon = 1;
	std::string strategy;
	std::size_t train_rows = 0;
	std::size_t test_rows = 0;
	std::string test_first;
	std::string test_last;
	std::optional<double> nmse;
	std::optional<double> rmse;
	std::optional<double> baseline_nmse; // persistence on the same rows
	std::optional<Peak> predicted_peak;
	std::optional<Peak> observed_peak;
	std::optional<double> peak_abs_error;
	std::vector<std::pair<std::string, std::vector<double>>> loss_traces; // per trained network
	ReferenceNumbers reference;
	std::string rules;
	std::string data_file;
	std::string data_sha256;
	std::string nmse_convention;
	std::string split_convention;
	std::vector<std::string> warnings;
	std::string config_echo;

	/// Fills peak_abs_error from the two peaks when both exist.
	void finalize_peaks();
};

std::string report_to_json(const EvalReport &report);
EvalReport report_from_json(const std::string &text);

std::string report_csv_header();
std::string report_csv_row(const EvalReport &report);

} // namespace nfcast
