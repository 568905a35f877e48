#pragma once

#include "nfcast/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nfcast {

/// Hyperparameters for hybrid training of one ANFIS.
struct TrainConfig {
	int epochs = 50;
	double learning_rate = 1e-4;
	std::uint64_t rng_seed = 1;
	/// Width floor as a fraction of the training input range.
	double sigma_floor = 1e-6;
	/// Lower bound on the firing-strength normaliser.
	double firing_floor = 1e-12;

	void validate() const;

	friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

/// First-order Sugeno ANFIS with Gaussian premises.
///
/// Rule r fires with w_r = prod_j exp(-(x_j - c_rj)^2 / (2 sigma_rj^2)) and
/// proposes f_r = p_r . x + b_r; the output is sum_r wbar_r f_r with
/// wbar_r = w_r / max(sum_k w_k, firing_floor).
struct AnfisModel {
	std::size_t d = 0;
	std::size_t rules = 0;
	std::vector<double> centers;      // rules x d, row-major
	std::vector<double> sigmas;       // rules x d
	std::vector<double> coefficients; // rules x d
	std::vector<double> biases;       // rules
	double sigma_floor = 0.0;         // absolute, in input units
	double firing_floor = 1e-12;
	TrainConfig config;
	std::uint64_t seed = 0;

	double &center(std::size_t r, std::size_t j) { return centers[r * d + j]; }
	double center(std::size_t r, std::size_t j) const { return centers[r * d + j]; }
	double &sigma(std::size_t r, std::size_t j) { return sigmas[r * d + j]; }
	double sigma(std::size_t r, std::size_t j) const { return sigmas[r * d + j]; }
	double &coefficient(std::size_t r, std::size_t j) { return coefficients[r * d + j]; }
	double coefficient(std::size_t r, std::size_t j) const { return coefficients[r * d + j]; }

	/// Number of consequent parameters, rules * (d + 1).
	std::size_t consequent_count() const { return rules * (d + 1); }

	/// Throws ShapeError / NumericError when the invariants do not hold.
	void validate() const;

	friend bool operator==(const AnfisModel &, const AnfisModel &) = default;
};

/// Zero-consequent model with all rules at the given centres and widths.
AnfisModel make_anfis(std::size_t d, std::vector<double> centers, std::vector<double> sigmas,
                      double sigma_floor = 1e-9, double firing_floor = 1e-12);

/// Seeded k-means++ followed by Lloyd iterations. Returns k x d centres.
std::vector<double> kmeans(std::span<const double> rows, std::size_t d, std::size_t k, std::uint64_t seed);

/// Scatter-partition initialisation: one rule per k-means cluster, widths from
/// the per-dimension distance to the nearest other centre (input std-dev for a
/// single rule), consequents zero.
AnfisModel init_anfis(std::span<const double> rows, std::size_t d, std::size_t rules, std::uint64_t seed,
                      double sigma_floor_fraction = 1e-6, double firing_floor = 1e-12);

struct AnfisOutput {
	double y = 0.0;
	std::vector<double> normalized_firing;
};

AnfisOutput anfis_forward(const AnfisModel &m, std::span<const double> x);

/// Output only; skips the firing-strength copy.
double anfis_predict(const AnfisModel &m, std::span<const double> x);

/// Σ (target - output)² over the batch.
double anfis_sse(const AnfisModel &m, const EmbeddedDataset &batch);

/// Replaces the consequents with the minimum-norm least-squares fit for the
/// current premises. Appends a note to `warnings` when the system has fewer
/// rows than unknowns.
AnfisModel lse_consequents(const AnfisModel &m, const EmbeddedDataset &batch,
                           std::vector<std::string> *warnings = nullptr);

struct PremiseGradient {
	std::vector<double> centers; // dSSE/dc, rules x d
	std::vector<double> sigmas;  // dSSE/dsigma, rules x d
};

PremiseGradient premise_gradient(const AnfisModel &m, const EmbeddedDataset &batch);

/// One full-batch steepest-descent step on SSE over every centre and width.
AnfisModel sd_premises(const AnfisModel &m, const EmbeddedDataset &batch, double learning_rate);

struct LossTrace {
	std::vector<double> epoch_sse; // training SSE right after each epoch's LSE pass
	double final_sse = 0.0;        // after the closing LSE pass

	friend bool operator==(const LossTrace &, const LossTrace &) = default;
};

/// Per epoch: LSE for consequents, then one SD step for premises. A closing LSE
/// pass leaves the returned model optimal in its consequents.
std::pair<AnfisModel, LossTrace> train_hybrid(const AnfisModel &m, const EmbeddedDataset &train,
                                              const TrainConfig &cfg,
                                              std::vector<std::string> *warnings = nullptr);

/// The MAX_MIN channel: exact (max, min) of a lag vector.
std::pair<double, double> max_min(std::span<const double> x);

std::string anfis_to_json(const AnfisModel &m);
AnfisModel anfis_from_json(const std::string &text);

} // namespace nfcast
