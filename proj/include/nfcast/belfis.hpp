#pragma once

#include "nfcast/anfis.hpp"
#include "nfcast/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nfcast {

/// One scalar min-max map shared by every input component, so that the order
/// of lag values (and therefore MAX_MIN) is preserved under scaling.
struct InputScaler {
	double lo = 0.0;
	double hi = 1.0;

	double apply(double v) const { return (v - lo) / (hi - lo); }
	static InputScaler fit(std::span<const double> values);

	friend bool operator==(const InputScaler &, const InputScaler &) = default;
};

/// Training signal for the MO sub-network.
enum class MoTarget {
	raw,         // the forecast target itself
	bl_residual  // target minus the frozen BL output
};

struct RuleAllocation {
	std::size_t bl = 8;
	std::size_t mo = 4;
	std::size_t cm = 4;

	std::size_t total() const { return bl + mo + cm; }
	std::string str() const;

	friend bool operator==(const RuleAllocation &, const RuleAllocation &) = default;
};

/// Default split of a total rule budget: 16 -> (8,4,4), 28 -> (16,6,6),
/// 38 -> (24,7,7); other totals give BL half and the rest split evenly.
RuleAllocation default_allocation(std::size_t total);

struct BelfisConfig {
	RuleAllocation rules;
	TrainConfig bl;
	TrainConfig mo;
	TrainConfig cm;
	bool normalize = false;
	MoTarget mo_target = MoTarget::raw;

	void validate() const;
};

/// TH (MAX_MIN) and CX feed BL; CX feeds MO; CM combines the BL and MO outputs.
struct BelfisModel {
	std::size_t d = 0;
	AnfisModel bl; // inputs: s ++ (max, min), d + 2
	AnfisModel mo; // inputs: s, d
	AnfisModel cm; // inputs: (eta2, r_o), 2
	std::optional<InputScaler> scaler;
	MoTarget mo_target = MoTarget::raw;

	std::size_t total_rules() const { return bl.rules + mo.rules + cm.rules; }
	void validate() const;

	friend bool operator==(const BelfisModel &, const BelfisModel &) = default;
};

/// Intermediate signals of one forward pass.
struct BelfisSignals {
	std::pair<double, double> th; // (max, min) of the raw lag vector
	std::vector<double> s;        // CX output
	double eta2 = 0.0;            // BL
	double r_o = 0.0;             // MO
	double eta = 0.0;             // CM, the model output
};

BelfisSignals belfis_signals(const BelfisModel &m, std::span<const double> x);
double belfis_forward(const BelfisModel &m, std::span<const double> x);

struct BelfisTraces {
	LossTrace bl;
	LossTrace mo;
	LossTrace cm;
};

/// Divide-and-conquer training: BL, then MO, then CM on the frozen (eta2, r_o)
/// pairs. Each stage is one hybrid ANFIS run seeded from `seed`.
std::pair<BelfisModel, BelfisTraces> train_belfis(const BelfisConfig &cfg, const EmbeddedDataset &train,
                                                  std::uint64_t seed,
                                                  std::vector<std::string> *warnings = nullptr);

std::string belfis_to_json(const BelfisModel &m);
BelfisModel belfis_from_json(const std::string &text);

} // namespace nfcast
