#pragma once

#include "nfcast/anfis.hpp"
#include "nfcast/belfis.hpp"
#include "nfcast/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace nfcast {

enum class ModelKind { anfis, belfis, persistence };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Outputs the most recent lag, whatever the horizon.
struct PersistenceModel {
	friend bool operator==(const PersistenceModel &, const PersistenceModel &) = default;
};

/// A trained model together with the embedding it was trained for.
class Predictor {
public:
	using Function = std::function<double(std::span<const double>)>;

	static Predictor anfis(AnfisModel model, std::size_t h);
	static Predictor belfis(BelfisModel model, std::size_t h);
	static Predictor persistence(std::size_t d, std::size_t h);
	/// Arbitrary callable, mainly for tests and baselines.
	static Predictor function(std::size_t d, std::size_t h, Function fn, std::string name = "function");

	std::size_t d() const { return d_; }
	std::size_t h() const { return h_; }
	const std::string &name() const { return name_; }

	double operator()(std::span<const double> x) const;

	const AnfisModel *as_anfis() const { return std::get_if<AnfisModel>(&model_); }
	const BelfisModel *as_belfis() const { return std::get_if<BelfisModel>(&model_); }

	/// JSON document of the underlying model; empty for callables.
	std::string model_json() const;

private:
	Predictor(std::size_t d, std::size_t h, std::string name,
	          std::variant<AnfisModel, BelfisModel, PersistenceModel, Function> model)
	    : d_(d), h_(h), name_(std::move(name)), model_(std::move(model)) {}

	std::size_t d_;
	std::size_t h_;
	std::string name_;
	std::variant<AnfisModel, BelfisModel, PersistenceModel, Function> model_;
};

/// Everything needed to train one predictor.
struct ModelSpec {
	ModelKind kind = ModelKind::anfis;
	std::size_t anfis_rules = 4;
	TrainConfig anfis;
	BelfisConfig belfis;
	std::uint64_t seed = 1;
};

struct TrainedPredictor {
	Predictor predictor;
	std::vector<std::pair<std::string, std::vector<double>>> loss_traces;
};

/// Trains on an already embedded dataset; the predictor records its d and h.
TrainedPredictor train_predictor(const EmbeddedDataset &train, const ModelSpec &spec,
                                 std::vector<std::string> *warnings = nullptr);

/// Direct strategy: embeds `series` with horizon h and trains on every row.
TrainedPredictor train_for_horizon(const TimeSeries &series, std::size_t d, std::size_t h, const ModelSpec &spec,
                                   std::vector<std::string> *warnings = nullptr);

/// One prediction per test row from its true lags.
std::vector<double> predict_open_loop(const Predictor &p, const EmbeddedDataset &test);

struct RecursiveForecast {
	std::vector<double> fed;      // values fed back into the window (unclamped)
	std::vector<double> reported; // fed values clamped at zero
};

/// Closed loop: each prediction is appended to the window and the oldest lag
/// dropped. Needs an h = 1 predictor and exactly d seed values.
RecursiveForecast predict_recursive(const Predictor &p, std::span<const double> seed_window, std::size_t steps);

/// Iterated multi-step alternative to the direct strategy: runs an h = 1
/// predictor `test.h` steps from each row's true lags and keeps the last
/// reported value.
std::vector<double> predict_iterated(const Predictor &p, const EmbeddedDataset &test);

struct ForecastRow {
	Timestamp time;
	std::optional<double> observed;
	double predicted = 0.0;

	friend bool operator==(const ForecastRow &, const ForecastRow &) = default;
};

/// CSV `timestamp,observed,predicted`; an unknown observation is an empty cell.
void write_forecast_csv(std::ostream &out, std::span<const ForecastRow> rows);
std::vector<ForecastRow> read_forecast_csv(std::istream &in);

} // namespace nfcast
