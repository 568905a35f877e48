#include "nfcast/forecast.hpp"

#include "nfcast/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace nfcast {

std::string_view to_string(ModelKind kind) {
	switch (kind) {
	case ModelKind::anfis:
		return "anfis";
	case ModelKind::belfis:
		return "belfis";
	case ModelKind::persistence:
		return "persistence";
	}
	return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
	if (text == "anfis") {
		return ModelKind::anfis;
	}
	if (text == "belfis") {
		return ModelKind::belfis;
	}
	if (text == "persistence" || text == "persistence-baseline") {
		return ModelKind::persistence;
	}
	throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

Predictor Predictor::anfis(AnfisModel model, std::size_t h) {
	const auto d = model.d;
	return {d, h, "anfis", std::move(model)};
}

Predictor Predictor::belfis(BelfisModel model, std::size_t h) {
	const auto d = model.d;
	return {d, h, "belfis", std::move(model)};
}

Predictor Predictor::persistence(std::size_t d, std::size_t h) {
	if (d == 0) {
		throw ConfigError("persistence needs at least one lag");
	}
	return {d, h, "persistence", PersistenceModel{}};
}

Predictor Predictor::function(std::size_t d, std::size_t h, Function fn, std::string name) {
	return {d, h, std::move(name), std::move(fn)};
}

double Predictor::operator()(std::span<const double> x) const {
	if (x.size() != d_) {
		throw ShapeError("predictor expects " + std::to_string(d_) + " lags, got " + std::to_string(x.size()));
	}
	struct Visit {
		std::span<const double> x;
		double operator()(const AnfisModel &m) const { return anfis_predict(m, x); }
		double operator()(const BelfisModel &m) const { return belfis_forward(m, x); }
		double operator()(const PersistenceModel &) const { return x.back(); }
		double operator()(const Function &fn) const { return fn(x); }
	};
	return std::visit(Visit{x}, model_);
}

std::string Predictor::model_json() const {
	if (const auto *a = as_anfis()) {
		return anfis_to_json(*a);
	}
	if (const auto *b = as_belfis()) {
		return belfis_to_json(*b);
	}
	if (std::holds_alternative<PersistenceModel>(model_)) {
		return "{\"kind\": \"persistence\", \"d\": " + std::to_string(d_) + "}";
	}
	return {};
}

TrainedPredictor train_predictor(const EmbeddedDataset &train, const ModelSpec &spec,
                                 std::vector<std::string> *warnings) {
	train.validate();
	if (train.empty()) {
		throw ShapeError("training set is empty");
	}
	switch (spec.kind) {
	case ModelKind::persistence:
		return {Predictor::persistence(train.d, train.h), {}};
	case ModelKind::anfis: {
		TrainConfig cfg = spec.anfis;
		cfg.rng_seed = spec.seed;
		const auto init =
		    init_anfis(train.inputs, train.d, spec.anfis_rules, spec.seed, cfg.sigma_floor, cfg.firing_floor);
		auto [model, trace] = train_hybrid(init, train, cfg, warnings);
		auto sse = trace.epoch_sse;
		sse.push_back(trace.final_sse);
		return {Predictor::anfis(std::move(model), train.h), {{"anfis", std::move(sse)}}};
	}
	case ModelKind::belfis: {
		auto [model, traces] = train_belfis(spec.belfis, train, spec.seed, warnings);
		auto with_final = [](const LossTrace &t) {
			auto v = t.epoch_sse;
			v.push_back(t.final_sse);
			return v;
		};
		return {Predictor::belfis(std::move(model), train.h),
		        {{"bl", with_final(traces.bl)}, {"mo", with_final(traces.mo)}, {"cm", with_final(traces.cm)}}};
	}
	}
	throw ConfigError("unhandled model kind");
}

TrainedPredictor train_for_horizon(const TimeSeries &series, std::size_t d, std::size_t h, const ModelSpec &spec,
                                   std::vector<std::string> *warnings) {
	return train_predictor(embed(series, d, h), spec, warnings);
}

std::vector<double> predict_open_loop(const Predictor &p, const EmbeddedDataset &test) {
	if (test.d != p.d() || test.h != p.h()) {
		throw ConfigError("test set embedding (d=" + std::to_string(test.d) + ", h=" + std::to_string(test.h) +
		                  ") differs from the predictor's (d=" + std::to_string(p.d()) +
		                  ", h=" + std::to_string(p.h()) + ")");
	}
	if (test.empty()) {
		throw ShapeError("test set is empty");
	}
	std::vector<double> out;
	out.reserve(test.size());
	for (std::size_t i = 0; i < test.size(); ++i) {
		out.push_back(p(test.input(i)));
	}
	return out;
}

RecursiveForecast predict_recursive(const Predictor &p, std::span<const double> seed_window, std::size_t steps) {
	if (p.h() != 1) {
		throw ConfigError("recursive forecasting needs a one-step predictor, got h=" + std::to_string(p.h()));
	}
	if (seed_window.size() != p.d()) {
		throw ShapeError("seed window has " + std::to_string(seed_window.size()) + " values, predictor needs " +
		                 std::to_string(p.d()));
	}
	if (steps == 0) {
		throw ConfigError("recursive forecast needs at least one step");
	}
	std::vector<double> window(seed_window.begin(), seed_window.end());
	RecursiveForecast out;
	out.fed.reserve(steps);
	out.reported.reserve(steps);
	for (std::size_t k = 0; k < steps; ++k) {
		const double next = p(window);
		out.fed.push_back(next);
		out.reported.push_back(std::max(next, 0.0));
		std::shift_left(window.begin(), window.end(), 1);
		window.back() = next;
	}
	return out;
}

std::vector<double> predict_iterated(const Predictor &p, const EmbeddedDataset &test) {
	if (test.d != p.d()) {
		throw ConfigError("test set embedding dimension differs from the predictor's");
	}
	if (test.empty()) {
		throw ShapeError("test set is empty");
	}
	std::vector<double> out;
	out.reserve(test.size());
	for (std::size_t i = 0; i < test.size(); ++i) {
		out.push_back(predict_recursive(p, test.input(i), test.h).reported.back());
	}
	return out;
}

void write_forecast_csv(std::ostream &out, std::span<const ForecastRow> rows) {
	out << "timestamp,observed,predicted\n";
	for (const auto &r : rows) {
		out << r.time.str() << ',' << (r.observed ? detail::format_double(*r.observed) : "") << ','
		    << detail::format_double(r.predicted) << '\n';
	}
}

std::vector<ForecastRow> read_forecast_csv(std::istream &in) {
	std::string line;
	std::size_t line_no = 0;
	bool header = false;
	std::vector<ForecastRow> rows;
	while (std::getline(in, line)) {
		++line_no;
		const auto body = detail::trim(line);
		if (body.empty()) {
			continue;
		}
		if (!header) {
			if (body != "timestamp,observed,predicted") {
				throw ParseError(line_no, "expected header 'timestamp,observed,predicted'");
			}
			header = true;
			continue;
		}
		const auto cells = detail::split(body, ',');
		if (cells.size() != 3) {
			throw ParseError(line_no, "expected 3 columns, got " + std::to_string(cells.size()));
		}
		ForecastRow row;
		try {
			row.time = Timestamp::parse(cells[0]);
		} catch (const ParseError &) {
			throw ParseError(line_no, "bad timestamp '" + std::string(cells[0]) + "'");
		}
		if (!cells[1].empty()) {
			row.observed = detail::parse_double(cells[1]);
			if (!row.observed) {
				throw ParseError(line_no, "bad observed value '" + std::string(cells[1]) + "'");
			}
		}
		const auto predicted = detail::parse_double(cells[2]);
		if (!predicted) {
			throw ParseError(line_no, "bad predicted value '" + std::string(cells[2]) + "'");
		}
		row.predicted = *predicted;
		rows.push_back(row);
	}
	if (!header) {
		throw ParseError(line_no, "empty forecast file");
	}
	return rows;
}

} // namespace nfcast
