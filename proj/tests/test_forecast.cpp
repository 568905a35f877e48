#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nfcast/error.hpp"
#include "nfcast/forecast.hpp"
#include "nfcast/metrics.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace nfcast;

namespace {

TimeSeries ramp_series(std::size_t n) {
	std::vector<double> v;
	for (std::size_t i = 0; i < n; ++i) {
		v.push_back(5.0 + 2.0 * static_cast<double>(i));
	}
	return testing::yearly_series(1800, v);
}

TimeSeries wave_series(std::size_t n) {
	std::vector<double> v;
	for (std::size_t i = 0; i < n; ++i) {
		const double t = static_cast<double>(i);
		v.push_back(70.0 + 60.0 * std::sin(t * 2.0 * M_PI / 11.0) + 8.0 * std::cos(t * 0.9));
	}
	return testing::yearly_series(1700, v);
}

ModelSpec anfis_spec(std::size_t rules) {
	ModelSpec spec;
	spec.kind = ModelKind::anfis;
	spec.anfis_rules = rules;
	spec.anfis.epochs = 5;
	spec.anfis.learning_rate = 1e-5;
	return spec;
}

} // namespace

TEST_CASE("model kind names") {
	CHECK(parse_model_kind("anfis") == ModelKind::anfis);
	CHECK(parse_model_kind("belfis") == ModelKind::belfis);
	CHECK(parse_model_kind("persistence") == ModelKind::persistence);
	CHECK(to_string(ModelKind::belfis) == "belfis");
	CHECK_THROWS_AS(parse_model_kind("lstm"), ConfigError);
}

TEST_CASE("predict_open_loop") {
	const auto ds = embed(ramp_series(10), 3, 1);
	SUBCASE("last-lag predictor is persistence") {
		const auto last = Predictor::function(3, 1, [](std::span<const double> x) { return x.back(); });
		const auto pred = predict_open_loop(last, ds);
		for (std::size_t i = 0; i < ds.size(); ++i) {
			CHECK(pred[i] == ds.input(i).back());
			CHECK(pred[i] == ds.targets[i] - 2.0);
		}
		CHECK(pred == predict_open_loop(Predictor::persistence(3, 1), ds));
	}
	SUBCASE("errors") {
		const auto p = Predictor::persistence(3, 1);
		CHECK_THROWS_AS(predict_open_loop(p, EmbeddedDataset{.d = 3, .h = 1}), ShapeError);
		CHECK_THROWS_AS(predict_open_loop(Predictor::persistence(2, 1), ds), ConfigError);
		CHECK_THROWS_AS(predict_open_loop(Predictor::persistence(3, 2), ds), ConfigError);
		const std::vector<double> short_x{1.0};
		CHECK_THROWS_AS(p(short_x), ShapeError);
		CHECK_THROWS_AS(Predictor::persistence(0, 1), ConfigError);
	}
}

TEST_CASE("predict_recursive") {
	const std::vector<double> seed{4.0, 9.0, 7.0};
	SUBCASE("constant predictor") {
		const auto c = Predictor::function(3, 1, [](std::span<const double>) { return 12.5; });
		const auto out = predict_recursive(c, seed, 6);
		CHECK(out.reported == std::vector<double>(6, 12.5));
	}
	SUBCASE("persistence is a fixed point") {
		const auto out = predict_recursive(Predictor::persistence(3, 1), seed, 5);
		CHECK(out.reported == std::vector<double>(5, 7.0));
	}
	SUBCASE("window shifts and feeds predictions back") {
		const auto sum = Predictor::function(3, 1, [](std::span<const double> x) { return x[0] + x[1] + x[2]; });
		const auto out = predict_recursive(sum, seed, 3);
		CHECK(out.fed == std::vector<double>{20.0, 36.0, 63.0});
	}
	SUBCASE("negative values feed back unclamped and report clamped") {
		const auto down = Predictor::function(1, 1, [](std::span<const double> x) { return x[0] - 3.0; });
		const auto out = predict_recursive(down, std::vector<double>{4.0}, 3);
		CHECK(out.fed == std::vector<double>{1.0, -2.0, -5.0});
		CHECK(out.reported == std::vector<double>{1.0, 0.0, 0.0});
	}
	SUBCASE("errors") {
		CHECK_THROWS_AS(predict_recursive(Predictor::persistence(3, 2), seed, 2), ConfigError);
		CHECK_THROWS_AS(predict_recursive(Predictor::persistence(2, 1), seed, 2), ShapeError);
		CHECK_THROWS_AS(predict_recursive(Predictor::persistence(3, 1), seed, 0), ConfigError);
	}
}

TEST_CASE("first recursive step equals the open-loop one-step prediction") {
	const auto series = wave_series(120);
	const auto trained = train_for_horizon(series, 4, 1, anfis_spec(3));
	const auto ds = embed(series, 4, 1);
	for (std::size_t i : {0UL, 17UL, 60UL}) {
		const auto open = trained.predictor(ds.input(i));
		const auto rec = predict_recursive(trained.predictor, ds.input(i), 1);
		CHECK(rec.fed[0] == open);
	}
}

TEST_CASE("recursive output ignores values after the seed window") {
	const auto series = wave_series(150);
	const auto trained = train_for_horizon(series.slice(Timestamp::yearly(1700), Timestamp::yearly(1799)), 4, 1,
	                                       anfis_spec(3));
	auto values = series.values();
	const std::vector<double> seed(values.begin() + 96, values.begin() + 100);
	const auto clean = predict_recursive(trained.predictor, seed, 30);
	for (std::size_t i = 100; i < values.size(); ++i) {
		values[i] = -1e6;
	}
	const std::vector<double> seed_again(values.begin() + 96, values.begin() + 100);
	CHECK(predict_recursive(trained.predictor, seed_again, 30).fed == clean.fed);
}

TEST_CASE("predict_iterated") {
	const auto ds = embed(ramp_series(12), 2, 3);
	const auto linear =
	    Predictor::function(2, 1, [](std::span<const double> x) { return 2.0 * x[1] - x[0]; }, "extrapolate");
	const auto pred = predict_iterated(linear, ds);
	for (std::size_t i = 0; i < ds.size(); ++i) {
		CHECK(pred[i] == doctest::Approx(ds.targets[i]));
	}
	CHECK_THROWS_AS(predict_iterated(Predictor::persistence(3, 1), ds), ConfigError);
}

TEST_CASE("train_for_horizon") {
	SUBCASE("linear series is fitted almost exactly") {
		const auto series = ramp_series(40);
		const auto trained = train_for_horizon(series, 3, 1, anfis_spec(2));
		const auto ds = embed(series, 3, 1);
		CHECK(nmse(ds.targets, predict_open_loop(trained.predictor, ds)) < 1e-12);
		CHECK(trained.predictor.h() == 1);
		CHECK(trained.predictor.d() == 3);
		REQUIRE(trained.loss_traces.size() == 1);
		CHECK(trained.loss_traces[0].first == "anfis");
		CHECK(trained.loss_traces[0].second.size() == 6);
	}
	SUBCASE("horizon is recorded and the target shifted") {
		const auto trained = train_for_horizon(ramp_series(40), 3, 4, anfis_spec(2));
		CHECK(trained.predictor.h() == 4);
		const std::vector<double> x{5.0, 7.0, 9.0};
		CHECK(trained.predictor(x) == doctest::Approx(17.0).epsilon(1e-8));
	}
	SUBCASE("same seed gives the same predictor") {
		const auto series = wave_series(100);
		ModelSpec spec;
		spec.kind = ModelKind::belfis;
		spec.belfis.rules = {4, 2, 2};
		for (auto *t : {&spec.belfis.bl, &spec.belfis.mo, &spec.belfis.cm}) {
			t->epochs = 4;
			t->learning_rate = 1e-6;
		}
		spec.seed = 3;
		const auto a = train_for_horizon(series, 4, 2, spec);
		const auto b = train_for_horizon(series, 4, 2, spec);
		REQUIRE(a.predictor.as_belfis() != nullptr);
		CHECK(*a.predictor.as_belfis() == *b.predictor.as_belfis());
		CHECK(a.predictor.model_json() == b.predictor.model_json());
		CHECK(a.loss_traces.size() == 3);
		const auto pa = train_for_horizon(series, 4, 1, anfis_spec(3));
		const auto pb = train_for_horizon(series, 4, 1, anfis_spec(3));
		CHECK(*pa.predictor.as_anfis() == *pb.predictor.as_anfis());
	}
	SUBCASE("persistence needs no training") {
		ModelSpec spec;
		spec.kind = ModelKind::persistence;
		const auto trained = train_for_horizon(wave_series(30), 4, 2, spec);
		CHECK(trained.loss_traces.empty());
		CHECK(trained.predictor.name() == "persistence");
	}
	SUBCASE("training errors propagate") {
		CHECK_THROWS_AS(train_for_horizon(ramp_series(8), 3, 1, anfis_spec(10)), ConfigError);
		CHECK_THROWS_AS(train_for_horizon(ramp_series(3), 3, 1, anfis_spec(1)), LengthError);
	}
}

TEST_CASE("forecast CSV") {
	const std::vector<ForecastRow> rows{{Timestamp::monthly(2009, 1), 1.5, 2.25},
	                                    {Timestamp::monthly(2009, 2), std::nullopt, 0.1 + 0.2},
	                                    {Timestamp::monthly(2009, 3), 0.0, -0.0}};
	std::stringstream io;
	write_forecast_csv(io, rows);
	CHECK(io.str().rfind("timestamp,observed,predicted\n", 0) == 0);
	CHECK(read_forecast_csv(io) == rows);

	std::istringstream bad_header("time,obs,pred\n2009-01,1,2\n");
	CHECK_THROWS_AS(read_forecast_csv(bad_header), ParseError);
	std::istringstream bad_value("timestamp,observed,predicted\n2009-01,1,x\n");
	CHECK_THROWS_AS(read_forecast_csv(bad_value), ParseError);
	std::istringstream bad_cols("timestamp,observed,predicted\n2009-01,1\n");
	CHECK_THROWS_AS(read_forecast_csv(bad_cols), ParseError);
	std::istringstream empty("");
	CHECK_THROWS_AS(read_forecast_csv(empty), ParseError);
}
