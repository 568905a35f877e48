#include "nfcast/belfis.hpp"

#include "json_io.hpp"
#include "nfcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace nfcast {

InputScaler InputScaler::fit(std::span<const double> values) {
	if (values.empty()) {
		throw ShapeError("cannot fit a scaler on no values");
	}
	const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
	if (!(*hi > *lo)) {
		throw DegenerateError("training inputs are constant; min-max scaling is undefined");
	}
	return {*lo, *hi};
}

std::string RuleAllocation::str() const {
	return std::to_string(bl) + "," + std::to_string(mo) + "," + std::to_string(cm);
}

RuleAllocation default_allocation(std::size_t total) {
	switch (total) {
	case 16:
		return {8, 4, 4};
	case 28:
		return {16, 6, 6};
	case 38:
		return {24, 7, 7};
	default:
		break;
	}
	if (total < 3) {
		throw ConfigError("BELFIS needs at least 3 rules in total");
	}
	const std::size_t side = std::max<std::size_t>(1, total / 4);
	return {total - 2 * side, side, side};
}

void BelfisConfig::validate() const {
	if (rules.bl == 0 || rules.mo == 0 || rules.cm == 0) {
		throw ConfigError("each BELFIS sub-network needs at least one rule");
	}
	bl.validate();
	mo.validate();
	cm.validate();
}

void BelfisModel::validate() const {
	bl.validate();
	mo.validate();
	cm.validate();
	if (bl.d != d + 2 || mo.d != d || cm.d != 2) {
		throw ShapeError("BELFIS sub-network dimensions must be (d+2, d, 2)");
	}
}

namespace {

void check_input(const BelfisModel &m, std::span<const double> x) {
	if (x.size() != m.d) {
		throw ShapeError("input has " + std::to_string(x.size()) + " entries, BELFIS expects " +
		                 std::to_string(m.d));
	}
}

// CX output followed by the TH pair, both on the scaled axis when normalising.
void sensory(const BelfisModel &m, std::span<const double> x, std::vector<double> &s,
             std::pair<double, double> &th) {
	th = max_min(x);
	s.assign(x.begin(), x.end());
	if (m.scaler) {
		for (double &v : s) {
			v = m.scaler->apply(v);
		}
		th = {m.scaler->apply(th.first), m.scaler->apply(th.second)};
	}
}

} // namespace

BelfisSignals belfis_signals(const BelfisModel &m, std::span<const double> x) {
	check_input(m, x);
	BelfisSignals out;
	sensory(m, x, out.s, out.th);
	std::vector<double> bl_in(out.s);
	bl_in.push_back(out.th.first);
	bl_in.push_back(out.th.second);
	out.eta2 = anfis_predict(m.bl, bl_in);
	out.r_o = anfis_predict(m.mo, out.s);
	const double cm_in[2] = {out.eta2, out.r_o};
	out.eta = anfis_predict(m.cm, cm_in);
	return out;
}

double belfis_forward(const BelfisModel &m, std::span<const double> x) {
	return belfis_signals(m, x).eta;
}

namespace {

EmbeddedDataset batch_like(const EmbeddedDataset &src, std::size_t d) {
	EmbeddedDataset out;
	out.d = d;
	out.h = src.h;
	out.cadence = src.cadence;
	out.inputs.reserve(src.size() * d);
	out.targets.reserve(src.size());
	out.target_times.reserve(src.size());
	return out;
}

template <typename Fn>
auto in_stage(const char *stage, Fn &&fn) {
	const std::string tag = std::string("BELFIS stage ") + stage + ": ";
	try {
		return fn();
	} catch (const NumericError &e) {
		throw NumericError(tag + e.what());
	} catch (const ConfigError &e) {
		throw ConfigError(tag + e.what());
	} catch (const ShapeError &e) {
		throw ShapeError(tag + e.what());
	} catch (const Error &e) {
		throw Error(e.kind(), tag + e.what());
	}
}

std::pair<AnfisModel, LossTrace> fit_stage(const EmbeddedDataset &batch, std::size_t rules, TrainConfig cfg,
                                           std::uint64_t seed, std::vector<std::string> *warnings) {
	cfg.rng_seed = seed;
	const auto init = init_anfis(batch.inputs, batch.d, rules, seed, cfg.sigma_floor, cfg.firing_floor);
	return train_hybrid(init, batch, cfg, warnings);
}

} // namespace

std::pair<BelfisModel, BelfisTraces> train_belfis(const BelfisConfig &cfg, const EmbeddedDataset &train,
                                                  std::uint64_t seed, std::vector<std::string> *warnings) {
	cfg.validate();
	train.validate();
	if (train.empty()) {
		throw ShapeError("BELFIS training set is empty");
	}
	BelfisModel model;
	model.d = train.d;
	model.mo_target = cfg.mo_target;
	if (cfg.normalize) {
		model.scaler = InputScaler::fit(train.inputs);
	}

	auto bl_batch = batch_like(train, train.d + 2);
	auto mo_batch = batch_like(train, train.d);
	std::vector<double> s;
	std::pair<double, double> th;
	for (std::size_t i = 0; i < train.size(); ++i) {
		sensory(model, train.input(i), s, th);
		mo_batch.push_back(s, train.targets[i], train.target_times[i]);
		s.push_back(th.first);
		s.push_back(th.second);
		bl_batch.push_back(s, train.targets[i], train.target_times[i]);
	}

	BelfisTraces traces;
	std::tie(model.bl, traces.bl) =
	    in_stage("bl", [&] { return fit_stage(bl_batch, cfg.rules.bl, cfg.bl, seed, warnings); });

	if (cfg.mo_target == MoTarget::bl_residual) {
		for (std::size_t i = 0; i < train.size(); ++i) {
			mo_batch.targets[i] -= anfis_predict(model.bl, bl_batch.input(i));
		}
	}
	std::tie(model.mo, traces.mo) =
	    in_stage("mo", [&] { return fit_stage(mo_batch, cfg.rules.mo, cfg.mo, seed + 1, warnings); });

	auto cm_batch = batch_like(train, 2);
	for (std::size_t i = 0; i < train.size(); ++i) {
		const double pair[2] = {anfis_predict(model.bl, bl_batch.input(i)), anfis_predict(model.mo, mo_batch.input(i))};
		cm_batch.push_back(pair, train.targets[i], train.target_times[i]);
	}
	std::tie(model.cm, traces.cm) =
	    in_stage("cm", [&] { return fit_stage(cm_batch, cfg.rules.cm, cfg.cm, seed + 2, warnings); });

	return {std::move(model), std::move(traces)};
}

// Serialization -------------------------------------------------------------

std::string belfis_to_json(const BelfisModel &m) {
	nlohmann::ordered_json j;
	j["kind"] = "belfis";
	j["d"] = m.d;
	j["wiring"] = {{"bl", "s ++ th(max,min) -> eta2"}, {"mo", "s -> r_o"}, {"cm", "(eta2, r_o) -> eta"}};
	j["rule_allocation"] = {{"bl", m.bl.rules}, {"mo", m.mo.rules}, {"cm", m.cm.rules}};
	j["mo_target"] = m.mo_target == MoTarget::raw ? "raw" : "bl_residual";
	j["normalize"] = m.scaler ? nlohmann::ordered_json{{"lo", m.scaler->lo}, {"hi", m.scaler->hi}}
	                          : nlohmann::ordered_json(nullptr);
	j["bl"] = detail::anfis_json(m.bl);
	j["mo"] = detail::anfis_json(m.mo);
	j["cm"] = detail::anfis_json(m.cm);
	return j.dump(2);
}

BelfisModel belfis_from_json(const std::string &text) {
	const auto j = nlohmann::ordered_json::parse(text);
	if (j.at("kind").get<std::string>() != "belfis") {
		throw ConfigError("document is not a BELFIS model");
	}
	BelfisModel m;
	m.d = j.at("d").get<std::size_t>();
	m.mo_target = j.at("mo_target").get<std::string>() == "raw" ? MoTarget::raw : MoTarget::bl_residual;
	if (!j.at("normalize").is_null()) {
		m.scaler = InputScaler{j.at("normalize").at("lo").get<double>(), j.at("normalize").at("hi").get<double>()};
	}
	m.bl = detail::anfis_from(j.at("bl"));
	m.mo = detail::anfis_from(j.at("mo"));
	m.cm = detail::anfis_from(j.at("cm"));
	m.validate();
	return m;
}

} // namespace nfcast
