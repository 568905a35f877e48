#include "nfcast/bench.hpp"

#include "nfcast/error.hpp"
#include "text.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#ifndef NFCAST_VERSION
#define NFCAST_VERSION "dev"
#endif

namespace nfcast {

namespace fs = std::filesystem;

namespace {

const char *const kNmseConvention = "sum((y - yhat)^2) / sum((y - mean(y))^2), mean over the evaluated window";
const char *const kDateSplitConvention = "inclusive-left: a target stamped on the boundary belongs to train";
const char *const kCountSplitConvention = "first n_train rows train, the following n_test rows test";
const char *const kRecursiveConvention =
    "closed loop from the last d values up to train_end; predictions fed back unclamped, reported clamped at 0";

std::string_view to_string(SplitKind k) { return k == SplitKind::by_date ? "date" : "count"; }
std::string_view to_string(Strategy s) { return s == Strategy::open_loop ? "open_loop" : "recursive"; }
std::string_view to_string(MultiHorizon m) { return m == MultiHorizon::direct ? "direct" : "iterated"; }

std::string_view smoothing_name(const std::optional<SmoothingKind> &s) {
	if (!s) {
		return "none";
	}
	return *s == SmoothingKind::sidc ? "sidc" : "plain";
}

std::string_view mo_target_name(MoTarget t) { return t == MoTarget::raw ? "raw" : "bl_residual"; }

double to_double(std::string_view key, std::string_view v) {
	const auto d = detail::parse_double(v);
	if (!d) {
		throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
	}
	return *d;
}

std::size_t to_size(std::string_view key, std::string_view v) {
	const auto i = detail::parse_int(v);
	if (!i || *i < 0) {
		throw ConfigError("key '" + std::string(key) + "': expected a non-negative integer, got '" +
		                  std::string(v) + "'");
	}
	return static_cast<std::size_t>(*i);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
	std::uint64_t out = 0;
	v = detail::trim(v);
	const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
	if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
		throw ConfigError("key '" + std::string(key) + "': expected an unsigned integer");
	}
	return out;
}

bool to_bool(std::string_view key, std::string_view v) {
	if (v == "true" || v == "1" || v == "yes") {
		return true;
	}
	if (v == "false" || v == "0" || v == "no") {
		return false;
	}
	throw ConfigError("key '" + std::string(key) + "': expected true or false");
}

Timestamp to_stamp(std::string_view key, std::string_view v) {
	try {
		return Timestamp::parse(v);
	} catch (const ParseError &) {
		throw ConfigError("key '" + std::string(key) + "': bad timestamp '" + std::string(v) + "'");
	}
}

std::string num(double v) { return detail::format_double(v); }

} // namespace

// Config parsing ------------------------------------------------------------

ExperimentConfig parse_experiment_config(std::string_view text) {
	std::map<std::string, std::string, std::less<>> kv;
	std::size_t line_no = 0;
	std::istringstream in{std::string(text)};
	std::string line;
	while (std::getline(in, line)) {
		++line_no;
		const auto body = detail::trim(line);
		if (body.empty() || body.front() == '#') {
			continue;
		}
		const auto eq = body.find('=');
		if (eq == std::string_view::npos) {
			throw ParseError(line_no, "expected 'key = value'");
		}
		const std::string key(detail::trim(body.substr(0, eq)));
		const std::string value(detail::trim(body.substr(eq + 1)));
		if (key.empty()) {
			throw ParseError(line_no, "empty key");
		}
		if (!kv.emplace(key, value).second) {
			throw ParseError(line_no, "duplicate key '" + key + "'");
		}
	}

	ExperimentConfig c;
	std::set<std::string, std::less<>> used;
	auto get = [&](std::string_view key) -> std::optional<std::string> {
		const auto it = kv.find(key);
		if (it == kv.end()) {
			return std::nullopt;
		}
		used.insert(it->first);
		return it->second;
	};
	auto require = [&](std::string_view key) {
		auto v = get(key);
		if (!v) {
			throw ConfigError("missing required key '" + std::string(key) + "'");
		}
		return *v;
	};

	c.id = require("id");
	c.group = get("group").value_or(c.id);
	c.description = get("description").value_or("");
	c.data_file = require("data_file");
	c.cadence = parse_cadence(require("cadence"));
	if (const auto s = get("smoothing")) {
		if (*s == "sidc") {
			c.smoothing = SmoothingKind::sidc;
		} else if (*s == "plain") {
			c.smoothing = SmoothingKind::plain_mean;
		} else if (*s != "none") {
			throw ConfigError("smoothing must be none, sidc or plain");
		}
	}
	if (const auto v = get("embedding")) {
		c.embedding = to_size("embedding", *v);
	}
	if (const auto v = get("horizons")) {
		c.horizons.clear();
		for (const auto part : detail::split(*v, ',')) {
			c.horizons.push_back(to_size("horizons", part));
		}
	}
	if (const auto v = get("multi_horizon")) {
		if (*v == "direct") {
			c.multi_horizon = MultiHorizon::direct;
		} else if (*v == "iterated") {
			c.multi_horizon = MultiHorizon::iterated;
		} else {
			throw ConfigError("multi_horizon must be direct or iterated");
		}
	}
	if (const auto v = get("strategy")) {
		if (*v == "open_loop") {
			c.strategy = Strategy::open_loop;
		} else if (*v == "recursive") {
			c.strategy = Strategy::recursive;
		} else {
			throw ConfigError("strategy must be open_loop or recursive");
		}
	}
	if (const auto v = get("split")) {
		if (*v == "date") {
			c.split = SplitKind::by_date;
		} else if (*v == "count") {
			c.split = SplitKind::by_count;
		} else {
			throw ConfigError("split must be date or count");
		}
	}
	if (const auto v = get("train_start")) {
		c.train_start = to_stamp("train_start", *v);
	}
	if (const auto v = get("train_end")) {
		c.train_end = to_stamp("train_end", *v);
	}
	if (const auto v = get("test_end")) {
		c.test_end = to_stamp("test_end", *v);
	}
	if (const auto v = get("count_start")) {
		c.count_start = to_stamp("count_start", *v);
	}
	if (const auto v = get("n_train")) {
		c.n_train = to_size("n_train", *v);
	}
	if (const auto v = get("n_test")) {
		c.n_test = to_size("n_test", *v);
	}
	if (const auto v = get("steps")) {
		c.steps = to_size("steps", *v);
	}
	if (const auto v = get("peak_start")) {
		c.peak_start = to_stamp("peak_start", *v);
	}
	if (const auto v = get("peak_end")) {
		c.peak_end = to_stamp("peak_end", *v);
	}

	c.model.kind = parse_model_kind(require("model"));
	if (const auto v = get("rules")) {
		c.rules = to_size("rules", *v);
	}
	if (const auto v = get("allocation")) {
		const auto parts = detail::split(*v, ',');
		if (parts.size() != 3) {
			throw ConfigError("allocation must list three rule counts: bl,mo,cm");
		}
		c.allocation = RuleAllocation{to_size("allocation", parts[0]), to_size("allocation", parts[1]),
		                              to_size("allocation", parts[2])};
	}
	TrainConfig base;
	if (const auto v = get("epochs")) {
		base.epochs = static_cast<int>(to_size("epochs", *v));
	}
	if (const auto v = get("learning_rate")) {
		base.learning_rate = to_double("learning_rate", *v);
	}
	if (const auto v = get("sigma_floor")) {
		base.sigma_floor = to_double("sigma_floor", *v);
	}
	if (const auto v = get("firing_floor")) {
		base.firing_floor = to_double("firing_floor", *v);
	}
	if (const auto v = get("seed")) {
		c.model.seed = to_u64("seed", *v);
	}
	base.rng_seed = c.model.seed;
	c.model.anfis = base;
	c.model.anfis_rules = c.rules;
	c.model.belfis.bl = c.model.belfis.mo = c.model.belfis.cm = base;
	for (auto [name, stage] : {std::pair{"bl", &c.model.belfis.bl}, std::pair{"mo", &c.model.belfis.mo},
	                           std::pair{"cm", &c.model.belfis.cm}}) {
		if (const auto v = get(std::string(name) + ".epochs")) {
			stage->epochs = static_cast<int>(to_size("epochs", *v));
		}
		if (const auto v = get(std::string(name) + ".learning_rate")) {
			stage->learning_rate = to_double("learning_rate", *v);
		}
	}
	if (const auto v = get("normalize")) {
		c.model.belfis.normalize = to_bool("normalize", *v);
	}
	if (const auto v = get("mo_target")) {
		if (*v == "raw") {
			c.model.belfis.mo_target = MoTarget::raw;
		} else if (*v == "bl_residual") {
			c.model.belfis.mo_target = MoTarget::bl_residual;
		} else {
			throw ConfigError("mo_target must be raw or bl_residual");
		}
	}
	if (c.model.kind == ModelKind::belfis) {
		c.model.belfis.rules = c.allocation ? *c.allocation : default_allocation(c.rules);
	}
	if (const auto v = get("lr_stable_max")) {
		c.lr_stable_max = to_double("lr_stable_max", *v);
	}
	if (const auto v = get("ref_nmse")) {
		c.reference.nmse = to_double("ref_nmse", *v);
	}
	if (const auto v = get("ref_rmse")) {
		c.reference.rmse = to_double("ref_rmse", *v);
	}
	if (const auto v = get("ref_peak")) {
		c.reference.peak = to_double("ref_peak", *v);
	}
	c.reference.note = get("ref_note").value_or("");

	for (const auto &[key, value] : kv) {
		if (!used.contains(key)) {
			throw ConfigError("unknown key '" + key + "'");
		}
	}
	c.validate();
	return c;
}

ExperimentConfig load_experiment_config(const fs::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError("cannot open config '" + path.string() + "'");
	}
	std::ostringstream text;
	text << in.rdbuf();
	return parse_experiment_config(text.str());
}

void ExperimentConfig::validate() const {
	if (id.empty() || !std::all_of(id.begin(), id.end(), [](char ch) {
		    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
	    })) {
		throw ConfigError("id must be non-empty and use only letters, digits, '_' or '-'");
	}
	if (data_file.empty()) {
		throw ConfigError("data_file is required");
	}
	if (smoothing && cadence != Cadence::monthly) {
		throw ConfigError("13-month smoothing applies to monthly data only");
	}
	if (embedding == 0) {
		throw ConfigError("embedding must be positive");
	}
	if (horizons.empty() || std::any_of(horizons.begin(), horizons.end(), [](auto h) { return h == 0; })) {
		throw ConfigError("horizons must be positive");
	}
	if (std::set<std::size_t>(horizons.begin(), horizons.end()).size() != horizons.size()) {
		throw ConfigError("horizons must be distinct");
	}
	if (strategy == Strategy::recursive) {
		if (horizons != std::vector<std::size_t>{1}) {
			throw ConfigError("recursive strategy uses a one-step model; set horizons = 1");
		}
		if (steps == 0) {
			throw ConfigError("recursive strategy needs steps > 0");
		}
	} else if (split == SplitKind::by_date) {
		if (!(align_to(train_end, cadence, true) < align_to(test_end, cadence, true))) {
			throw ConfigError("train_end must precede test_end");
		}
		if (train_start && !(align_to(*train_start, cadence, false) < align_to(train_end, cadence, true))) {
			throw ConfigError("train_start must precede train_end");
		}
	} else {
		if (n_train == 0) {
			throw ConfigError("count split needs n_train > 0");
		}
		if (multi_horizon == MultiHorizon::iterated) {
			throw ConfigError("iterated multi-horizon prediction needs a date split");
		}
	}
	if (rules == 0) {
		throw ConfigError("rules must be positive");
	}
	if (model.kind == ModelKind::anfis) {
		model.anfis.validate();
	}
	if (model.kind == ModelKind::belfis) {
		model.belfis.validate();
		if (allocation && allocation->total() != rules) {
			throw ConfigError("allocation " + allocation->str() + " does not add up to rules = " +
			                  std::to_string(rules));
		}
	}
}

std::string ExperimentConfig::echo() const {
	std::ostringstream o;
	o << "id = " << id << '\n';
	o << "group = " << group << '\n';
	if (!description.empty()) {
		o << "description = " << description << '\n';
	}
	o << "data_file = " << data_file << '\n';
	o << "cadence = " << to_string(cadence) << '\n';
	o << "smoothing = " << smoothing_name(smoothing) << '\n';
	o << "embedding = " << embedding << '\n';
	o << "horizons = ";
	for (std::size_t k = 0; k < horizons.size(); ++k) {
		o << (k ? "," : "") << horizons[k];
	}
	o << '\n';
	o << "multi_horizon = " << to_string(multi_horizon) << '\n';
	o << "strategy = " << to_string(strategy) << '\n';
	o << "split = " << to_string(split) << '\n';
	if (train_start) {
		o << "train_start = " << train_start->str() << '\n';
	}
	o << "train_end = " << train_end.str() << '\n';
	o << "test_end = " << test_end.str() << '\n';
	o << "count_start = " << count_start.str() << '\n';
	o << "n_train = " << n_train << '\n';
	if (n_test) {
		o << "n_test = " << *n_test << '\n';
	}
	o << "steps = " << steps << '\n';
	if (peak_start) {
		o << "peak_start = " << peak_start->str() << '\n';
	}
	if (peak_end) {
		o << "peak_end = " << peak_end->str() << '\n';
	}
	o << "model = " << to_string(model.kind) << '\n';
	o << "rules = " << rules << '\n';
	if (allocation) {
		o << "allocation = " << allocation->str() << '\n';
	}
	o << "epochs = " << model.anfis.epochs << '\n';
	o << "learning_rate = " << num(model.anfis.learning_rate) << '\n';
	o << "sigma_floor = " << num(model.anfis.sigma_floor) << '\n';
	o << "firing_floor = " << num(model.anfis.firing_floor) << '\n';
	o << "seed = " << model.seed << '\n';
	if (model.kind == ModelKind::belfis) {
		for (auto [name, stage] : {std::pair{"bl", &model.belfis.bl}, std::pair{"mo", &model.belfis.mo},
		                           std::pair{"cm", &model.belfis.cm}}) {
			o << name << ".epochs = " << stage->epochs << '\n';
			o << name << ".learning_rate = " << num(stage->learning_rate) << '\n';
		}
		o << "normalize = " << (model.belfis.normalize ? "true" : "false") << '\n';
		o << "mo_target = " << mo_target_name(model.belfis.mo_target) << '\n';
	}
	if (lr_stable_max) {
		o << "lr_stable_max = " << num(*lr_stable_max) << '\n';
	}
	if (reference.nmse) {
		o << "ref_nmse = " << num(*reference.nmse) << '\n';
	}
	if (reference.rmse) {
		o << "ref_rmse = " << num(*reference.rmse) << '\n';
	}
	if (reference.peak) {
		o << "ref_peak = " << num(*reference.peak) << '\n';
	}
	if (!reference.note.empty()) {
		o << "ref_note = " << reference.note << '\n';
	}
	return o.str();
}

// Hashing and files ---------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
	unsigned char digest[EVP_MAX_MD_SIZE];
	unsigned int len = 0;
	if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
		throw Error("io", "sha256 digest failed");
	}
	static const char *hex = "0123456789abcdef";
	std::string out;
	for (unsigned int i = 0; i < len; ++i) {
		out += hex[digest[i] >> 4];
		out += hex[digest[i] & 0xf];
	}
	return out;
}

std::string sha256_file(const fs::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw ConfigError("cannot open data file '" + path.string() + "'");
	}
	std::ostringstream bytes;
	bytes << in.rdbuf();
	return sha256_hex(bytes.str());
}

void write_atomic(const fs::path &path, std::string_view content) {
	const fs::path tmp = path.string() + ".tmp";
	{
		std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
		if (!out) {
			throw Error("io", "cannot write '" + tmp.string() + "'");
		}
		out.write(content.data(), static_cast<std::streamsize>(content.size()));
		if (!out) {
			throw Error("io", "short write to '" + tmp.string() + "'");
		}
	}
	fs::rename(tmp, path);
}

fs::path resolve_data_dir(const fs::path &fallback) {
	if (const char *env = std::getenv("NFCAST_DATA_DIR"); env && *env) {
		return env;
	}
	return fallback;
}

std::string RunManifest::to_json() const {
	nlohmann::ordered_json j;
	j["tool_version"] = tool_version;
	j["config_hash"] = config_hash;
	j["data_file"] = data_file;
	j["data_sha256"] = data_sha256;
	j["seed"] = seed;
	j["wall_clock_seconds"] = wall_clock_seconds;
	j["artifacts"] = artifacts;
	return j.dump(2) + "\n";
}

// Experiment runner ---------------------------------------------------------

namespace {

struct Window {
	EmbeddedDataset train;
	EmbeddedDataset test;
};

std::vector<double> persistence_of(const EmbeddedDataset &ds) {
	std::vector<double> out;
	for (std::size_t i = 0; i < ds.size(); ++i) {
		out.push_back(ds.input(i).back());
	}
	return out;
}

Window date_window(const ExperimentConfig &cfg, const EmbeddedDataset &ds, std::vector<std::string> &warnings) {
	const Timestamp earliest = ds.target_times.front();
	const Timestamp latest = ds.target_times.back();
	Timestamp start = cfg.train_start ? align_to(*cfg.train_start, cfg.cadence, false) : earliest;
	if (start < earliest) {
		warnings.push_back("train_start " + start.str() + " precedes the first available target " + earliest.str() +
		                   " (h=" + std::to_string(ds.h) + "); clamped");
		start = earliest;
	}
	const Timestamp boundary = align_to(cfg.train_end, cfg.cadence, true);
	Timestamp last = align_to(cfg.test_end, cfg.cadence, true);
	if (last > latest) {
		warnings.push_back("test_end " + last.str() + " is past the last available target " + latest.str() +
		                   " (h=" + std::to_string(ds.h) + "); clamped");
		last = latest;
	}
	auto [train, test] = split_by_date(slice_by_date(ds, start, last), boundary);
	if (train.empty() || test.empty()) {
		throw RangeError("date split leaves an empty train or test set");
	}
	return {std::move(train), std::move(test)};
}

Window count_window(const ExperimentConfig &cfg, const EmbeddedDataset &ds, std::vector<std::string> &warnings) {
	const Timestamp start = align_to(cfg.count_start, cfg.cadence, false);
	const auto first_it = std::lower_bound(ds.target_times.begin(), ds.target_times.end(), start);
	if (first_it == ds.target_times.end()) {
		throw RangeError("count_start " + start.str() + " is after the last available target");
	}
	if (start < ds.target_times.front()) {
		warnings.push_back("count_start " + start.str() + " precedes the first available target " +
		                   ds.target_times.front().str() + "; clamped");
	}
	const auto first = static_cast<std::size_t>(first_it - ds.target_times.begin());
	const std::size_t available = ds.size() - first;
	if (cfg.n_train >= available) {
		throw RangeError("count split needs more than " + std::to_string(cfg.n_train) + " rows from " +
		                 start.str() + ", only " + std::to_string(available) + " available");
	}
	std::size_t n_test = cfg.n_test.value_or(available - cfg.n_train);
	if (cfg.n_train + n_test > available) {
		warnings.push_back("n_test " + std::to_string(n_test) + " truncated to " +
		                   std::to_string(available - cfg.n_train) + " rows by the end of the data");
		n_test = available - cfg.n_train;
	}
	auto [train, test] = split_by_count(slice_rows(ds, first, cfg.n_train + n_test), cfg.n_train);
	return {std::move(train), std::move(test)};
}

Window make_window(const ExperimentConfig &cfg, const EmbeddedDataset &ds, std::vector<std::string> &warnings) {
	return cfg.split == SplitKind::by_date ? date_window(cfg, ds, warnings) : count_window(cfg, ds, warnings);
}

std::string rules_text(const ExperimentConfig &cfg) {
	switch (cfg.model.kind) {
	case ModelKind::anfis:
		return std::to_string(cfg.rules) + " rules";
	case ModelKind::belfis:
		return std::to_string(cfg.model.belfis.rules.total()) + " rules (bl,mo,cm = " + cfg.model.belfis.rules.str() +
		       ")";
	case ModelKind::persistence:
		return "none";
	}
	return {};
}

// Peak over [peak_start, peak_end] when configured, else the whole window.
void fill_peaks(const ExperimentConfig &cfg, EvalReport &report, const std::vector<ForecastRow> &rows) {
	const Timestamp lo = cfg.peak_start ? align_to(*cfg.peak_start, cfg.cadence, false) : Timestamp{-1000000, 0};
	const Timestamp hi = cfg.peak_end ? align_to(*cfg.peak_end, cfg.cadence, true) : Timestamp{1000000, 12};
	std::vector<Timestamp> pt, ot;
	std::vector<double> pv, ov;
	for (const auto &r : rows) {
		if (r.time < lo || r.time > hi) {
			continue;
		}
		pt.push_back(r.time);
		pv.push_back(r.predicted);
		if (r.observed) {
			ot.push_back(r.time);
			ov.push_back(*r.observed);
		}
	}
	if (!pv.empty()) {
		report.predicted_peak = find_peak(pt, pv);
	}
	if (!ov.empty()) {
		report.observed_peak = find_peak(ot, ov);
	}
	report.finalize_peaks();
}

EvalReport base_report(const ExperimentConfig &cfg, std::size_t h, const std::string &data_sha) {
	EvalReport r;
	r.experiment_id = cfg.id;
	r.group = cfg.group;
	r.model_id = std::string(to_string(cfg.model.kind));
	r.horizon = static_cast<int>(h);
	r.strategy = cfg.strategy == Strategy::recursive ? "recursive"
	                                                 : (h > 1 ? std::string(to_string(cfg.multi_horizon)) : "open_loop");
	r.reference = cfg.reference;
	r.rules = rules_text(cfg);
	r.data_file = cfg.data_file;
	r.data_sha256 = data_sha;
	r.nmse_convention = kNmseConvention;
	r.config_echo = cfg.echo();
	return r;
}

HorizonResult run_open_loop(const ExperimentConfig &cfg, const TimeSeries &series, std::size_t h,
                            const std::string &data_sha, const std::vector<std::string> &load_warnings) {
	EvalReport report = base_report(cfg, h, data_sha);
	report.warnings = load_warnings;
	report.split_convention = cfg.split == SplitKind::by_date ? kDateSplitConvention : kCountSplitConvention;

	const auto ds = embed(series, cfg.embedding, h);
	Window window = make_window(cfg, ds, report.warnings);
	std::vector<double> predicted;
	if (cfg.multi_horizon == MultiHorizon::iterated && h > 1) {
		std::vector<std::string> ignored;
		const Window one_step = make_window(cfg, embed(series, cfg.embedding, 1), ignored);
		auto trained = train_predictor(one_step.train, cfg.model, &report.warnings);
		report.loss_traces = std::move(trained.loss_traces);
		report.train_rows = one_step.train.size();
		predicted = predict_iterated(trained.predictor, window.test);
	} else {
		auto trained = train_predictor(window.train, cfg.model, &report.warnings);
		report.loss_traces = std::move(trained.loss_traces);
		report.train_rows = window.train.size();
		predicted = predict_open_loop(trained.predictor, window.test);
	}

	const auto &test = window.test;
	report.test_rows = test.size();
	report.test_first = test.target_times.front().str();
	report.test_last = test.target_times.back().str();
	report.nmse = nmse(test.targets, predicted);
	report.rmse = rmse(test.targets, predicted);
	report.baseline_nmse = nmse(test.targets, persistence_of(test));

	std::vector<ForecastRow> rows;
	rows.reserve(test.size());
	for (std::size_t i = 0; i < test.size(); ++i) {
		rows.push_back({test.target_times[i], test.targets[i], predicted[i]});
	}
	fill_peaks(cfg, report, rows);
	return {std::move(report), std::move(rows)};
}

HorizonResult run_recursive(const ExperimentConfig &cfg, const TimeSeries &series, const std::string &data_sha,
                            const std::vector<std::string> &load_warnings) {
	EvalReport report = base_report(cfg, 1, data_sha);
	report.warnings = load_warnings;
	report.split_convention = kRecursiveConvention;

	const auto ds = embed(series, cfg.embedding, 1);
	Timestamp end = align_to(cfg.train_end, cfg.cadence, true);
	if (end > series.back_time()) {
		report.warnings.push_back("train_end " + end.str() + " is past the end of the data " +
		                          series.back_time().str() + "; clamped");
		end = series.back_time();
	}
	Timestamp start = cfg.train_start ? align_to(*cfg.train_start, cfg.cadence, false) : ds.target_times.front();
	if (start < ds.target_times.front()) {
		report.warnings.push_back("train_start " + start.str() + " precedes the first available target " +
		                          ds.target_times.front().str() + "; clamped");
		start = ds.target_times.front();
	}
	const auto train = slice_by_date(ds, start, end);
	if (train.empty()) {
		throw RangeError("recursive experiment has no training rows");
	}
	auto trained = train_predictor(train, cfg.model, &report.warnings);
	report.loss_traces = std::move(trained.loss_traces);
	report.train_rows = train.size();

	const auto values = series.values();
	const auto end_index = static_cast<std::size_t>(end.ordinal() - series.front_time().ordinal());
	const std::span<const double> seed(values.data() + end_index + 1 - cfg.embedding, cfg.embedding);
	const auto forecast = predict_recursive(trained.predictor, seed, cfg.steps);

	std::vector<ForecastRow> rows;
	std::vector<double> observed, predicted, persistence;
	for (std::size_t k = 0; k < cfg.steps; ++k) {
		ForecastRow row{end.next(static_cast<long>(k + 1)), std::nullopt, forecast.reported[k]};
		const auto idx = end_index + k + 1;
		if (idx < values.size()) {
			row.observed = values[idx];
			observed.push_back(values[idx]);
			predicted.push_back(row.predicted);
			persistence.push_back(seed.back());
		}
		rows.push_back(row);
	}
	report.test_rows = rows.size();
	report.test_first = rows.front().time.str();
	report.test_last = rows.back().time.str();
	if (observed.size() >= 2) {
		try {
			report.nmse = nmse(observed, predicted);
			report.baseline_nmse = nmse(observed, persistence);
		} catch (const DegenerateError &) {
			report.warnings.push_back("observed overlap has zero variance; NMSE not reported");
		}
		report.rmse = rmse(observed, predicted);
	}
	if (observed.size() < cfg.steps) {
		report.warnings.push_back(std::to_string(cfg.steps - observed.size()) +
		                          " forecast steps lie beyond the data; they have no observed value");
	}
	fill_peaks(cfg, report, rows);
	return {std::move(report), std::move(rows)};
}

std::string forecast_text(const std::vector<ForecastRow> &rows) {
	std::ostringstream out;
	write_forecast_csv(out, rows);
	return out.str();
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig &cfg_in, const RunOptions &options) {
	const auto started = std::chrono::steady_clock::now();
	ExperimentConfig cfg = cfg_in;
	if (options.seed) {
		cfg.model.seed = *options.seed;
		cfg.model.anfis.rng_seed = *options.seed;
	}
	cfg.validate();

	const fs::path data_path = fs::path(cfg.data_file).is_absolute() ? fs::path(cfg.data_file)
	                                                                 : options.data_dir / cfg.data_file;
	ExperimentResult result;
	result.manifest.tool_version = NFCAST_VERSION;
	result.manifest.config_hash = sha256_hex(cfg.echo());
	result.manifest.data_file = cfg.data_file;
	result.manifest.data_sha256 = sha256_file(data_path); // before any training
	result.manifest.seed = cfg.model.seed;

	std::vector<std::string> load_warnings;
	TimeSeries series = load_silso_file(data_path.string(), cfg.cadence);
	if (cfg.smoothing) {
		series = smooth_13_month(series, *cfg.smoothing);
	}

	if (cfg.strategy == Strategy::recursive) {
		result.horizons.push_back(run_recursive(cfg, series, result.manifest.data_sha256, load_warnings));
	} else {
		for (const auto h : cfg.horizons) {
			result.horizons.push_back(run_open_loop(cfg, series, h, result.manifest.data_sha256, load_warnings));
		}
	}

	if (options.out_dir) {
		const fs::path dir = *options.out_dir / cfg.id;
		std::vector<fs::path> written;
		const bool created_dir = fs::create_directories(dir);
		try {
			for (const auto &hr : result.horizons) {
				const std::string stem = "h" + std::to_string(hr.report.horizon);
				const std::vector<std::pair<std::string, std::string>> files = {
				    {"report_" + stem + ".json", report_to_json(hr.report)},
				    {"report_" + stem + ".csv", report_csv_header() + "\n" + report_csv_row(hr.report) + "\n"},
				    {"forecast_" + stem + ".csv", forecast_text(hr.forecast)},
				};
				for (const auto &[name, content] : files) {
					write_atomic(dir / name, content);
					written.push_back(dir / name);
					result.manifest.artifacts.push_back((fs::path(cfg.id) / name).generic_string());
				}
			}
			result.manifest.artifacts.push_back((fs::path(cfg.id) / "manifest.json").generic_string());
			result.manifest.wall_clock_seconds =
			    std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
			write_atomic(dir / "manifest.json", result.manifest.to_json());
		} catch (...) {
			std::error_code ec;
			for (const auto &p : written) {
				fs::remove(p, ec);
			}
			if (created_dir) {
				fs::remove(dir, ec);
			}
			throw;
		}
	} else {
		result.manifest.wall_clock_seconds =
		    std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
	}
	return result;
}

// Suite ---------------------------------------------------------------------

bool SuiteResult::all_ok() const {
	return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const SuiteRow &r) { return r.ok; });
}

SuiteResult run_suite(const fs::path &dir, const RunOptions &options, std::size_t jobs) {
	if (!fs::is_directory(dir)) {
		throw ConfigError("config directory '" + dir.string() + "' does not exist");
	}
	std::vector<fs::path> files;
	for (const auto &entry : fs::directory_iterator(dir)) {
		if (entry.is_regular_file() && entry.path().extension() == ".cfg") {
			files.push_back(entry.path());
		}
	}
	std::sort(files.begin(), files.end());
	if (files.empty()) {
		throw ConfigError("no .cfg files in '" + dir.string() + "'");
	}

	// One suite row per (config, horizon); a failed config gets a single row.
	std::vector<std::vector<SuiteRow>> per_file(files.size());
	std::atomic<std::size_t> next{0};
	auto worker = [&] {
		for (std::size_t i = next++; i < files.size(); i = next++) {
			SuiteRow base;
			base.config_file = files[i].filename().string();
			try {
				const auto cfg = load_experiment_config(files[i]);
				base.experiment_id = cfg.id;
				const auto result = run_experiment(cfg, options);
				for (const auto &hr : result.horizons) {
					SuiteRow row = base;
					row.ok = true;
					row.report = hr.report;
					per_file[i].push_back(std::move(row));
				}
			} catch (const std::exception &e) {
				base.ok = false;
				base.error = e.what();
				per_file[i] = {base};
			}
		}
	};
	const std::size_t n_workers = std::clamp<std::size_t>(jobs, 1, files.size());
	{
		std::vector<std::jthread> pool;
		for (std::size_t w = 1; w < n_workers; ++w) {
			pool.emplace_back(worker);
		}
		worker();
	}

	SuiteResult suite;
	std::set<std::string> ids;
	for (auto &rows : per_file) {
		for (auto &row : rows) {
			if (row.ok && !ids.insert(row.experiment_id + "#" + std::to_string(row.report->horizon)).second) {
				row.ok = false;
				row.error = "duplicate experiment id '" + row.experiment_id + "'";
				row.report.reset();
			}
			suite.rows.push_back(std::move(row));
		}
	}

	// BELFIS vs ANFIS within each (group, horizon).
	std::map<std::pair<std::string, int>, std::pair<std::optional<double>, std::optional<double>>> pairs;
	for (const auto &row : suite.rows) {
		if (!row.report || !row.report->nmse) {
			continue;
		}
		auto &slot = pairs[{row.report->group, row.report->horizon}];
		if (row.report->model_id == "belfis") {
			slot.first = row.report->nmse;
		} else if (row.report->model_id == "anfis") {
			slot.second = row.report->nmse;
		}
	}
	for (const auto &[key, nm] : pairs) {
		if (nm.first && nm.second) {
			suite.verdicts.push_back({key.first, key.second, *nm.first, *nm.second});
		}
	}
	for (auto &row : suite.rows) {
		if (!row.report) {
			continue;
		}
		const auto it = pairs.find({row.report->group, row.report->horizon});
		if (it != pairs.end() && it->second.first && it->second.second) {
			row.belfis_minus_anfis = *it->second.first - *it->second.second;
		}
	}

	if (options.out_dir) {
		fs::create_directories(*options.out_dir);
		write_atomic(*options.out_dir / "suite.csv", suite_csv(suite));
		write_atomic(*options.out_dir / "suite.json", suite_json(suite));
	}
	return suite;
}

std::string suite_csv(const SuiteResult &suite) {
	std::ostringstream out;
	const std::string header = report_csv_header();
	out << "config_file,status,error," << header << ",belfis_minus_anfis_nmse\n";
	const std::size_t report_cols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
	for (const auto &row : suite.rows) {
		std::string error = row.error;
		std::replace(error.begin(), error.end(), '"', '\'');
		out << row.config_file << ',' << (row.ok ? "ok" : "failed") << ',';
		out << (error.empty() ? "" : "\"" + error + "\"") << ',';
		if (row.report) {
			out << report_csv_row(*row.report);
		} else {
			out << row.experiment_id << std::string(report_cols - 1, ',');
		}
		out << ',' << (row.belfis_minus_anfis ? detail::format_double(*row.belfis_minus_anfis) : "") << '\n';
	}
	return out.str();
}

std::string suite_json(const SuiteResult &suite) {
	nlohmann::ordered_json j;
	j["rows"] = nlohmann::ordered_json::array();
	for (const auto &row : suite.rows) {
		nlohmann::ordered_json r;
		r["config_file"] = row.config_file;
		r["experiment_id"] = row.experiment_id;
		r["status"] = row.ok ? "ok" : "failed";
		r["error"] = row.error;
		r["report"] = row.report ? nlohmann::ordered_json::parse(report_to_json(*row.report))
		                         : nlohmann::ordered_json(nullptr);
		r["belfis_minus_anfis_nmse"] =
		    row.belfis_minus_anfis ? nlohmann::ordered_json(*row.belfis_minus_anfis) : nlohmann::ordered_json(nullptr);
		j["rows"].push_back(r);
	}
	j["comparisons"] = nlohmann::ordered_json::array();
	for (const auto &v : suite.verdicts) {
		j["comparisons"].push_back({{"group", v.group},
		                            {"horizon", v.horizon},
		                            {"belfis_nmse", v.belfis_nmse},
		                            {"anfis_nmse", v.anfis_nmse},
		                            {"belfis_not_worse", v.belfis_better()}});
	}
	return j.dump(2) + "\n";
}

// Plot data -----------------------------------------------------------------

PlotStyle parse_plot_style(std::string_view text) {
	if (text == "overlay") {
		return PlotStyle::overlay;
	}
	if (text == "error-curve" || text == "error_curve") {
		return PlotStyle::error_curve;
	}
	throw ConfigError("plot style must be overlay or error-curve");
}

std::string emit_plot_data(std::istream &in, PlotStyle style) {
	std::ostringstream out;
	if (style == PlotStyle::overlay) {
		const auto rows = read_forecast_csv(in);
		if (rows.empty()) {
			throw ShapeError("forecast has no rows");
		}
		write_forecast_csv(out, rows);
		return out.str();
	}

	std::string line;
	std::size_t line_no = 0;
	std::vector<std::string> header;
	struct Point {
		std::string model;
		int horizon;
		double nmse;
	};
	std::vector<Point> points;
	std::ptrdiff_t model_col = -1, horizon_col = -1, nmse_col = -1;
	while (std::getline(in, line)) {
		++line_no;
		if (detail::trim(line).empty()) {
			continue;
		}
		const auto cells = detail::split_csv_line(line);
		if (header.empty()) {
			header = cells;
			auto col = [&](const char *name) {
				const auto it = std::find(header.begin(), header.end(), name);
				return it == header.end() ? std::ptrdiff_t{-1} : it - header.begin();
			};
			model_col = col("model");
			horizon_col = col("horizon");
			nmse_col = col("nmse");
			if (model_col < 0 || horizon_col < 0 || nmse_col < 0) {
				throw ParseError(line_no, "error-curve input needs model, horizon and nmse columns");
			}
			continue;
		}
		if (cells.size() != header.size()) {
			throw ParseError(line_no, "expected " + std::to_string(header.size()) + " columns, got " +
			                              std::to_string(cells.size()));
		}
		if (cells[static_cast<std::size_t>(nmse_col)].empty()) {
			continue; // failed or unevaluated run
		}
		const auto h = detail::parse_int(cells[static_cast<std::size_t>(horizon_col)]);
		const auto v = detail::parse_double(cells[static_cast<std::size_t>(nmse_col)]);
		if (!h || !v) {
			throw ParseError(line_no, "bad horizon or nmse cell");
		}
		points.push_back({cells[static_cast<std::size_t>(model_col)], *h, *v});
	}
	if (points.empty()) {
		throw ShapeError("no evaluated rows to plot");
	}
	std::stable_sort(points.begin(), points.end(), [](const Point &a, const Point &b) {
		return std::tie(a.model, a.horizon) < std::tie(b.model, b.horizon);
	});
	out << "model,horizon,nmse\n";
	for (const auto &p : points) {
		out << p.model << ',' << p.horizon << ',' << detail::format_double(p.nmse) << '\n';
	}
	return out.str();
}

} // namespace nfcast
