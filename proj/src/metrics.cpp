#include "nfcast/metrics.hpp"

#include "nfcast/error.hpp"
#include "text.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace nfcast {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
	if (a.size() != b.size()) {
		throw ShapeError("observed has " + std::to_string(a.size()) + " values, predicted has " +
		                 std::to_string(b.size()));
	}
	if (a.empty()) {
		throw ShapeError("error measures need at least one value");
	}
}

double sum_squared_error(std::span<const double> y, std::span<const double> yhat) {
	double sse = 0.0;
	for (std::size_t k = 0; k < y.size(); ++k) {
		const double e = y[k] - yhat[k];
		sse += e * e;
	}
	return sse;
}

} // namespace

double nmse(std::span<const double> observed, std::span<const double> predicted) {
	check_lengths(observed, predicted);
	double mean = 0.0;
	for (double v : observed) {
		mean += v;
	}
	mean /= static_cast<double>(observed.size());
	double spread = 0.0;
	for (double v : observed) {
		spread += (v - mean) * (v - mean);
	}
	if (spread == 0.0) {
		throw DegenerateError("observations have zero variance; NMSE is undefined");
	}
	return sum_squared_error(observed, predicted) / spread;
}

double rmse(std::span<const double> observed, std::span<const double> predicted) {
	check_lengths(observed, predicted);
	return std::sqrt(sum_squared_error(observed, predicted) / static_cast<double>(observed.size()));
}

Peak find_peak(std::span<const Timestamp> times, std::span<const double> values) {
	if (times.size() != values.size()) {
		throw ShapeError("peak search needs one stamp per value");
	}
	if (values.empty()) {
		throw ShapeError("peak search over an empty series");
	}
	std::size_t best = 0;
	for (std::size_t k = 1; k < values.size(); ++k) {
		if (values[k] > values[best] || (values[k] == values[best] && times[k] < times[best])) {
			best = k;
		}
	}
	return {times[best], values[best]};
}

void EvalReport::finalize_peaks() {
	if (predicted_peak && observed_peak) {
		peak_abs_error = std::abs(observed_peak->value - predicted_peak->value);
	} else {
		peak_abs_error.reset();
	}
}

// Serialization -------------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

template <typename T>
ordered_json opt(const std::optional<T> &v) {
	return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json peak_json(const std::optional<Peak> &p) {
	if (!p) {
		return nullptr;
	}
	return {{"time", p->time.str()}, {"value", p->value}};
}

std::optional<double> opt_double(const ordered_json &j, const char *key) {
	if (!j.contains(key) || j.at(key).is_null()) {
		return std::nullopt;
	}
	return j.at(key).get<double>();
}

std::optional<Peak> peak_from(const ordered_json &j, const char *key) {
	if (!j.contains(key) || j.at(key).is_null()) {
		return std::nullopt;
	}
	const auto &p = j.at(key);
	return Peak{Timestamp::parse(p.at("time").get<std::string>()), p.at("value").get<double>()};
}

std::string csv_cell(const std::string &s) {
	if (s.find_first_of(",\"\n") == std::string::npos) {
		return s;
	}
	std::string out = "\"";
	for (char c : s) {
		out += c == '"' ? "\"\"" : std::string(1, c);
	}
	return out + "\"";
}

std::string csv_num(const std::optional<double> &v) {
	return v ? detail::format_double(*v) : std::string();
}

} // namespace

std::string report_to_json(const EvalReport &r) {
	ordered_json j;
	j["experiment_id"] = r.experiment_id;
	j["group"] = r.group;
	j["model"] = r.model_id;
	j["horizon"] = r.horizon;
	j["strategy"] = r.strategy;
	j["train_rows"] = r.train_rows;
	j["test_rows"] = r.test_rows;
	j["test_first"] = r.test_first;
	j["test_last"] = r.test_last;
	j["nmse"] = opt(r.nmse);
	j["rmse"] = opt(r.rmse);
	j["baseline_nmse"] = opt(r.baseline_nmse);
	j["predicted_peak"] = peak_json(r.predicted_peak);
	j["observed_peak"] = peak_json(r.observed_peak);
	j["peak_abs_error"] = opt(r.peak_abs_error);
	j["rules"] = r.rules;
	ordered_json traces = ordered_json::object();
	for (const auto &[name, trace] : r.loss_traces) {
		traces[name] = trace;
	}
	j["loss_traces"] = traces;
	j["reference"] = {{"nmse", opt(r.reference.nmse)},
	                  {"rmse", opt(r.reference.rmse)},
	                  {"peak", opt(r.reference.peak)},
	                  {"note", r.reference.note}};
	j["data_file"] = r.data_file;
	j["data_sha256"] = r.data_sha256;
	j["nmse_convention"] = r.nmse_convention;
	j["split_convention"] = r.split_convention;
	j["warnings"] = r.warnings;
	j["config"] = r.config_echo;
	return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string &text) {
	const auto j = ordered_json::parse(text);
	EvalReport r;
	r.experiment_id = j.at("experiment_id").get<std::string>();
	r.group = j.at("group").get<std::string>();
	r.model_id = j.at("model").get<std::string>();
	r.horizon = j.at("horizon").get<int>();
	r.strategy = j.at("strategy").get<std::string>();
	r.train_rows = j.at("train_rows").get<std::size_t>();
	r.test_rows = j.at("test_rows").get<std::size_t>();
	r.test_first = j.at("test_first").get<std::string>();
	r.test_last = j.at("test_last").get<std::string>();
	r.nmse = opt_double(j, "nmse");
	r.rmse = opt_double(j, "rmse");
	r.baseline_nmse = opt_double(j, "baseline_nmse");
	r.predicted_peak = peak_from(j, "predicted_peak");
	r.observed_peak = peak_from(j, "observed_peak");
	r.peak_abs_error = opt_double(j, "peak_abs_error");
	r.rules = j.at("rules").get<std::string>();
	for (const auto &[name, trace] : j.at("loss_traces").items()) {
		r.loss_traces.emplace_back(name, trace.get<std::vector<double>>());
	}
	const auto &ref = j.at("reference");
	r.reference.nmse = opt_double(ref, "nmse");
	r.reference.rmse = opt_double(ref, "rmse");
	r.reference.peak = opt_double(ref, "peak");
	r.reference.note = ref.at("note").get<std::string>();
	r.data_file = j.at("data_file").get<std::string>();
	r.data_sha256 = j.at("data_sha256").get<std::string>();
	r.nmse_convention = j.at("nmse_convention").get<std::string>();
	r.split_convention = j.at("split_convention").get<std::string>();
	r.warnings = j.at("warnings").get<std::vector<std::string>>();
	r.config_echo = j.at("config").get<std::string>();
	return r;
}

std::string report_csv_header() {
	return "experiment,group,model,horizon,strategy,train_rows,test_rows,test_first,test_last,nmse,rmse,"
	       "baseline_nmse,ref_nmse,ref_rmse,observed_peak_time,observed_peak,predicted_peak_time,"
	       "predicted_peak,ref_peak,peak_abs_error,rules";
}

std::string report_csv_row(const EvalReport &r) {
	std::ostringstream out;
	out << csv_cell(r.experiment_id) << ',' << csv_cell(r.group) << ',' << r.model_id << ',' << r.horizon << ','
	    << r.strategy << ',' << r.train_rows << ',' << r.test_rows << ',' << r.test_first << ',' << r.test_last
	    << ',' << csv_num(r.nmse) << ',' << csv_num(r.rmse) << ',' << csv_num(r.baseline_nmse) << ','
	    << csv_num(r.reference.nmse) << ',' << csv_num(r.reference.rmse) << ','
	    << (r.observed_peak ? r.observed_peak->time.str() : "") << ','
	    << csv_num(r.observed_peak ? std::optional(r.observed_peak->value) : std::nullopt) << ','
	    << (r.predicted_peak ? r.predicted_peak->time.str() : "") << ','
	    << csv_num(r.predicted_peak ? std::optional(r.predicted_peak->value) : std::nullopt) << ','
	    << csv_num(r.reference.peak) << ',' << csv_num(r.peak_abs_error) << ',' << csv_cell(r.rules);
	return out.str();
}

} // namespace nfcast
