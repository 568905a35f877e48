#include "nfcast/dataset.hpp"

#include "nfcast/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nfcast {

std::string_view to_string(Cadence cadence) {
	return cadence == Cadence::yearly ? "yearly" : "monthly";
}

Cadence parse_cadence(std::string_view text) {
	if (text == "yearly") {
		return Cadence::yearly;
	}
	if (text == "monthly") {
		return Cadence::monthly;
	}
	throw ConfigError("unknown cadence '" + std::string(text) + "'");
}

Timestamp Timestamp::next(long steps) const {
	if (!is_monthly()) {
		return yearly(static_cast<int>(year + steps));
	}
	const long ord = ordinal() + steps;
	const long y = ord >= 0 ? ord / 12 : (ord - 11) / 12;
	return monthly(static_cast<int>(y), static_cast<int>(ord - y * 12) + 1);
}

std::string Timestamp::str() const {
	std::string out = std::to_string(year);
	if (is_monthly()) {
		out += month < 10 ? "-0" : "-";
		out += std::to_string(month);
	}
	return out;
}

Timestamp Timestamp::parse(std::string_view text) {
	text = detail::trim(text);
	const auto dash = text.find('-', 1);
	const auto year = detail::parse_int(text.substr(0, dash));
	if (!year) {
		throw ParseError(0, "bad timestamp '" + std::string(text) + "'");
	}
	if (dash == std::string_view::npos) {
		return yearly(*year);
	}
	const auto month = detail::parse_int(text.substr(dash + 1));
	if (!month || *month < 1 || *month > 12) {
		throw ParseError(0, "bad month in timestamp '" + std::string(text) + "'");
	}
	return monthly(*year, *month);
}

Timestamp align_to(const Timestamp &t, Cadence cadence, bool at_end) {
	if (cadence == Cadence::yearly) {
		return Timestamp::yearly(t.year);
	}
	if (t.is_monthly()) {
		return t;
	}
	return Timestamp::monthly(t.year, at_end ? 12 : 1);
}

// TimeSeries ----------------------------------------------------------------

TimeSeries::TimeSeries(Cadence cadence, std::vector<SeriesPoint> points)
    : TimeSeries(cadence, std::move(points), false) {}

TimeSeries::TimeSeries(Cadence cadence, std::vector<SeriesPoint> points, bool smoothed)
    : cadence_(cadence), points_(std::move(points)), smoothed_(smoothed) {
	const bool monthly = cadence_ == Cadence::monthly;
	for (std::size_t i = 0; i < points_.size(); ++i) {
		const auto &p = points_[i];
		if (p.time.is_monthly() != monthly) {
			throw IntegrityError("timestamp " + p.time.str() + " does not match " +
			                     std::string(to_string(cadence_)) + " cadence");
		}
		if (p.value && (!std::isfinite(*p.value) || *p.value < 0.0)) {
			throw IntegrityError("value at " + p.time.str() + " must be finite and non-negative");
		}
		if (i > 0 && p.time.ordinal() != points_[i - 1].time.ordinal() + 1) {
			throw IntegrityError("timestamps " + points_[i - 1].time.str() + " and " + p.time.str() +
			                     " are not one cadence step apart");
		}
	}
}

std::vector<double> TimeSeries::values() const {
	std::vector<double> out;
	out.reserve(points_.size());
	for (const auto &p : points_) {
		if (!p.value) {
			throw GapError("missing value at " + p.time.str());
		}
		out.push_back(*p.value);
	}
	return out;
}

TimeSeries TimeSeries::slice(const Timestamp &from, const Timestamp &to) const {
	std::vector<SeriesPoint> kept;
	for (const auto &p : points_) {
		if (p.time >= from && p.time <= to) {
			kept.push_back(p);
		}
	}
	return TimeSeries(cadence_, std::move(kept), smoothed_);
}

// SILSO ingestion -----------------------------------------------------------

TimeSeries load_silso(std::istream &source, Cadence cadence) {
	const bool monthly = cadence == Cadence::monthly;
	const std::size_t min_fields = monthly ? 4 : 2;
	std::vector<SeriesPoint> points;
	std::string line;
	std::size_t line_no = 0;
	while (std::getline(source, line)) {
		++line_no;
		const auto body = detail::trim(line);
		if (body.empty() || body.front() == '#') {
			continue;
		}
		const auto fields = detail::split_fields(body);
		if (fields.size() < min_fields) {
			throw ParseError(line_no, "expected at least " + std::to_string(min_fields) + " fields, got " +
			                              std::to_string(fields.size()));
		}

		// Yearly files stamp mid-year (1700.5); accept plain integers as well.
		const auto year_value = detail::parse_double(fields[0]);
		const double year_frac = year_value ? *year_value - std::floor(*year_value) : 0.0;
		if (!year_value || (year_frac != 0.0 && year_frac != 0.5)) {
			throw ParseError(line_no, "bad year field '" + std::string(fields[0]) + "'");
		}
		const int year = static_cast<int>(std::floor(*year_value));
		Timestamp stamp = Timestamp::yearly(year);
		if (monthly) {
			const auto month = detail::parse_int(fields[1]);
			if (!month || *month < 1 || *month > 12) {
				throw ParseError(line_no, "bad month field '" + std::string(fields[1]) + "'");
			}
			stamp = Timestamp::monthly(year, *month);
		}

		const auto value = detail::parse_double(fields[monthly ? 3 : 1]);
		if (!value || !std::isfinite(*value)) {
			throw ParseError(line_no, "bad value field '" + std::string(fields[monthly ? 3 : 1]) + "'");
		}
		std::optional<double> observed;
		if (*value == -1.0) {
			observed = std::nullopt;
		} else if (*value < 0.0) {
			throw ParseError(line_no, "negative value other than the -1 sentinel");
		} else {
			observed = *value;
		}

		if (!points.empty()) {
			const long prev = points.back().time.ordinal();
			if (stamp.ordinal() <= prev) {
				throw IntegrityError("line " + std::to_string(line_no) + ": timestamp " + stamp.str() +
				                     " does not follow " + points.back().time.str());
			}
			for (long gap = prev + 1; gap < stamp.ordinal(); ++gap) {
				points.push_back({points.back().time.next(), std::nullopt});
			}
		}
		points.push_back({stamp, observed});
	}
	return TimeSeries(cadence, std::move(points));
}

TimeSeries load_silso_file(const std::string &path, Cadence cadence) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError("cannot open data file '" + path + "'");
	}
	return load_silso(in, cadence);
}

// Smoothing -----------------------------------------------------------------

TimeSeries smooth_13_month(const TimeSeries &ts, SmoothingKind kind) {
	if (ts.cadence() != Cadence::monthly) {
		throw ConfigError("13-month smoothing needs a monthly series");
	}
	if (ts.smoothed()) {
		throw ConfigError("series is already smoothed");
	}
	if (ts.size() < 13) {
		throw LengthError("13-month smoothing needs at least 13 months, got " + std::to_string(ts.size()));
	}

	std::vector<SeriesPoint> out;
	out.reserve(ts.size() - 12);
	for (std::size_t centre = 6; centre + 6 < ts.size(); ++centre) {
		double sum = 0.0;
		for (std::size_t k = centre - 6; k <= centre + 6; ++k) {
			const auto &v = ts[k].value;
			if (!v) {
				throw GapError("missing value at " + ts[k].time.str() + " inside the window " +
				               ts[centre - 6].time.str() + " .. " + ts[centre + 6].time.str());
			}
			const bool edge = k == centre - 6 || k == centre + 6;
			sum += (kind == SmoothingKind::sidc && edge) ? 0.5 * *v : *v;
		}
		out.push_back({ts[centre].time, sum / (kind == SmoothingKind::sidc ? 12.0 : 13.0)});
	}
	return TimeSeries(Cadence::monthly, std::move(out), true);
}

// Persisted CSV form --------------------------------------------------------

void write_series_csv(std::ostream &out, const TimeSeries &ts) {
	out << "# cadence=" << to_string(ts.cadence()) << " smoothed=" << (ts.smoothed() ? 1 : 0) << '\n';
	out << "timestamp,value,missing\n";
	for (const auto &p : ts.points()) {
		out << p.time.str() << ',';
		if (p.value) {
			out << detail::format_double(*p.value) << ",0\n";
		} else {
			out << ",1\n";
		}
	}
}

TimeSeries read_series_csv(std::istream &in) {
	std::string line;
	std::size_t line_no = 0;
	std::optional<Cadence> cadence;
	bool smoothed = false;
	bool header_seen = false;
	std::vector<SeriesPoint> points;
	while (std::getline(in, line)) {
		++line_no;
		const auto body = detail::trim(line);
		if (body.empty()) {
			continue;
		}
		if (body.front() == '#') {
			std::istringstream meta{std::string(body.substr(1))};
			std::string token;
			while (meta >> token) {
				if (token.starts_with("cadence=")) {
					cadence = parse_cadence(token.substr(8));
				} else if (token == "smoothed=1") {
					smoothed = true;
				}
			}
			continue;
		}
		if (!header_seen) {
			if (body != "timestamp,value,missing") {
				throw ParseError(line_no, "expected header 'timestamp,value,missing'");
			}
			header_seen = true;
			continue;
		}
		const auto cells = detail::split(body, ',');
		if (cells.size() != 3) {
			throw ParseError(line_no, "expected 3 columns");
		}
		Timestamp stamp;
		try {
			stamp = Timestamp::parse(cells[0]);
		} catch (const ParseError &) {
			throw ParseError(line_no, "bad timestamp '" + std::string(cells[0]) + "'");
		}
		if (cells[2] == "1") {
			points.push_back({stamp, std::nullopt});
		} else if (cells[2] == "0") {
			const auto value = detail::parse_double(cells[1]);
			if (!value) {
				throw ParseError(line_no, "bad value '" + std::string(cells[1]) + "'");
			}
			points.push_back({stamp, *value});
		} else {
			throw ParseError(line_no, "missing flag must be 0 or 1");
		}
	}
	if (!header_seen) {
		throw ParseError(line_no, "no header found");
	}
	if (!cadence) {
		cadence = (!points.empty() && points.front().time.is_monthly()) ? Cadence::monthly : Cadence::yearly;
	}
	return TimeSeries(*cadence, std::move(points), smoothed);
}

// Embedding and splits ------------------------------------------------------

void EmbeddedDataset::push_back(std::span<const double> x, double target, const Timestamp &time) {
	if (x.size() != d) {
		throw ShapeError("lag vector has " + std::to_string(x.size()) + " entries, expected " + std::to_string(d));
	}
	inputs.insert(inputs.end(), x.begin(), x.end());
	targets.push_back(target);
	target_times.push_back(time);
}

void EmbeddedDataset::validate() const {
	if (inputs.size() != targets.size() * d || target_times.size() != targets.size()) {
		throw ShapeError("embedded dataset arrays disagree in length");
	}
}

EmbeddedDataset embed(const TimeSeries &ts, std::size_t d, std::size_t h) {
	if (d == 0 || h == 0) {
		throw ConfigError("embedding dimension and horizon must be positive");
	}
	if (ts.size() < d + h) {
		throw LengthError("series of length " + std::to_string(ts.size()) + " is too short for d=" +
		                  std::to_string(d) + ", h=" + std::to_string(h));
	}
	const auto values = ts.values();
	EmbeddedDataset ds;
	ds.d = d;
	ds.h = h;
	ds.cadence = ts.cadence();
	const std::size_t rows = ts.size() - d - h + 1;
	ds.inputs.reserve(rows * d);
	ds.targets.reserve(rows);
	ds.target_times.reserve(rows);
	for (std::size_t i = 0; i < rows; ++i) {
		const std::size_t last = i + d - 1;
		ds.push_back(std::span<const double>(values).subspan(i, d), values[last + h], ts[last + h].time);
	}
	return ds;
}

namespace {

EmbeddedDataset empty_like(const EmbeddedDataset &ds) {
	EmbeddedDataset out;
	out.d = ds.d;
	out.h = ds.h;
	out.cadence = ds.cadence;
	return out;
}

} // namespace

EmbeddedDataset slice_rows(const EmbeddedDataset &ds, std::size_t first, std::size_t count) {
	if (first + count > ds.size()) {
		throw RangeError("row range exceeds dataset of " + std::to_string(ds.size()) + " rows");
	}
	auto out = empty_like(ds);
	for (std::size_t i = first; i < first + count; ++i) {
		out.push_back(ds.input(i), ds.targets[i], ds.target_times[i]);
	}
	return out;
}

std::pair<EmbeddedDataset, EmbeddedDataset> split_by_date(const EmbeddedDataset &ds, const Timestamp &boundary) {
	if (ds.empty() || boundary < ds.target_times.front() || boundary > ds.target_times.back()) {
		throw RangeError("split boundary " + boundary.str() + " is outside the dataset's target range");
	}
	const auto cut = std::upper_bound(ds.target_times.begin(), ds.target_times.end(), boundary);
	const auto n_train = static_cast<std::size_t>(cut - ds.target_times.begin());
	return {slice_rows(ds, 0, n_train), slice_rows(ds, n_train, ds.size() - n_train)};
}

std::pair<EmbeddedDataset, EmbeddedDataset> split_by_count(const EmbeddedDataset &ds, std::size_t n_train) {
	if (n_train == 0 || n_train > ds.size()) {
		throw RangeError("cannot take " + std::to_string(n_train) + " training rows from " +
		                 std::to_string(ds.size()));
	}
	return {slice_rows(ds, 0, n_train), slice_rows(ds, n_train, ds.size() - n_train)};
}

EmbeddedDataset slice_by_date(const EmbeddedDataset &ds, const Timestamp &from, const Timestamp &to) {
	auto out = empty_like(ds);
	for (std::size_t i = 0; i < ds.size(); ++i) {
		if (ds.target_times[i] >= from && ds.target_times[i] <= to) {
			out.push_back(ds.input(i), ds.targets[i], ds.target_times[i]);
		}
	}
	return out;
}

} // namespace nfcast
