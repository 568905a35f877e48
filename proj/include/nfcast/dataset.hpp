#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nfcast {

enum class Cadence { yearly, monthly };

std::string_view to_string(Cadence cadence);
Cadence parse_cadence(std::string_view text);

/// Calendar year, or year + month for monthly series (month is 0 for yearly).
struct Timestamp {
	int year = 0;
	int month = 0;

	static Timestamp yearly(int year) { return {year, 0}; }
	static Timestamp monthly(int year, int month) { return {year, month}; }

	bool is_monthly() const { return month != 0; }

	/// Position on a uniform axis: years for yearly stamps, months since year 0 otherwise.
	long ordinal() const { return is_monthly() ? static_cast<long>(year) * 12 + (month - 1) : year; }

	Timestamp next(long steps = 1) const;

	/// "1957" or "1957-10".
	std::string str() const;
	static Timestamp parse(std::string_view text);

	friend auto operator<=>(const Timestamp &, const Timestamp &) = default;
	friend bool operator==(const Timestamp &, const Timestamp &) = default;
};

/// Converts a stamp to the cadence of a series. A year maps to its first
/// month when `at_end` is false and to December otherwise.
Timestamp align_to(const Timestamp &t, Cadence cadence, bool at_end);

struct SeriesPoint {
	Timestamp time;
	std::optional<double> value; // nullopt marks a missing observation

	friend bool operator==(const SeriesPoint &, const SeriesPoint &) = default;
};

enum class SmoothingKind {
	sidc,      // half weight on the two end months, divided by 12
	plain_mean // unweighted mean of 13 months
};

class TimeSeries;

/// 13-month running mean centred on each month. Drops six months at each end.
TimeSeries smooth_13_month(const TimeSeries &ts, SmoothingKind kind = SmoothingKind::sidc);
TimeSeries read_series_csv(std::istream &in);

/// Uniformly spaced sunspot-number record. Immutable once built.
class TimeSeries {
public:
	/// Validates cadence spacing, ordering and non-negativity. Always unsmoothed.
	TimeSeries(Cadence cadence, std::vector<SeriesPoint> points);

	Cadence cadence() const { return cadence_; }
	bool smoothed() const { return smoothed_; }
	std::size_t size() const { return points_.size(); }
	bool empty() const { return points_.empty(); }
	const std::vector<SeriesPoint> &points() const { return points_; }
	const SeriesPoint &operator[](std::size_t i) const { return points_[i]; }
	const Timestamp &front_time() const { return points_.front().time; }
	const Timestamp &back_time() const { return points_.back().time; }

	/// Values as doubles; throws GapError if any is missing.
	std::vector<double> values() const;

	/// Sub-series with timestamps in [from, to], both inclusive.
	TimeSeries slice(const Timestamp &from, const Timestamp &to) const;

	friend bool operator==(const TimeSeries &, const TimeSeries &) = default;

private:
	TimeSeries(Cadence cadence, std::vector<SeriesPoint> points, bool smoothed);

	Cadence cadence_;
	std::vector<SeriesPoint> points_;
	bool smoothed_ = false;

	friend TimeSeries smooth_13_month(const TimeSeries &, SmoothingKind);
	friend TimeSeries read_series_csv(std::istream &);
};

/// Parses SILSO text (semicolon or whitespace delimited). A value of -1 is the
/// SILSO missing-data sentinel. Month gaps in the file are filled with missing
/// points; decreasing or duplicate stamps raise IntegrityError.
TimeSeries load_silso(std::istream &source, Cadence cadence);
TimeSeries load_silso_file(const std::string &path, Cadence cadence);

/// Internal persisted form: CSV with header `timestamp,value,missing`, preceded
/// by one `#` line recording cadence and the smoothing flag.
void write_series_csv(std::ostream &out, const TimeSeries &ts);

/// Lag vectors paired with horizon-shifted targets.
struct EmbeddedDataset {
	std::size_t d = 0;
	std::size_t h = 0;
	Cadence cadence = Cadence::yearly;
	std::vector<double> inputs; // row-major, size() x d
	std::vector<double> targets;
	std::vector<Timestamp> target_times;

	std::size_t size() const { return targets.size(); }
	bool empty() const { return targets.empty(); }
	std::span<const double> input(std::size_t row) const { return {inputs.data() + row * d, d}; }

	void push_back(std::span<const double> x, double target, const Timestamp &time);

	/// Throws ShapeError if the parallel arrays disagree.
	void validate() const;

	friend bool operator==(const EmbeddedDataset &, const EmbeddedDataset &) = default;
};

/// Row i holds (v[t-d+1] .. v[t]) with target v[t+h]; N - d - h + 1 rows.
EmbeddedDataset embed(const TimeSeries &ts, std::size_t d, std::size_t h);

/// Rows whose target stamp is <= boundary go to train, the rest to test.
std::pair<EmbeddedDataset, EmbeddedDataset> split_by_date(const EmbeddedDataset &ds,
                                                          const Timestamp &boundary);

/// First n_train rows to train, the remainder to test.
std::pair<EmbeddedDataset, EmbeddedDataset> split_by_count(const EmbeddedDataset &ds, std::size_t n_train);

/// Rows with target stamps in [from, to].
EmbeddedDataset slice_by_date(const EmbeddedDataset &ds, const Timestamp &from, const Timestamp &to);

/// Rows [first, first + count).
EmbeddedDataset slice_rows(const EmbeddedDataset &ds, std::size_t first, std::size_t count);

} // namespace nfcast
