#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nfcast::detail {

inline std::string_view trim(std::string_view s) {
	const auto first = s.find_first_not_of(" \t\r\n");
	if (first == std::string_view::npos) {
		return {};
	}
	const auto last = s.find_last_not_of(" \t\r\n");
	return s.substr(first, last - first + 1);
}

/// Splits on `sep`, trimming each cell. Keeps empty cells.
inline std::vector<std::string_view> split(std::string_view s, char sep) {
	std::vector<std::string_view> out;
	std::size_t start = 0;
	while (true) {
		const auto pos = s.find(sep, start);
		out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
		if (pos == std::string_view::npos) {
			break;
		}
		start = pos + 1;
	}
	return out;
}

/// SILSO rows: semicolon-delimited when a ';' is present, otherwise whitespace.
inline std::vector<std::string_view> split_fields(std::string_view s) {
	if (s.find(';') != std::string_view::npos) {
		return split(s, ';');
	}
	std::vector<std::string_view> out;
	std::size_t pos = 0;
	while (pos < s.size()) {
		const auto first = s.find_first_not_of(" \t", pos);
		if (first == std::string_view::npos) {
			break;
		}
		const auto last = s.find_first_of(" \t", first);
		out.push_back(s.substr(first, last == std::string_view::npos ? s.npos : last - first));
		pos = last == std::string_view::npos ? s.size() : last;
	}
	return out;
}

/// One CSV record with double-quote escaping; cells are unquoted copies.
inline std::vector<std::string> split_csv_line(std::string_view s) {
	std::vector<std::string> out(1);
	bool quoted = false;
	for (std::size_t i = 0; i < s.size(); ++i) {
		const char c = s[i];
		if (quoted) {
			if (c == '"' && i + 1 < s.size() && s[i + 1] == '"') {
				out.back() += '"';
				++i;
			} else if (c == '"') {
				quoted = false;
			} else {
				out.back() += c;
			}
		} else if (c == '"') {
			quoted = true;
		} else if (c == ',') {
			out.emplace_back();
		} else if (c != '\r') {
			out.back() += c;
		}
	}
	return out;
}

inline std::optional<double> parse_double(std::string_view s) {
	s = trim(s);
	if (!s.empty() && s.front() == '+') {
		s.remove_prefix(1);
	}
	double v = 0.0;
	const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
		return std::nullopt;
	}
	return v;
}

inline std::optional<int> parse_int(std::string_view s) {
	s = trim(s);
	int v = 0;
	const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
		return std::nullopt;
	}
	return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
	char buf[32];
	const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
	return std::string(buf, ec == std::errc() ? ptr : buf);
}

} // namespace nfcast::detail
