#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nfcast {

/// Base of every error raised by the library. `kind()` is a stable tag used in
/// CLI messages and suite tables.
class Error : public std::runtime_error {
public:
	Error(std::string kind, const std::string &message)
	    : std::runtime_error(message), kind_(std::move(kind)) {}

	const std::string &kind() const noexcept { return kind_; }

private:
	std::string kind_;
};

class ParseError : public Error {
public:
	ParseError(std::size_t line, const std::string &message)
	    : Error("parse", "line " + std::to_string(line) + ": " + message), line_(line) {}

	std::size_t line() const noexcept { return line_; }

private:
	std::size_t line_;
};

struct IntegrityError : Error {
	explicit IntegrityError(const std::string &m) : Error("integrity", m) {}
};

struct LengthError : Error {
	explicit LengthError(const std::string &m) : Error("length", m) {}
};

struct GapError : Error {
	explicit GapError(const std::string &m) : Error("gap", m) {}
};

struct RangeError : Error {
	explicit RangeError(const std::string &m) : Error("range", m) {}
};

struct ShapeError : Error {
	explicit ShapeError(const std::string &m) : Error("shape", m) {}
};

struct NumericError : Error {
	explicit NumericError(const std::string &m) : Error("numeric", m) {}
};

struct ConfigError : Error {
	explicit ConfigError(const std::string &m) : Error("config", m) {}
};

struct DegenerateError : Error {
	explicit DegenerateError(const std::string &m) : Error("degenerate", m) {}
};

} // namespace nfcast
