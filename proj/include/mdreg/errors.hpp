#ifndef MDREG_ERRORS_HPP
#define MDREG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mdreg {

// Error taxonomy used across the library. The CLI maps each type to a
// machine-readable category and a distinct exit code, so keep the set small
// and stable.

// Operand dimensions do not conform (matmul shapes, feature widths, ...).
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A scalar argument is outside its documented domain (k out of range,
// sigma <= 0, negative iteration count, ...).
struct ParameterError : std::invalid_argument {
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

// The input is shaped correctly but geometrically unusable (collinear point
// sets, fewer than three weighted pairs, zero row sums).
struct DegeneracyError : std::runtime_error {
    explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file content. `line` is 0 when no line number applies.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line_no = 0)
        : std::runtime_error(line_no ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
    std::size_t line;
};

// Filesystem-level failure: missing file, short read, failed rename.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed file in a layout we refuse (big-endian PLY, ...).
struct UnsupportedFormatError : std::runtime_error {
    explicit UnsupportedFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value or unknown key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A broken internal invariant (unreachable branch, self-check mismatch).
// Raising it means a bug in this library, not bad input.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace mdreg

#endif
