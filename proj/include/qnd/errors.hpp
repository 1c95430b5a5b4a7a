#pragma once

#include <stdexcept>
#include <string>

namespace qnd {

// Invalid arguments or violated preconditions.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Laser frequency inside the guard band of a catalog resonance.
struct PoleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fock-space cutoff leaves more probability in the tail than tolerated.
struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterative fit failed to converge.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file; message carries file and line.
struct ParseError : std::runtime_error {
    ParseError(const std::string& file, long line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration (unknown key, unparsable value, inconsistent settings).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}
