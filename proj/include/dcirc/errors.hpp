#pragma once

#include <stdexcept>
#include <string>

namespace dcirc {

// Base class for all errors raised by this library.
struct DiagramError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input document (bad JSON, missing section, wrong shape).
// `where` carries a JSON-pointer-ish location when known.
struct ParseError : DiagramError {
    explicit ParseError(const std::string& msg, std::string where = {})
        : DiagramError(where.empty() ? msg : msg + " (at " + where + ")"), location(std::move(where)) {}
    std::string location;
};

// Structurally well-formed input that violates a model invariant.
struct ValidationError : DiagramError {
    using DiagramError::DiagramError;
};

// A query whose preconditions do not hold (impossible evidence, bad
// meta-parameter id, unsupported diagram shape for the operation, ...).
struct QueryError : DiagramError {
    using DiagramError::DiagramError;
};

}  // namespace dcirc
