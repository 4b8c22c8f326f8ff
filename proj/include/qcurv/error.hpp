#pragma once

#include <stdexcept>
#include <string>

namespace qcurv {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad dimension, radius, alpha, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Two fields, or a field and a table, live on different grids.
class GridMismatch : public Error {
public:
    using Error::Error;
};

// The curvature integral of K e^{nv} is not positive, so v is outside the
// admissible set on which the functional is defined.
class NotAdmissible : public Error {
public:
    using Error::Error;
};

// The prescribed curvature is non-positive everywhere.
class DegenerateCurvature : public Error {
public:
    using Error::Error;
};

// An iteration could not make progress even at the smallest damping / step.
class SolverBreakdown : public Error {
public:
    using Error::Error;
};

// A requested resource (dense table size, memory) exceeds the configured cap.
class CapacityExceeded : public Error {
public:
    using Error::Error;
};

// Configuration could not be parsed or validated. `where` names the field
// path or the line/column of a syntax error.
class ConfigError : public Error {
public:
    ConfigError(std::string where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

}  // namespace qcurv
