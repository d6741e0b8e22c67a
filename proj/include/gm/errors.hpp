#pragma once

#include <stdexcept>
#include <string>

namespace gm {

// Base class for all library errors; `kind()` yields a stable machine-readable tag
// that the CLI echoes in its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& message)
        : Error("invalid_argument", message) {}
};

// Raised when a design (or basis) matrix is numerically rank deficient.
class SingularDesignError : public Error {
public:
    SingularDesignError(const std::string& message, int deficient_count)
        : Error("singular_design", message), deficient_count_(deficient_count) {}
    // Number of columns beyond the detected numerical rank.
    int deficient_count() const { return deficient_count_; }

private:
    int deficient_count_;
};

// Raised when a Gaussian perturbation is (numerically) inside the span it must
// escape; callers redraw on catching this.
class DegeneratePerturbationError : public Error {
public:
    explicit DegeneratePerturbationError(const std::string& message)
        : Error("degenerate_perturbation", message) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, double objective_gap)
        : Error("convergence_failure", message), objective_gap_(objective_gap) {}
    double objective_gap() const { return objective_gap_; }

private:
    double objective_gap_;
};

// Internal contradiction: constructed constraints reject the very data that
// produced them, or an observed statistic escapes its own truncation interval.
class InconsistentEventError : public Error {
public:
    explicit InconsistentEventError(const std::string& message)
        : Error("inconsistent_event", message) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse_error", message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io_error", message) {}
};

}  // namespace gm
