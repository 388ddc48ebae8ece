#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sipllg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes do not agree (field vs. grid, two fields on different grids, ...).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A scalar argument is outside its admissible range.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// The requested combination of model, grid and boundary is not implemented.
class UnsupportedConfiguration : public Error {
public:
    using Error::Error;
};

/// Krylov solve failed to reach the requested tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : Error(what), residual_history_(std::move(history)) {}

    const std::vector<double>& residual_history() const noexcept { return residual_history_; }

private:
    std::vector<double> residual_history_;
};

/// Normalization hit a (near) zero vector.
class DegenerateStateError : public Error {
public:
    DegenerateStateError(const std::string& what, std::size_t node) : Error(what), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// A NaN or Inf showed up during time stepping.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, long step) : Error(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// Malformed configuration or data file. Carries the line and key when known.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, std::string key = {})
        : Error(what), line_(line), key_(std::move(key)) {}

    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

} // namespace sipllg
