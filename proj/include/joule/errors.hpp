#pragma once

#include <stdexcept>
#include <string>

namespace joule {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A precondition on an argument was violated.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// The mesh is invalid (degenerate cell, non-manifold facet, bad tagging,
/// or a refinement closure that cannot terminate).
class MeshError : public Error {
public:
    using Error::Error;
};

/// Problem data is unusable (non-finite coefficient value, ill-posed
/// boundary setup, non-differentiable expression).
class DataError : public Error {
public:
    using Error::Error;
};

/// Expression source text could not be parsed; carries the offset of the
/// offending character.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// A linear solver failed (iteration budget exhausted or non-finite values).
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

/// Run configuration file is malformed or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace joule
