#pragma once

#include <stdexcept>
#include <string>

namespace evolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Resolvent requested at (or numerically on) the spectrum.
class SingularResolventError : public Error {
public:
    using Error::Error;
};

/// Iterative or direct solve did not reach its tolerance.
class NumericError : public Error {
public:
    NumericError(const std::string& what, double residual);
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Quadrature or truncated expansion failed to reach the requested accuracy.
class AccuracyError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

/// Degenerate element found during finite element assembly.
class AssemblyError : public Error {
public:
    AssemblyError(const std::string& what, std::size_t triangle);
    std::size_t triangle() const noexcept { return triangle_; }

private:
    std::size_t triangle_;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

/// Configuration text rejected; line is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line);
    int line() const noexcept { return line_; }

private:
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace evolab
