#ifndef PTQM_ERRORS_HPP
#define PTQM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptqm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed expression text. Carries the byte offset of the offending token.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, const std::string& msg)
        : Error("syntax error at position " + std::to_string(position) + ": " + msg),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Variable index out of range, or component/dimension counts inconsistent.
class ArityError : public Error {
public:
    explicit ArityError(const std::string& msg) : Error(msg) {}
};

/// Evaluation hit a point outside an elementary function's domain
/// (log of non-positive, sqrt of negative, division by zero).
class DomainError : public Error {
public:
    DomainError(const std::string& node, const std::vector<double>& point,
                const std::string& msg);
    const std::string& node() const { return node_; }
    const std::vector<double>& point() const { return point_; }

private:
    std::string node_;
    std::vector<double> point_;
};

/// Invalid configuration value (grid counts, thresholds, config files, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Jacobian determinant at or below the positivity threshold, or the
/// Jacobian could not be evaluated at the point at all.
class SingularJacobian : public Error {
public:
    SingularJacobian(const std::vector<double>& point, double det,
                     const std::string& msg);
    const std::vector<double>& point() const { return point_; }
    double det() const { return det_; }

private:
    std::vector<double> point_;
    double det_;
};

/// Newton inversion failed to reach the residual target.
class ConvergenceError : public Error {
public:
    ConvergenceError(int iterations, double residual, const std::string& msg);
    int iterations() const { return iterations_; }
    double residual() const { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// Operation not available at this dimension (symbolic determinants,
/// dense materialization limits).
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Two grid functions from different grids were combined.
class GridMismatch : public Error {
public:
    explicit GridMismatch(const std::string& msg) : Error(msg) {}
};

/// A function's numerical support maps too close to a grid boundary for
/// the unitary change of variables to be well posed.
class SupportError : public Error {
public:
    explicit SupportError(const std::string& msg) : Error(msg) {}
};

/// Formats a point as "(a, b, c)" for error messages.
std::string format_point(const std::vector<double>& point);

} // namespace ptqm

#endif
