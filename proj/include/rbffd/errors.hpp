#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbffd {

/// Request that would exhaust memory or time (e.g. too many subdivision levels).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (node files, configs, presets).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Local interpolation matrix too ill-conditioned to solve in double precision.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double condition_number)
        : std::runtime_error(what), condition_number_(condition_number)
    {
    }
    double condition_number() const noexcept { return condition_number_; }

private:
    double condition_number_;
};

/// Failure while processing one stencil during assembly.
class StencilError : public std::runtime_error {
public:
    StencilError(std::size_t stencil_index, const std::string& cause)
        : std::runtime_error("stencil " + std::to_string(stencil_index) + ": " + cause),
          stencil_index_(stencil_index)
    {
    }
    std::size_t stencil_index() const noexcept { return stencil_index_; }

private:
    std::size_t stencil_index_;
};

/// Shape-parameter root finder ran out of iterations.
class RootFindError : public std::runtime_error {
public:
    RootFindError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), lo_(lo), hi_(hi)
    {
    }
    double bracket_lo() const noexcept { return lo_; }
    double bracket_hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

/// Iterative or direct linear solver failure (breakdown, stagnation, zero pivot).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual)
    {
    }
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Time integration aborted at a given step.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(std::size_t step, const std::string& cause)
        : std::runtime_error("step " + std::to_string(step) + ": " + cause), step_(step)
    {
    }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace rbffd
