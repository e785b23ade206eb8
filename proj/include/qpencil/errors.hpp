#pragma once

#include <stdexcept>
#include <string>

namespace qpencil {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input: bad config, out-of-range argument, dimension mismatch, inadmissible pencil.
class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

class NumericalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numerical"; }
};

class StepUnderflow : public NumericalError {
public:
    StepUnderflow(double x, double step)
        : NumericalError("step-size underflow at x = " + std::to_string(x) +
                         " (h = " + std::to_string(step) + ")"),
          x_(x) {}
    double x() const noexcept { return x_; }
    const char* kind() const noexcept override { return "step_underflow"; }

private:
    double x_;
};

// A matrix that must be inverted (U(psi), V(phi), ...) is too close to singular:
// the spectral parameter sits at or near an eigenvalue.
class NearEigenvalue : public NumericalError {
public:
    NearEigenvalue(const std::string& what, double cond)
        : NumericalError(what + " (condition number " + std::to_string(cond) + ")"), cond_(cond) {}
    double condition() const noexcept { return cond_; }
    const char* kind() const noexcept override { return "near_eigenvalue"; }

private:
    double cond_;
};

class ZeroOnContour : public NumericalError {
public:
    using NumericalError::NumericalError;
    const char* kind() const noexcept override { return "zero_on_contour"; }
};

class NonConvergence : public NumericalError {
public:
    NonConvergence(const std::string& what, double last_change)
        : NumericalError(what + " (last change " + std::to_string(last_change) + ")"),
          last_change_(last_change) {}
    double last_change() const noexcept { return last_change_; }
    const char* kind() const noexcept override { return "non_convergence"; }

private:
    double last_change_;
};

}  // namespace qpencil
