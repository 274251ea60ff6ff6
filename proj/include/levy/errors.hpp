#pragma once

#include <stdexcept>
#include <string>

namespace levy {

/// Invalid process parameters or malformed input. Maps to CLI exit code 2.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to reach its tolerance. Carries the partial
/// estimate so callers can decide whether it is usable anyway.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double partial = 0.0, double abs_err = 0.0)
        : std::runtime_error(what), partial_(partial), abs_err_(abs_err) {}

    double partial() const noexcept { return partial_; }
    double abs_err() const noexcept { return abs_err_; }

private:
    double partial_;
    double abs_err_;
};

/// The characteristic function does not decay fast enough for Fourier inversion
/// at the requested time.
class NonIntegrableError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The operation has no implementation for this process family.
class UnsupportedFamilyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Quantization bins do not line up with the density grid cells.
class AlignmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too much probability mass lies outside the tabulated range.
class TailMassError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace levy
