#pragma once

#include <stdexcept>
#include <string>

namespace hopgag {

/// Raised when an argument violates a precondition (non-finite values,
/// shape mismatch, malformed input files, ...).
class invalid_input : public std::invalid_argument {
public:
    explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an iterative routine fails to reach its tolerance.
/// Carries the last bracket width (or residual) for diagnostics.
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& what, double last_width)
        : std::runtime_error(what), last_width_(last_width) {}

    double last_width() const noexcept { return last_width_; }

private:
    double last_width_;
};

} // namespace hopgag
