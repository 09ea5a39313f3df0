#pragma once

#include <stdexcept>
#include <string>

namespace slax {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument or precondition violation on a public operation.
struct invalid_argument : error {
    using error::error;
};

// Training aborted (non-finite loss, dataset emptied by preprocessing, ...).
struct training_error : error {
    using error::error;
};

// Model file problems. Each kind is distinct so callers can branch on it.
struct io_error : error {
    using error::error;
};
struct truncation_error : io_error {
    using io_error::io_error;
};
struct checksum_error : io_error {
    using io_error::io_error;
};
struct version_error : io_error {
    using io_error::io_error;
};

// An iterative solver hit its iteration cap before meeting its tolerances.
struct convergence_error : error {
    convergence_error(const std::string& what, long iterations, double residual)
        : error(what), iterations(iterations), residual(residual) {}
    long iterations = 0;
    double residual = 0.0;
};

} // namespace slax
