#pragma once

#include <stdexcept>
#include <string>

namespace sawsim {

/// Failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
    config,      // invalid parameters or config text
    resolution,  // sampling grid too coarse for the requested operation
    range,       // query outside a table or model domain
    solver,      // Newton non-convergence, non-finite state
    metric,      // waveform metric could not be extracted
    io
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace sawsim
