#pragma once

#include <stdexcept>
#include <string>

namespace eqalign {

/// Broad failure classes. The CLI maps Validation to exit code 2 and
/// everything else to exit code 1.
enum class ErrorKind {
    Validation,   // bad input data, bad configuration, precondition violated
    Parse,        // model output could not be interpreted
    Convergence,  // iterative solver did not reach tolerance
    Gateway,      // transport-level failure talking to a model endpoint
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error validation_error(const std::string& what) { return {ErrorKind::Validation, what}; }
inline Error parse_error(const std::string& what) { return {ErrorKind::Parse, what}; }
inline Error gateway_error(const std::string& what) { return {ErrorKind::Gateway, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }

}  // namespace eqalign
