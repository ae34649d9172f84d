#pragma once

#include <stdexcept>
#include <string>

namespace lscl {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    Success = 0,
    ConfigError = 2,
    CapabilityError = 3,
    StageFailure = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (bad dataset line, out-of-range probability, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// The endpoint (or encoder) lacks something the caller asked for.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Network/transport failure. Retriable by the caller; carries the sample id.
class TransportError : public Error {
public:
    TransportError(const std::string& what, std::string sample_id)
        : Error(what), sample_id_(std::move(sample_id)) {}
    const std::string& sample_id() const noexcept { return sample_id_; }

private:
    std::string sample_id_;
};

/// Numerical failure (non-finite activation or loss).
class NumericError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; wraps the underlying cause with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace lscl
