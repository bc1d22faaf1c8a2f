#pragma once

#include <stdexcept>
#include <string>

namespace quasi {

/// Broad failure classes. The CLI maps each class onto a process exit code.
enum class ErrorKind {
    InvalidInput,       ///< precondition violated by caller-supplied data
    DimensionMismatch,  ///< operands of incompatible size
    NumericRange,       ///< value outside representable range (e.g. exp overflow)
    NumericFailure,     ///< non-finite values produced during an iterative solve
    Registration,       ///< frame alignment impossible (degenerate frame)
    Io,                 ///< unreadable, malformed or unwritable file
    Config              ///< invalid solver or job configuration
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::NumericRange: return "numeric-range";
        case ErrorKind::NumericFailure: return "numeric-failure";
        case ErrorKind::Registration: return "registration-failure";
        case ErrorKind::Io: return "io";
        case ErrorKind::Config: return "config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

}  // namespace detail
}  // namespace quasi
