#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heatlab {

enum class ErrorKind {
    InvalidPoint,      // chart arity or coordinate range mismatch
    Unsupported,       // operation not defined for this manifold kind
    Profile,           // profile curve cannot be splined / is not positive
    NumericalFailure,  // eigen-solver or quadrature breakdown
    Truncation,        // series cutoff cannot meet the requested tolerance
    Unresolved,        // truncation + rounding error dominates the value
    Domain,            // argument outside an operation's domain
    Parse,             // mini-language, flag or file syntax error
    Incompatible,      // bound selector incompatible with manifold
    Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace heatlab
