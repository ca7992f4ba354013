#include "heatlab/error.hpp"

namespace heatlab {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidPoint: return "invalid-point";
        case ErrorKind::Unsupported: return "unsupported";
        case ErrorKind::Profile: return "profile";
        case ErrorKind::NumericalFailure: return "numerical-failure";
        case ErrorKind::Truncation: return "truncation";
        case ErrorKind::Unresolved: return "unresolved";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Incompatible: return "incompatible";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace heatlab
