#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tdap {

enum class ErrorKind {
    MissingColumn,
    NonNumericCell,
    NonPositiveTime,
    InvalidStatus,
    EmptyCohort,
    NoEventsBeforeT0,
    T0BeyondSupport,
    ZeroCensorSurvival,
    EmptyThresholdSet,
    NoControlsAtT0,
    NotPaired,
    DivisionByZeroAP,
    TooManyFailedReplicates,
    InvalidArgument,
};

constexpr std::string_view error_name(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::InvalidStatus: return "InvalidStatus";
    case ErrorKind::EmptyCohort: return "EmptyCohort";
    case ErrorKind::NoEventsBeforeT0: return "NoEventsBeforeT0";
    case ErrorKind::T0BeyondSupport: return "T0BeyondSupport";
    case ErrorKind::ZeroCensorSurvival: return "ZeroCensorSurvival";
    case ErrorKind::EmptyThresholdSet: return "EmptyThresholdSet";
    case ErrorKind::NoControlsAtT0: return "NoControlsAtT0";
    case ErrorKind::NotPaired: return "NotPaired";
    case ErrorKind::DivisionByZeroAP: return "DivisionByZeroAP";
    case ErrorKind::TooManyFailedReplicates: return "TooManyFailedReplicates";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Validation failure raised by every module. `what()` starts with the
/// error name so front ends can print it verbatim.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(error_name(kind)) +
                             (detail.empty() ? "" : ": " + detail)),
          kind_(kind) {}

    explicit Error(ErrorKind kind) : Error(kind, "") {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace tdap
