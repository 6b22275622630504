#pragma once

#include <stdexcept>
#include <string>

namespace tapsynth {

// Mirrors tapsynth_status in the C API; values must stay in sync.
enum class ErrorCode {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    DuplicateId = 3,
    NotFound = 4,
    KindMismatch = 5,
    DimMismatch = 6,
    CorruptFile = 7,
    UnknownId = 8,
    Provider = 9,
    Backend = 10,
    Exhausted = 11,
    Io = 12,
    Config = 13,
    Internal = 14,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tapsynth
