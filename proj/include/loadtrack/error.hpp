#pragma once

#include <stdexcept>
#include <string>

namespace loadtrack {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCode : int {
    generic = 1,
    missing_file = 2,
    schema_mismatch = 3,
    invalid_config = 4,
    data_error = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    int exit_code() const noexcept { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace loadtrack
