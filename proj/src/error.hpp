#pragma once

#include <stdexcept>
#include <string>

namespace nspod {

// Error categories; mirrored one-to-one by the C API status codes.
enum class ErrorCode {
    invalid_argument = 1,
    io = 2,
    parse = 3,
    numeric = 4,
    diverged = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace nspod
