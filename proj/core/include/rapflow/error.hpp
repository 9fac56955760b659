#pragma once

#include <stdexcept>
#include <string>

namespace rapflow {

// Input errors are the caller's fault (bad files, bad dimensions, bad
// arguments); numerical errors come from the solvers themselves.
enum class ErrorKind { Input, Numerical };

// Every failure raised by the library carries a stable, machine-readable
// code (e.g. "sylvester-singular") alongside the human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] void throw_input(const std::string& code, const std::string& message);
[[noreturn]] void throw_numerical(const std::string& code, const std::string& message);

}  // namespace rapflow
