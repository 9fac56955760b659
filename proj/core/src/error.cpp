#include "rapflow/error.hpp"

namespace rapflow {

Error::Error(ErrorKind kind, std::string code, const std::string& message)
    : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

void throw_input(const std::string& code, const std::string& message) {
    throw Error(ErrorKind::Input, code, message);
}

void throw_numerical(const std::string& code, const std::string& message) {
    throw Error(ErrorKind::Numerical, code, message);
}

}  // namespace rapflow
