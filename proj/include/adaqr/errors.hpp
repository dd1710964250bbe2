#pragma once

#include <stdexcept>
#include <string>

namespace adaqr {

// Error categories map onto CLI exit codes: validation/io -> 2, network -> 3.
enum class ErrorKind { validation, io, network };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& msg) {
    throw Error(ErrorKind::validation, msg);
}

[[noreturn]] inline void throw_io(const std::string& msg) {
    throw Error(ErrorKind::io, msg);
}

[[noreturn]] inline void throw_network(const std::string& msg) {
    throw Error(ErrorKind::network, msg);
}

} // namespace adaqr
