#pragma once

#include <stdexcept>
#include <string>

namespace probgate {

enum class ErrorKind {
    Io,          // filesystem / stream failures
    Parse,       // malformed input documents
    Validation,  // well-formed input violating a contract
    Argument,    // bad arguments to an operation
    Db           // database open/exec failures outside ExecutionOutcome
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_io(std::string msg) { throw Error(ErrorKind::Io, std::move(msg)); }
[[noreturn]] inline void throw_parse(std::string msg) { throw Error(ErrorKind::Parse, std::move(msg)); }
[[noreturn]] inline void throw_validation(std::string msg) { throw Error(ErrorKind::Validation, std::move(msg)); }
[[noreturn]] inline void throw_argument(std::string msg) { throw Error(ErrorKind::Argument, std::move(msg)); }
[[noreturn]] inline void throw_db(std::string msg) { throw Error(ErrorKind::Db, std::move(msg)); }

} // namespace probgate
