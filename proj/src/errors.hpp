// Error taxonomy shared by the library, the C API and the CLI exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace aiegrid {

// Status codes. 0/2/3/4 double as CLI exit codes; IO maps to 2 at the CLI.
enum class Status : int {
    ok = 0,
    validation = 2,
    infeasible = 3,
    internal = 4,
    io = 5,
};

class Error : public std::runtime_error {
public:
    Error(Status s, std::string msg) : std::runtime_error(std::move(msg)), status_(s) {}
    Status status() const { return status_; }

private:
    Status status_;
};

// Malformed or invalid input: model files, device files, configs, overrides.
class ValidationError : public Error {
public:
    explicit ValidationError(std::string msg) : Error(Status::validation, std::move(msg)) {}
};

// Inputs are valid but no legal compilation exists (budget, packing, placement).
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(std::string msg) : Error(Status::infeasible, std::move(msg)) {}
};

// A compiler or simulator invariant failed; always a bug, never user error.
class InternalError : public Error {
public:
    explicit InternalError(std::string msg) : Error(Status::internal, std::move(msg)) {}
};

class IoError : public Error {
public:
    explicit IoError(std::string msg) : Error(Status::io, std::move(msg)) {}
};

} // namespace aiegrid
