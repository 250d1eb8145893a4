#pragma once

#include <stdexcept>
#include <string>

namespace operkit {

// Malformed or unreadable input (files, headers, binary layout).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A well-formed input that violates an operation's precondition
// (too short, too few points, degenerate design...).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace operkit
