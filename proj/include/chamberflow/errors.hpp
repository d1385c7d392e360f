#pragma once

#include <stdexcept>
#include <string>

namespace chamberflow {

/// Bad arguments: unsupported group, wrong dimension, out-of-domain input.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation could not be carried out to the required accuracy.
/// Carries the module and operation that failed so the CLI can report them.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(std::string module, std::string op, const std::string& what)
        : std::runtime_error(module + "::" + op + ": " + what),
          module_(std::move(module)), op_(std::move(op)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& op() const noexcept { return op_; }

private:
    std::string module_;
    std::string op_;
};

} // namespace chamberflow
