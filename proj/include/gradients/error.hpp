#pragma once

#include <stdexcept>
#include <string>

namespace gradients {

/// Broad failure class; the CLI maps each onto its exit code.
enum class ErrorKind {
    parameter,  // bad argument or configuration
    data,       // unreadable or malformed input
    analysis,   // e.g. a cycle where a gradient was required
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error parameter_error(const std::string& what) { return {ErrorKind::parameter, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::data, what}; }
inline Error analysis_error(const std::string& what) { return {ErrorKind::analysis, what}; }

}  // namespace gradients
