#pragma once

#include <stdexcept>
#include <string>

namespace specverse {

// Error categories map 1:1 onto CLI exit codes so failures stay
// machine-parsable end to end.
enum class ErrorCategory {
    usage      = 2,  // bad flags / bad arguments
    io         = 3,  // missing or unreadable file, unwritable path
    schema     = 4,  // malformed file content, wrong columns, version mismatch
    validation = 5,  // data violates a corpus/model invariant
    numeric    = 6,  // rank deficiency, zero variance, degenerate inputs
    internal   = 1,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string message)
        : std::runtime_error(std::move(message)), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

    const char* category_name() const noexcept {
        switch (category_) {
            case ErrorCategory::usage: return "usage";
            case ErrorCategory::io: return "io";
            case ErrorCategory::schema: return "schema";
            case ErrorCategory::validation: return "validation";
            case ErrorCategory::numeric: return "numeric";
            case ErrorCategory::internal: return "internal";
        }
        return "internal";
    }

private:
    ErrorCategory category_;
};

inline Error usage_error(std::string msg) { return Error(ErrorCategory::usage, std::move(msg)); }
inline Error io_error(std::string msg) { return Error(ErrorCategory::io, std::move(msg)); }
inline Error schema_error(std::string msg) { return Error(ErrorCategory::schema, std::move(msg)); }
inline Error validation_error(std::string msg) { return Error(ErrorCategory::validation, std::move(msg)); }
inline Error numeric_error(std::string msg) { return Error(ErrorCategory::numeric, std::move(msg)); }

}  // namespace specverse
