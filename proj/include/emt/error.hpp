#pragma once

#include <stdexcept>
#include <string>

namespace emt {

// Error categories, each mapped to a distinct process exit code by the CLI.
enum class ErrorCategory {
    Usage = 2,
    MissingInput = 3,
    Schema = 4,
    Data = 5,
    Config = 6,
    Shape = 7,
    Parameter = 8,
    Length = 9,
    Normalization = 10,
    Kinematics = 11,
    Split = 12,
    Encoding = 13,
    Training = 14,
    Protocol = 15,
    Internal = 20,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category_(cat) {}

    ErrorCategory category() const { return category_; }
    int exit_code() const { return static_cast<int>(category_); }

    const char* category_name() const {
        switch (category_) {
            case ErrorCategory::Usage: return "usage";
            case ErrorCategory::MissingInput: return "missing_input";
            case ErrorCategory::Schema: return "schema";
            case ErrorCategory::Data: return "data";
            case ErrorCategory::Config: return "config";
            case ErrorCategory::Shape: return "shape";
            case ErrorCategory::Parameter: return "parameter";
            case ErrorCategory::Length: return "length";
            case ErrorCategory::Normalization: return "normalization";
            case ErrorCategory::Kinematics: return "kinematics";
            case ErrorCategory::Split: return "split";
            case ErrorCategory::Encoding: return "encoding";
            case ErrorCategory::Training: return "training";
            case ErrorCategory::Protocol: return "protocol";
            case ErrorCategory::Internal: return "internal";
        }
        return "internal";
    }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

} // namespace emt
