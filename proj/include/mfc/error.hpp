#pragma once

#include <stdexcept>
#include <string>

namespace mfc {

// Error categories map onto CLI exit codes: parse errors exit 2,
// everything else exits 1.
enum class ErrorKind { parse, validation, capacity, eval, config, io, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string what) : std::runtime_error(std::move(what)), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

    static Error parse(const std::string& w) { return {ErrorKind::parse, w}; }
    static Error validation(const std::string& w) { return {ErrorKind::validation, w}; }
    static Error capacity(const std::string& w) { return {ErrorKind::capacity, w}; }
    static Error eval(const std::string& w) { return {ErrorKind::eval, w}; }
    static Error config(const std::string& w) { return {ErrorKind::config, w}; }
    static Error io(const std::string& w) { return {ErrorKind::io, w}; }
    static Error internal(const std::string& w) { return {ErrorKind::internal, w}; }

private:
    ErrorKind kind_;
};

inline const char* error_category(ErrorKind k) {
    switch (k) {
        case ErrorKind::parse: return "parse";
        case ErrorKind::validation: return "validation";
        case ErrorKind::capacity: return "capacity";
        case ErrorKind::eval: return "eval";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
        case ErrorKind::internal: return "internal";
    }
    return "internal";
}

} // namespace mfc
