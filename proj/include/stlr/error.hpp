#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace stlr {

struct SourcePos {
    int line = 0;
    int col = 0;
};

/// Every recoverable failure in the library is one of these kinds. The CLI
/// maps them onto exit codes; tests match on the kind, not the message.
enum class ErrorKind {
    Parse,
    Sort,
    Type,
    Eval,
    FuelExhausted,
    Registry,
    Generator,
    SizeGuard,
    Config,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::optional<SourcePos> pos = std::nullopt)
        : std::runtime_error(std::move(message)), kind_(kind), pos_(pos) {}

    ErrorKind kind() const { return kind_; }
    std::optional<SourcePos> pos() const { return pos_; }

    static const char* kind_name(ErrorKind k) {
        switch (k) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Sort: return "sort";
        case ErrorKind::Type: return "type";
        case ErrorKind::Eval: return "eval";
        case ErrorKind::FuelExhausted: return "fuel";
        case ErrorKind::Registry: return "registry";
        case ErrorKind::Generator: return "generator";
        case ErrorKind::SizeGuard: return "size-guard";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
        }
        return "unknown";
    }

private:
    ErrorKind kind_;
    std::optional<SourcePos> pos_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              std::optional<SourcePos> pos = std::nullopt) {
    throw Error(kind, message, pos);
}

} // namespace stlr
