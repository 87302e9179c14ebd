#pragma once

#include <stdexcept>
#include <string>

namespace lidbounds {

enum class Errc {
    argument,           // precondition violated by the caller
    format,             // malformed input file
    io,                 // file could not be opened / written
    degenerate,         // geometry or sample makes the quantity undefined
    numeric,            // quadrature non-convergence, zero probability, ...
};

inline const char* to_string(Errc c) noexcept {
    switch (c) {
        case Errc::argument: return "argument error";
        case Errc::format: return "format error";
        case Errc::io: return "I/O error";
        case Errc::degenerate: return "degenerate input";
        case Errc::numeric: return "numeric error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(Errc::argument, what);
}

} // namespace lidbounds
