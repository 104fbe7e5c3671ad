#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finforge {

// Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or contract-violating input data. CLI exit code 1.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Remote provider failure after retries were exhausted.
struct ProviderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CalcErrorKind {
    parse,
    arity,
    unknown_function,
    div_zero,
    domain,
    overflow,
};

const char* calc_error_tag(CalcErrorKind kind);

struct CalcError : std::runtime_error {
    CalcErrorKind kind;
    std::size_t offset;  // byte offset into the source for parse-stage errors

    CalcError(CalcErrorKind k, const std::string& msg, std::size_t off = 0)
        : std::runtime_error(msg), kind(k), offset(off) {}
};

}  // namespace finforge
