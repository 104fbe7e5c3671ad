#include "finforge/errors.hpp"

namespace finforge {

const char* calc_error_tag(CalcErrorKind kind) {
    switch (kind) {
        case CalcErrorKind::parse: return "parse";
        case CalcErrorKind::arity: return "arity";
        case CalcErrorKind::unknown_function: return "unknown_function";
        case CalcErrorKind::div_zero: return "div_zero";
        case CalcErrorKind::domain: return "domain";
        case CalcErrorKind::overflow: return "overflow";
    }
    return "unknown";
}

}  // namespace finforge
