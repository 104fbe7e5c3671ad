#include "finforge/toolrt.hpp"

#include <cmath>
#include <cstdlib>

#include "finforge/calc.hpp"
#include "finforge/errors.hpp"
#include "finforge/textutil.hpp"

namespace finforge {

const char* to_string(MarkerStatus s) {
    switch (s) {
        case MarkerStatus::ok: return "ok";
        case MarkerStatus::unbalanced: return "unbalanced";
        case MarkerStatus::missing_arrow: return "missing_arrow";
        case MarkerStatus::missing_close: return "missing_close";
    }
    return "ok";
}

const char* to_string(VerifyStatus s) {
    switch (s) {
        case VerifyStatus::ok: return "ok";
        case VerifyStatus::mismatch: return "mismatch";
        case VerifyStatus::parse_error: return "parse_error";
        case VerifyStatus::domain_error: return "domain_error";
    }
    return "ok";
}

std::vector<Marker> scan_markers(const std::string& text) {
    static const std::string open = "[Calculator(";
    std::vector<Marker> markers;
    std::size_t pos = 0;
    while (true) {
        const std::size_t start = text.find(open, pos);
        if (start == std::string::npos) break;
        Marker m;
        m.begin = start;
        const std::size_t expr_begin = start + open.size();
        std::size_t i = expr_begin;
        // Balanced-paren expression scan. '[' and ']' cannot occur inside a
        // valid expression, so hitting one before balance means a broken
        // marker; stopping there lets a following marker still be found.
        int depth = 1;
        bool broken = false;
        while (i < text.size()) {
            const char c = text[i];
            if (c == '(') {
                ++depth;
            } else if (c == ')') {
                if (--depth == 0) break;
            } else if (c == '[' || c == ']') {
                broken = true;
                break;
            }
            ++i;
        }
        if (i >= text.size() || broken) {
            m.status = MarkerStatus::unbalanced;
            m.expr_src = text.substr(expr_begin, i - expr_begin);
            m.end = i;  // offending byte (or end of text) stays outside the span
            pos = std::max(i, expr_begin);
            markers.push_back(std::move(m));
            continue;
        }
        m.expr_src = text.substr(expr_begin, i - expr_begin);
        ++i;  // past ')'
        if (text.compare(i, 2, "->") != 0) {
            m.status = MarkerStatus::missing_arrow;
            m.end = i;
            pos = i;
            markers.push_back(std::move(m));
            continue;
        }
        i += 2;
        // Claimed result runs to ']'; a new "[Calculator(" or end of text
        // arriving first means the close bracket is missing.
        const std::size_t close = text.find(']', i);
        const std::size_t next_open = text.find(open, i);
        if (close == std::string::npos ||
            (next_open != std::string::npos && next_open < close)) {
            m.status = MarkerStatus::missing_close;
            m.end = next_open != std::string::npos ? next_open : text.size();
            m.claimed = text.substr(i, m.end - i);
            pos = m.end;
            markers.push_back(std::move(m));
            continue;
        }
        m.claimed = text.substr(i, close - i);
        m.end = close + 1;
        pos = m.end;
        markers.push_back(std::move(m));
    }
    return markers;
}

FillResult fill_markers(const std::string& text) {
    FillResult result;
    const auto markers = scan_markers(text);
    std::string out;
    out.reserve(text.size() + markers.size() * 8);
    std::size_t cursor = 0;
    for (const auto& m : markers) {
        out.append(text, cursor, m.begin - cursor);
        if (m.unfilled()) {
            std::string display;
            try {
                display = calc::eval(m.expr_src).display;
                ++result.filled;
            } catch (const CalcError& e) {
                display = std::string("ERROR:") + calc_error_tag(e.kind);
                result.issues.push_back({m.begin, m.expr_src, calc_error_tag(e.kind), e.what()});
            }
            result.evaluations.push_back({m.expr_src, display});
            out += "[Calculator(" + m.expr_src + ")->" + display + "]";
        } else {
            if (!m.well_formed()) {
                result.issues.push_back(
                    {m.begin, m.expr_src, "malformed", to_string(m.status)});
            }
            out.append(text, m.begin, m.end - m.begin);
        }
        cursor = m.end;
    }
    out.append(text, cursor, text.size() - cursor);
    result.text = std::move(out);
    return result;
}

bool VerifyTolerance::accept(double claimed, double evaluated) const {
    const double diff = std::fabs(claimed - evaluated);
    return diff <= std::max(relative * std::fabs(evaluated), absolute);
}

namespace {

int severity(VerifyStatus s) {
    switch (s) {
        case VerifyStatus::ok: return 0;
        case VerifyStatus::mismatch: return 1;
        case VerifyStatus::domain_error: return 2;
        case VerifyStatus::parse_error: return 3;
    }
    return 0;
}

bool parse_claimed(const std::string& claimed, double& out) {
    const std::string t = trim(claimed);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

}  // namespace

std::vector<VerifyOutcome> verify_examples(const std::vector<InstructionRecord>& records,
                                           const VerifyTolerance& tol) {
    std::vector<VerifyOutcome> outcomes;
    outcomes.reserve(records.size());
    for (const auto& rec : records) {
        VerifyOutcome worst;
        worst.record_id = rec.id;
        auto consider = [&](VerifyStatus status, std::optional<std::string> expected,
                            std::optional<std::string> found, std::optional<double> diff) {
            if (severity(status) > severity(worst.status)) {
                worst.status = status;
                worst.expected = std::move(expected);
                worst.found = std::move(found);
                worst.abs_diff = diff;
            }
        };
        for (const auto& m : scan_markers(rec.answer)) {
            if (!m.well_formed()) {
                consider(VerifyStatus::parse_error, std::nullopt, std::nullopt, std::nullopt);
                continue;
            }
            calc::CalcResult evaluated;
            try {
                evaluated = calc::eval(m.expr_src);
            } catch (const CalcError& e) {
                const bool parse_stage = e.kind == CalcErrorKind::parse ||
                                         e.kind == CalcErrorKind::arity ||
                                         e.kind == CalcErrorKind::unknown_function;
                consider(parse_stage ? VerifyStatus::parse_error : VerifyStatus::domain_error,
                         std::nullopt, std::nullopt, std::nullopt);
                continue;
            }
            double claimed = 0.0;
            if (!parse_claimed(m.claimed, claimed)) {
                consider(VerifyStatus::mismatch, evaluated.display, m.claimed, std::nullopt);
                continue;
            }
            const double diff = std::fabs(claimed - evaluated.value);
            if (!tol.accept(claimed, evaluated.value)) {
                consider(VerifyStatus::mismatch, evaluated.display, m.claimed, diff);
            } else if (worst.status == VerifyStatus::ok) {
                worst.abs_diff = worst.abs_diff ? std::max(*worst.abs_diff, diff) : diff;
            }
        }
        outcomes.push_back(std::move(worst));
    }
    return outcomes;
}

ToolChatResult tool_chat_loop(const std::string& user_msg, ChatProvider& model,
                              std::size_t max_tool_rounds) {
    if (max_tool_rounds < 1) throw ConfigError("max_tool_rounds must be >= 1");
    ToolChatResult result;
    std::string acc = model.chat_complete(kCalcSystemPrompt, {{"user", user_msg}});
    ++result.model_calls;
    std::size_t rounds = 0;
    while (true) {
        const auto markers = scan_markers(acc);
        bool has_unfilled = false;
        for (const auto& m : markers) has_unfilled = has_unfilled || m.unfilled();
        if (!has_unfilled) break;
        if (rounds >= max_tool_rounds) throw ToolTruncationError(acc);
        FillResult filled = fill_markers(acc);
        for (auto& entry : filled.evaluations) {
            result.transcript.push_back(std::move(entry));
        }
        const std::string continuation = model.chat_complete(
            kCalcSystemPrompt, {{"user", user_msg}, {"assistant", filled.text}});
        ++result.model_calls;
        acc = filled.text + continuation;
        ++rounds;
    }
    result.final_text = std::move(acc);
    return result;
}

}  // namespace finforge
