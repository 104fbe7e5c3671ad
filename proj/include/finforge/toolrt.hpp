#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "finforge/providers.hpp"
#include "finforge/records.hpp"

namespace finforge {

// The two deployment system prompts, byte-pinned product strings.
inline constexpr const char* kGeneralSystemPrompt =
    "You are one general artificial intelligence robot named ShenNong.";
inline constexpr const char* kCalcSystemPrompt =
    "You are a financial and mathematical calculation assistant. When you need to "
    "perform formula, you can call the calculator plug-in, which is a specific "
    "calculation expression can be executed by Python code. The format is "
    "[Calculator( expression)->result].";

enum class MarkerStatus { ok, unbalanced, missing_arrow, missing_close };

const char* to_string(MarkerStatus s);

struct Marker {
    std::size_t begin = 0;  // byte offset of '['
    std::size_t end = 0;    // one past the last consumed byte
    std::string expr_src;   // raw balanced-paren content, untrimmed
    std::string claimed;    // text between "->" and "]"; empty => unfilled
    MarkerStatus status = MarkerStatus::ok;

    bool well_formed() const { return status == MarkerStatus::ok; }
    bool unfilled() const { return status == MarkerStatus::ok && claimed.empty(); }
};

// Left-to-right scan for "[Calculator(" with balanced-parenthesis expression
// extraction. Malformed candidates are returned with a non-ok status rather
// than skipped. Spans are disjoint and sorted; bytes outside spans are
// untouched gap text.
std::vector<Marker> scan_markers(const std::string& text);

struct FillIssue {
    std::size_t offset = 0;  // marker begin
    std::string expr_src;
    std::string error_tag;   // calc error tag, or "malformed"
    std::string message;
};

struct ToolTranscriptEntry {
    std::string expr_src;
    std::string result;  // display value or ERROR:<kind>
};

struct FillResult {
    std::string text;
    std::size_t filled = 0;
    std::vector<FillIssue> issues;
    std::vector<ToolTranscriptEntry> evaluations;  // one per marker filled
};

// Evaluates every unfilled well-formed marker and writes the display value
// after "->". Markers that already carry a result are untouched; evaluation
// failures fill "ERROR:<kind>" and land in issues. Idempotent.
FillResult fill_markers(const std::string& text);

enum class VerifyStatus { ok, mismatch, parse_error, domain_error };

const char* to_string(VerifyStatus s);

struct VerifyOutcome {
    std::string record_id;
    VerifyStatus status = VerifyStatus::ok;
    std::optional<std::string> expected;  // display of the evaluated value
    std::optional<std::string> found;     // claimed text
    std::optional<double> abs_diff;
};

struct VerifyTolerance {
    double relative = 1e-6;
    double absolute = 0.005;  // floor covering 2-decimal money rounding

    bool accept(double claimed, double evaluated) const;
};

// Re-evaluates every marker in every record answer and compares against the
// claimed result. Per-record worst status (severity ok < mismatch <
// domain_error < parse_error); an unfilled marker counts as a mismatch.
std::vector<VerifyOutcome> verify_examples(const std::vector<InstructionRecord>& records,
                                           const VerifyTolerance& tol = {});

struct ToolChatResult {
    std::string final_text;
    std::vector<ToolTranscriptEntry> transcript;
    std::size_t model_calls = 0;
};

// Raised when tool rounds run out with an unfilled marker still present.
struct ToolTruncationError : std::runtime_error {
    std::string partial;

    explicit ToolTruncationError(std::string partial_text)
        : std::runtime_error("tool rounds exhausted with unfilled marker"),
          partial(std::move(partial_text)) {}
};

// Drives the calculation chat protocol: send the calc system prompt + user
// message; while the reply holds an unfilled marker, fill it and re-invoke
// the model with the filled text as an assistant turn so generation
// continues after the result.
ToolChatResult tool_chat_loop(const std::string& user_msg, ChatProvider& model,
                              std::size_t max_tool_rounds);

}  // namespace finforge
