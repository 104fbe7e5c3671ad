#pragma once

#include <cstddef>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "finforge/records.hpp"

namespace finforge {

// Text normalization applied to every ingested document:
//   - Unicode NFC
//   - CRLF -> LF
//   - control characters removed (except \n and \t)
//   - runs of more than two blank lines collapsed to two
//   - fullwidth/ideographic space -> ASCII space
// Idempotent. Throws DataError naming the record id on invalid UTF-8.
std::string normalize_text(const std::string& text);
DocumentRecord normalize_document(const DocumentRecord& raw);

inline constexpr std::size_t kMinChunkLength = 64;
inline constexpr std::size_t kDefaultChunkLength = 2048;  // characters

// Splits long documents into ceil(len/max_length) balanced pieces at
// paragraph/sentence boundaries (hard cut as last resort) and concatenates
// consecutive short documents of the same source with "\n\n" while the
// result stays within max_length. Lengths are codepoints. Deterministic
// and order-preserving.
std::vector<Chunk> chunk_documents(const std::vector<DocumentRecord>& docs,
                                   std::size_t max_length);

enum class PrivacyMode { drop, redact };

struct RuleSet {
    PrivacyMode mode = PrivacyMode::drop;
    bool privacy_id = true;
    bool privacy_phone = true;
    bool privacy_email = true;
    std::vector<std::string> sensitive_terms;
    double min_content_ratio = 0.3;  // alphanumeric+CJK over non-space codepoints
    std::size_t repeat_ngram = 10;   // codepoint n-gram length
    std::size_t repeat_limit = 5;    // drop when any n-gram repeats this often
    std::vector<std::pair<std::string, std::regex>> extra_patterns;

    // Line-based "key = value" config; see docs in the repository README.
    // Malformed regex raises ConfigError naming the rule.
    static RuleSet load(const std::string& path);
    static RuleSet parse(const std::string& text);
};

// Fraction of alphanumeric+CJK codepoints among non-whitespace codepoints.
// Zero when the chunk has no non-whitespace content.
double content_ratio(const std::string& text);

std::pair<std::vector<Chunk>, CleanReport> apply_clean_rules(
    const std::vector<Chunk>& chunks, const RuleSet& rules);

}  // namespace finforge
