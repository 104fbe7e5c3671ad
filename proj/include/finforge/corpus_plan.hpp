#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "finforge/records.hpp"

namespace finforge {

struct MixPlan {
    // Keys: "domain", "general_0", "general_1", ...
    std::map<std::string, std::int64_t> per_source_tokens;
    std::int64_t domain_total = 0;
    std::int64_t general_total = 0;
    // Exact reduced integer ratio of (domain_total, general_total).
    std::pair<std::int64_t, std::int64_t> ratio{0, 0};
    // Fractions of the (resampled) training mix; sum to 1.
    std::map<std::string, double> sampling_weights;
    // Per-source token multipliers. All 1.0 when the natural ratio is within
    // 10% of target; otherwise general sources carry the up/down-sampling
    // factor that lands the mix exactly on target.
    std::map<std::string, double> resample_factors;
};

// target_ratio is (domain, general), e.g. {1, 3}.
MixPlan plan_mix(std::int64_t domain_tokens,
                 const std::vector<std::int64_t>& general_tokens,
                 std::pair<std::int64_t, std::int64_t> target_ratio);

struct VocabExtension {
    std::vector<std::string> new_tokens;  // descending score, ties lexicographic
    std::map<std::string, std::int64_t> scores;
    std::size_t base_vocab_size = 0;
};

// Pair-merge (BPE-style) subword learner over runs of non-whitespace
// codepoints. Learned multi-codepoint pieces are scored by their overlapping
// substring frequency in the corpus, filtered against base_vocab, and the
// top max_new returned.
VocabExtension extend_vocab(const std::vector<Chunk>& chunks,
                            const std::set<std::string>& base_vocab,
                            std::size_t max_new);

// "25e9", "1000000", "2.5e6" -> exact integer token count.
std::int64_t parse_token_count(const std::string& s);

// "1:3" -> {1, 3}.
std::pair<std::int64_t, std::int64_t> parse_ratio(const std::string& s);

// One token per line, UTF-8; blank lines ignored.
std::set<std::string> read_vocab_file(const std::string& path);

}  // namespace finforge
