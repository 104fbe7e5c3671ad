#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "finforge/records.hpp"

namespace finforge {

struct Signature64 {
    uint64_t bits = 0;

    friend bool operator==(const Signature64&, const Signature64&) = default;
};

struct DedupConfig {
    std::size_t ngram = 3;              // character-level
    unsigned hamming_threshold = 3;
    unsigned bands = 4;                 // must divide 64; threshold < bands
    std::string hash_algorithm = "fnv1a64";
    std::size_t jobs = 1;

    void validate() const;  // throws ConfigError
};

// SimHash over codepoint n-grams weighted by frequency. Each n-gram is
// hashed with FNV-1a64 of its UTF-8 bytes; per-bit sign sums produce the
// signature (tie -> 0). Texts shorter than n codepoints contribute the
// whole text as a single feature. Throws DataError on text that is empty
// after whitespace stripping.
Signature64 simhash64(const std::string& text, std::size_t ngram = 3);

inline unsigned hamming_distance(Signature64 a, Signature64 b) {
    return static_cast<unsigned>(__builtin_popcountll(a.bits ^ b.bits));
}

struct DedupResult {
    std::vector<Chunk> kept;
    // (kept_id, dropped_id): earliest kept chunk within threshold wins.
    std::vector<std::pair<std::string, std::string>> dropped_pairs;
};

// Greedy first-seen-wins sweep over precomputed signatures: index i is
// dropped iff some earlier kept index j has hamming(sig[i], sig[j]) <=
// threshold. Candidates come from the banded index; with bands >
// threshold the pigeonhole principle makes the candidate set complete.
// Returns for each input index the index of the kept duplicate it matched,
// or SIZE_MAX when the entry is kept.
std::vector<std::size_t> dedup_signatures(const std::vector<Signature64>& sigs,
                                          const DedupConfig& cfg);

DedupResult dedup_chunks(const std::vector<Chunk>& chunks, const DedupConfig& cfg);

// Sidecar signature index: little-endian (u32 id length, id bytes, u64 bits)
// per entry.
void write_signature_index(const std::string& path,
                           const std::vector<std::pair<std::string, Signature64>>& entries);
std::vector<std::pair<std::string, Signature64>> read_signature_index(const std::string& path);

}  // namespace finforge
