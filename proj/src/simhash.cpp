#include "finforge/simhash.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "finforge/errors.hpp"
#include "finforge/hash.hpp"
#include "finforge/parallel.hpp"
#include "finforge/textutil.hpp"

namespace finforge {

void DedupConfig::validate() const {
    if (ngram == 0) throw ConfigError("dedup: ngram must be >= 1");
    if (bands == 0 || 64 % bands != 0) throw ConfigError("dedup: bands must divide 64");
    if (hamming_threshold >= bands) {
        throw ConfigError("dedup: hamming_threshold must be < bands for exact banding");
    }
    if (hash_algorithm != "fnv1a64") {
        throw ConfigError("dedup: unknown hash algorithm " + hash_algorithm);
    }
}

Signature64 simhash64(const std::string& text, std::size_t ngram) {
    const auto cps = decode_utf8(text);
    bool all_space = true;
    for (char32_t cp : cps) {
        if (!is_unicode_space(cp)) { all_space = false; break; }
    }
    if (cps.empty() || all_space) throw DataError("simhash64: empty text");

    std::unordered_map<std::string, uint32_t> features;
    if (cps.size() < ngram) {
        features[text] = 1;
    } else {
        std::string gram;
        for (std::size_t i = 0; i + ngram <= cps.size(); ++i) {
            gram.clear();
            for (std::size_t k = 0; k < ngram; ++k) append_utf8(gram, cps[i + k]);
            ++features[gram];
        }
    }

    std::array<int64_t, 64> acc{};
    for (const auto& [gram, weight] : features) {
        const uint64_t h = fnv1a64(gram);
        for (int bit = 0; bit < 64; ++bit) {
            acc[static_cast<std::size_t>(bit)] +=
                (h >> bit) & 1 ? static_cast<int64_t>(weight) : -static_cast<int64_t>(weight);
        }
    }
    Signature64 sig;
    for (int bit = 0; bit < 64; ++bit) {
        if (acc[static_cast<std::size_t>(bit)] > 0) sig.bits |= 1ull << bit;
    }
    return sig;
}

std::vector<std::size_t> dedup_signatures(const std::vector<Signature64>& sigs,
                                          const DedupConfig& cfg) {
    cfg.validate();
    const unsigned band_width = 64 / cfg.bands;
    const uint64_t band_mask = band_width == 64 ? ~0ull : (1ull << band_width) - 1;

    std::vector<std::size_t> matched_kept(sigs.size(), SIZE_MAX);
    // band -> (band value -> kept indices)
    std::vector<std::unordered_map<uint64_t, std::vector<std::size_t>>> index(cfg.bands);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        candidates.clear();
        std::size_t best = SIZE_MAX;
        for (unsigned b = 0; b < cfg.bands; ++b) {
            const uint64_t key = (sigs[i].bits >> (b * band_width)) & band_mask;
            auto it = index[b].find(key);
            if (it == index[b].end()) continue;
            for (std::size_t j : it->second) {
                if (hamming_distance(sigs[i], sigs[j]) <= cfg.hamming_threshold &&
                    j < best) {
                    best = j;
                }
            }
        }
        if (best != SIZE_MAX) {
            matched_kept[i] = best;
            continue;  // dropped entries never join the index
        }
        for (unsigned b = 0; b < cfg.bands; ++b) {
            const uint64_t key = (sigs[i].bits >> (b * band_width)) & band_mask;
            index[b][key].push_back(i);
        }
    }
    return matched_kept;
}

DedupResult dedup_chunks(const std::vector<Chunk>& chunks, const DedupConfig& cfg) {
    cfg.validate();
    std::vector<Signature64> sigs(chunks.size());
    parallel_for(chunks.size(), cfg.jobs, [&](std::size_t i) {
        sigs[i] = simhash64(chunks[i].text, cfg.ngram);
    });

    const auto matched = dedup_signatures(sigs, cfg);
    DedupResult result;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (matched[i] == SIZE_MAX) {
            result.kept.push_back(chunks[i]);
        } else {
            result.dropped_pairs.emplace_back(chunks[matched[i]].id, chunks[i].id);
        }
    }
    return result;
}

void write_signature_index(
    const std::string& path,
    const std::vector<std::pair<std::string, Signature64>>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write signature index " + path);
    for (const auto& [id, sig] : entries) {
        const auto len = static_cast<uint32_t>(id.size());
        std::array<unsigned char, 4> lenb{};
        for (int k = 0; k < 4; ++k) lenb[static_cast<std::size_t>(k)] =
            static_cast<unsigned char>((len >> (8 * k)) & 0xFF);
        out.write(reinterpret_cast<const char*>(lenb.data()), 4);
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        std::array<unsigned char, 8> bits{};
        for (int k = 0; k < 8; ++k) bits[static_cast<std::size_t>(k)] =
            static_cast<unsigned char>((sig.bits >> (8 * k)) & 0xFF);
        out.write(reinterpret_cast<const char*>(bits.data()), 8);
    }
}

std::vector<std::pair<std::string, Signature64>> read_signature_index(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open signature index " + path);
    std::vector<std::pair<std::string, Signature64>> entries;
    while (true) {
        std::array<unsigned char, 4> lenb{};
        in.read(reinterpret_cast<char*>(lenb.data()), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) throw DataError("truncated signature index " + path);
        uint32_t len = 0;
        for (int k = 0; k < 4; ++k) len |= static_cast<uint32_t>(lenb[static_cast<std::size_t>(k)]) << (8 * k);
        std::string id(len, '\0');
        in.read(id.data(), static_cast<std::streamsize>(len));
        if (in.gcount() != static_cast<std::streamsize>(len)) {
            throw DataError("truncated signature index " + path);
        }
        std::array<unsigned char, 8> bits{};
        in.read(reinterpret_cast<char*>(bits.data()), 8);
        if (in.gcount() != 8) throw DataError("truncated signature index " + path);
        Signature64 sig;
        for (int k = 0; k < 8; ++k) sig.bits |= static_cast<uint64_t>(bits[static_cast<std::size_t>(k)]) << (8 * k);
        entries.emplace_back(std::move(id), sig);
    }
    return entries;
}

}  // namespace finforge
