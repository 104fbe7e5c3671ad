#include "finforge/corpus_plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "finforge/errors.hpp"
#include "finforge/textutil.hpp"

namespace finforge {

MixPlan plan_mix(std::int64_t domain_tokens,
                 const std::vector<std::int64_t>& general_tokens,
                 std::pair<std::int64_t, std::int64_t> target_ratio) {
    if (domain_tokens == 0) {
        throw DataError("domain token count is zero: ratio undefined");
    }
    if (domain_tokens < 0) throw DataError("negative domain token count");
    if (general_tokens.empty()) {
        throw ConfigError("at least one general source is required");
    }
    if (target_ratio.first <= 0 || target_ratio.second <= 0) {
        throw ConfigError("target ratio parts must be positive");
    }

    MixPlan plan;
    plan.domain_total = domain_tokens;
    plan.per_source_tokens["domain"] = domain_tokens;
    for (std::size_t i = 0; i < general_tokens.size(); ++i) {
        if (general_tokens[i] < 0) throw DataError("negative general token count");
        plan.per_source_tokens["general_" + std::to_string(i)] = general_tokens[i];
        plan.general_total += general_tokens[i];
    }
    if (plan.general_total == 0) {
        throw DataError("general token total is zero: ratio undefined");
    }

    const std::int64_t g = std::gcd(plan.domain_total, plan.general_total);
    plan.ratio = {plan.domain_total / g, plan.general_total / g};

    // Deviation measured on the general side against the general total the
    // target ratio implies for this domain size.
    const double general_target =
        static_cast<double>(plan.domain_total) *
        static_cast<double>(target_ratio.second) /
        static_cast<double>(target_ratio.first);
    const double deviation =
        std::fabs(static_cast<double>(plan.general_total) - general_target) /
        general_target;

    const double general_factor =
        deviation > 0.10 ? general_target / static_cast<double>(plan.general_total)
                         : 1.0;
    double effective_total = 0.0;
    for (const auto& [name, tokens] : plan.per_source_tokens) {
        const double factor = name == "domain" ? 1.0 : general_factor;
        plan.resample_factors[name] = factor;
        effective_total += factor * static_cast<double>(tokens);
    }
    for (const auto& [name, tokens] : plan.per_source_tokens) {
        plan.sampling_weights[name] =
            plan.resample_factors[name] * static_cast<double>(tokens) / effective_total;
    }
    return plan;
}

namespace {

using Word = std::vector<std::u32string>;
using Pair = std::pair<std::u32string, std::u32string>;

struct PairState {
    std::int64_t count = 0;
    std::set<std::size_t> words;  // indices of words containing the pair
};

struct HeapEntry {
    std::int64_t count;
    std::u32string merged;  // lexicographic tie-break key
    Pair pair;

    bool operator<(const HeapEntry& o) const {
        if (count != o.count) return count > o.count;
        if (merged != o.merged) return merged < o.merged;
        return pair < o.pair;
    }
};

// Overlapping occurrences of needle within the corpus words (weighted by
// word frequency). This is the candidate score: plain corpus frequency.
std::int64_t substring_count(const std::u32string& needle,
                             const std::vector<std::pair<std::u32string, std::int64_t>>& words) {
    std::int64_t total = 0;
    for (const auto& [word, freq] : words) {
        if (word.size() < needle.size()) continue;
        for (std::size_t i = 0; i + needle.size() <= word.size(); ++i) {
            if (word.compare(i, needle.size(), needle) == 0) total += freq;
        }
    }
    return total;
}

}  // namespace

VocabExtension extend_vocab(const std::vector<Chunk>& chunks,
                            const std::set<std::string>& base_vocab,
                            std::size_t max_new) {
    if (base_vocab.empty()) throw ConfigError("base vocabulary is empty");
    if (max_new < 1) throw ConfigError("max_new must be >= 1");

    // Word = maximal run of non-whitespace codepoints, counted across chunks.
    std::map<std::u32string, std::int64_t> word_freq;
    for (const auto& chunk : chunks) {
        const auto cps = decode_utf8(chunk.text);
        std::u32string run;
        for (char32_t cp : cps) {
            if (is_unicode_space(cp)) {
                if (!run.empty()) ++word_freq[run], run.clear();
            } else {
                run.push_back(cp);
            }
        }
        if (!run.empty()) ++word_freq[run];
    }
    if (word_freq.empty()) throw DataError("empty corpus: nothing to learn from");

    std::vector<std::pair<std::u32string, std::int64_t>> word_list(word_freq.begin(),
                                                                   word_freq.end());
    std::vector<Word> words;
    std::vector<std::int64_t> freqs;
    words.reserve(word_list.size());
    for (const auto& [w, f] : word_list) {
        Word symbols;
        symbols.reserve(w.size());
        for (char32_t cp : w) symbols.push_back(std::u32string(1, cp));
        words.push_back(std::move(symbols));
        freqs.push_back(f);
    }

    std::map<Pair, PairState> pairs;
    std::set<HeapEntry> heap;

    auto add_pair = [&](const Pair& p, std::int64_t delta, std::size_t word_idx) {
        auto& st = pairs[p];
        if (st.count > 0) heap.erase({st.count, p.first + p.second, p});
        st.count += delta;
        st.words.insert(word_idx);
        if (st.count > 0) heap.insert({st.count, p.first + p.second, p});
    };
    auto remove_pair = [&](const Pair& p, std::int64_t delta) {
        auto it = pairs.find(p);
        if (it == pairs.end()) return;
        heap.erase({it->second.count, p.first + p.second, p});
        it->second.count -= delta;
        if (it->second.count > 0) {
            heap.insert({it->second.count, p.first + p.second, p});
        }
    };

    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        for (std::size_t i = 0; i + 1 < words[wi].size(); ++i) {
            add_pair({words[wi][i], words[wi][i + 1]}, freqs[wi], wi);
        }
    }

    std::set<std::u32string> candidates;
    while (!heap.empty()) {
        const HeapEntry best = *heap.begin();
        if (best.count < 2) break;
        const Pair merge = best.pair;
        const std::u32string merged = best.merged;
        candidates.insert(merged);

        // Rewrite every word containing the pair; update neighbor pair counts.
        auto holders = pairs[merge].words;  // copy: mutated during rewrite
        for (std::size_t wi : holders) {
            Word& w = words[wi];
            const std::int64_t f = freqs[wi];
            Word out;
            out.reserve(w.size());
            std::size_t i = 0;
            while (i < w.size()) {
                if (i + 1 < w.size() && w[i] == merge.first && w[i + 1] == merge.second) {
                    if (!out.empty()) {
                        remove_pair({out.back(), w[i]}, f);
                        add_pair({out.back(), merged}, f, wi);
                    }
                    if (i + 2 < w.size()) {
                        remove_pair({w[i + 1], w[i + 2]}, f);
                        // pair (merged, next) added when next is appended —
                        // handled below once `next` lands in `out`
                    }
                    out.push_back(merged);
                    i += 2;
                    if (i < w.size()) add_pair({merged, w[i]}, f, wi);
                } else {
                    out.push_back(w[i]);
                    ++i;
                }
            }
            w = std::move(out);
        }
        remove_pair(merge, pairs[merge].count);
        pairs.erase(merge);
    }

    VocabExtension ext;
    ext.base_vocab_size = base_vocab.size();
    struct Scored {
        std::int64_t score;
        std::string token;
    };
    std::vector<Scored> scored;
    for (const auto& cand : candidates) {
        std::string utf8;
        for (char32_t cp : cand) append_utf8(utf8, cp);
        if (base_vocab.count(utf8)) continue;
        scored.push_back({substring_count(cand, word_list), utf8});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.token < b.token;
    });
    if (scored.size() > max_new) scored.resize(max_new);
    for (const auto& s : scored) {
        ext.new_tokens.push_back(s.token);
        ext.scores[s.token] = s.score;
    }
    return ext;
}

std::int64_t parse_token_count(const std::string& s) {
    if (s.empty()) throw ConfigError("empty token count");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || v < 0 || !std::isfinite(v)) {
        throw ConfigError("malformed token count: " + s);
    }
    const double rounded = std::nearbyint(v);
    if (std::fabs(v - rounded) > 1e-6 * std::max(1.0, std::fabs(v)) ||
        rounded > 9.2e18) {
        throw ConfigError("token count is not an integer: " + s);
    }
    return static_cast<std::int64_t>(rounded);
}

std::pair<std::int64_t, std::int64_t> parse_ratio(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() != 2) throw ConfigError("ratio must look like 1:3, got " + s);
    try {
        return {std::stoll(parts[0]), std::stoll(parts[1])};
    } catch (const std::exception&) {
        throw ConfigError("malformed ratio: " + s);
    }
}

std::set<std::string> read_vocab_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open vocab file: " + path);
    std::set<std::string> vocab;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!is_valid_utf8(line)) throw DataError("invalid UTF-8 in vocab file: " + path);
        vocab.insert(line);
    }
    return vocab;
}

}  // namespace finforge
