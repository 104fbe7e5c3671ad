#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "finforge/errors.hpp"
#include "finforge/hash.hpp"
#include "finforge/simhash.hpp"
#include "finforge/textutil.hpp"

using namespace finforge;

TEST_CASE("fnv1a64 pinned golden values") {
    // Independently recomputed from the FNV-1a definition.
    CHECK(fnv1a64("abc") == 0xe71fa2190541574bull);
    CHECK(fnv1a64("ab") == 0x089c4407b545986aull);
    CHECK(fnv1a64("") == kFnv64Offset);
    CHECK(fnv1a64("abc") % 256 == 75);
}

TEST_CASE("simhash64 single-feature texts equal the feature hash") {
    // Exactly one trigram (or a short whole-text feature): every bit's
    // sign sum is decided by that single hash.
    CHECK(simhash64("abc").bits == fnv1a64("abc"));
    CHECK(simhash64("ab").bits == fnv1a64("ab"));
    CHECK(simhash64("概").bits == fnv1a64("概"));
}

TEST_CASE("simhash64 rejects effectively empty text") {
    CHECK_THROWS_AS(simhash64(""), DataError);
    CHECK_THROWS_AS(simhash64("   \n\t"), DataError);
}

TEST_CASE("similar texts land close, different texts far") {
    const std::string base =
        "上市公司应当在季度结束后一个月内披露季度报告，说明经营情况与财务状况。";
    std::string tweaked = base;
    tweaked.replace(tweaked.find("一个月"), std::string("一个月").size(), "两个月");
    const std::string other = "The quick brown fox jumps over the lazy dog near the river bank.";

    const auto d_close = hamming_distance(simhash64(base), simhash64(tweaked));
    const auto d_far = hamming_distance(simhash64(base), simhash64(other));
    CHECK(d_close < d_far);
    CHECK(hamming_distance(simhash64(base), simhash64(base)) == 0);
}

TEST_CASE("DedupConfig validation") {
    DedupConfig cfg;
    cfg.bands = 3;  // must divide 64
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.hamming_threshold = 4;  // must stay below bands
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.hash_algorithm = "md5";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
}

namespace {

// First-seen-wins all-pairs sweep: the independent oracle.
std::vector<std::size_t> brute_dedup(const std::vector<Signature64>& sigs, unsigned threshold) {
    std::vector<std::size_t> match(sigs.size(), SIZE_MAX);
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (match[j] == SIZE_MAX && hamming_distance(sigs[i], sigs[j]) <= threshold) {
                match[i] = j;
                break;
            }
        }
    }
    return match;
}

std::vector<Signature64> random_signatures(std::size_t n, uint64_t seed) {
    std::vector<Signature64> sigs;
    uint64_t state = seed;
    for (std::size_t i = 0; i < n; ++i) sigs.push_back({splitmix64(state)});
    // Plant some near-duplicates: flip up to 3 bits of an earlier entry.
    for (std::size_t i = 0; i < n / 10; ++i) {
        const std::size_t src = splitmix64(state) % sigs.size();
        Signature64 s = sigs[src];
        const unsigned flips = 1 + splitmix64(state) % 3;
        for (unsigned f = 0; f < flips; ++f) s.bits ^= 1ull << (splitmix64(state) % 64);
        sigs.push_back(s);
    }
    return sigs;
}

}  // namespace

TEST_CASE("banded dedup matches the brute-force oracle") {
    const auto sigs = random_signatures(300, 7);
    DedupConfig cfg;
    for (unsigned threshold : {0u, 1u, 3u}) {
        cfg.hamming_threshold = threshold;
        CAPTURE(threshold);
        CHECK(dedup_signatures(sigs, cfg) == brute_dedup(sigs, threshold));
    }
}

TEST_CASE("dedup_chunks keeps first and reports pairs") {
    auto chunk = [](const std::string& id, const std::string& text) {
        Chunk c;
        c.id = id;
        c.text = text;
        c.char_len = codepoint_count(text);
        return c;
    };
    const std::string text =
        "基金管理人应当自基金份额发售之日起三个月内完成募集，并向监管机构备案。";
    const auto result = dedup_chunks(
        {chunk("a", text), chunk("b", "Completely unrelated English filler text here."),
         chunk("c", text)},
        {});
    REQUIRE(result.kept.size() == 2);
    CHECK(result.kept[0].id == "a");
    CHECK(result.kept[1].id == "b");
    REQUIRE(result.dropped_pairs.size() == 1);
    CHECK(result.dropped_pairs[0] == std::pair<std::string, std::string>{"a", "c"});
}

TEST_CASE("signature index round-trips") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "finforge_sig_index_test.bin").string();
    std::vector<std::pair<std::string, Signature64>> entries = {
        {"first", {0x0123456789abcdefull}},
        {"第二", {0xffffffffffffffffull}},
        {"", {0}},
    };
    write_signature_index(path, entries);
    CHECK(read_signature_index(path) == entries);
    std::remove(path.c_str());
}
