#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "finforge/corpus_plan.hpp"
#include "finforge/errors.hpp"
#include "finforge/textutil.hpp"

using namespace finforge;

TEST_CASE("plan_mix reproduces the 25B/75B budget") {
    const auto plan = plan_mix(25000000000, {55000000000, 20000000000}, {1, 3});
    CHECK(plan.domain_total == 25000000000);
    CHECK(plan.general_total == 75000000000);
    CHECK(plan.ratio == std::pair<std::int64_t, std::int64_t>{1, 3});
    CHECK(plan.domain_total + plan.general_total == 100000000000);

    double weight_sum = 0.0;
    for (const auto& [name, w] : plan.sampling_weights) weight_sum += w;
    CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(plan.sampling_weights.at("domain") == doctest::Approx(0.25));
    CHECK(plan.sampling_weights.at("general_0") == doctest::Approx(0.55));

    // Natural ratio equals the target: no resampling.
    for (const auto& [name, f] : plan.resample_factors) CHECK(f == 1.0);
}

TEST_CASE("plan_mix resamples when the natural ratio drifts past 10%") {
    // Natural 30:60 = 1:2 vs target 1:3 -> general must be upsampled by
    // (30*3)/60 = 1.5.
    const auto plan = plan_mix(30, {60}, {1, 3});
    CHECK(plan.ratio == std::pair<std::int64_t, std::int64_t>{1, 2});
    CHECK(plan.resample_factors.at("domain") == 1.0);
    CHECK(plan.resample_factors.at("general_0") == doctest::Approx(1.5));
    // Post-resampling the mix sits exactly on target.
    CHECK(plan.sampling_weights.at("domain") == doctest::Approx(0.25));
    CHECK(plan.sampling_weights.at("general_0") == doctest::Approx(0.75));
}

TEST_CASE("plan_mix tolerates drift within 10%") {
    // Natural general 78 vs implied 75: deviation 4% -> factors stay 1.
    const auto plan = plan_mix(25, {78}, {1, 3});
    CHECK(plan.resample_factors.at("general_0") == 1.0);
}

TEST_CASE("plan_mix input validation") {
    CHECK_THROWS_AS(plan_mix(0, {10}, {1, 3}), DataError);
    CHECK_THROWS_AS(plan_mix(-5, {10}, {1, 3}), DataError);
    CHECK_THROWS_AS(plan_mix(10, {}, {1, 3}), ConfigError);
    CHECK_THROWS_AS(plan_mix(10, {0}, {1, 3}), DataError);
    CHECK_THROWS_AS(plan_mix(10, {-1}, {1, 3}), DataError);
    CHECK_THROWS_AS(plan_mix(10, {10}, {0, 3}), ConfigError);
}

TEST_CASE("parse_token_count accepts integers and scientific forms") {
    CHECK(parse_token_count("25e9") == 25000000000);
    CHECK(parse_token_count("2.5e6") == 2500000);
    CHECK(parse_token_count("1000000") == 1000000);
    CHECK_THROWS_AS(parse_token_count("2.5"), ConfigError);
    CHECK_THROWS_AS(parse_token_count("abc"), ConfigError);
    CHECK_THROWS_AS(parse_token_count(""), ConfigError);
}

TEST_CASE("parse_ratio") {
    CHECK(parse_ratio("1:3") == std::pair<std::int64_t, std::int64_t>{1, 3});
    CHECK_THROWS_AS(parse_ratio("1:"), ConfigError);
    CHECK_THROWS_AS(parse_ratio("3"), ConfigError);
    CHECK_THROWS_AS(parse_ratio("a:b"), ConfigError);
}

namespace {

Chunk chunk_of(const std::string& id, const std::string& text) {
    Chunk c;
    c.id = id;
    c.text = text;
    c.char_len = codepoint_count(text);
    return c;
}

// Overlapping-occurrence count, the scoring oracle.
std::int64_t substring_count(const std::string& corpus, const std::string& piece) {
    std::int64_t n = 0;
    for (std::size_t pos = corpus.find(piece); pos != std::string::npos;
         pos = corpus.find(piece, pos + 1)) {
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("extend_vocab learns repeated domain words") {
    const std::string text = "市盈率 市盈率 市盈率 净利润 净利润";
    // Base vocabulary must be non-empty; "基" does not occur in the text.
    const auto ext = extend_vocab({chunk_of("c", text)}, {"基"}, 10);

    // Merge order: (市,盈) and (盈,率) both appear 3 times; 市盈 merges
    // first lexicographically, then 市盈率; the 净利润 pair chain follows.
    REQUIRE(ext.new_tokens.size() == 4);
    CHECK(ext.new_tokens[0] == "市盈");
    CHECK(ext.new_tokens[1] == "市盈率");
    CHECK(ext.new_tokens[2] == "净利");
    CHECK(ext.new_tokens[3] == "净利润");
    for (const auto& t : ext.new_tokens) {
        CHECK(ext.scores.at(t) == substring_count(text, t));
    }
}

TEST_CASE("extend_vocab filters the base vocabulary and caps the budget") {
    const std::string text = "市盈率 市盈率 市盈率 净利润 净利润";
    const auto ext = extend_vocab({chunk_of("c", text)}, {"市盈"}, 2);
    REQUIRE(ext.new_tokens.size() == 2);
    CHECK(ext.new_tokens[0] == "市盈率");
    CHECK(ext.new_tokens[1] == "净利");
    CHECK(ext.base_vocab_size == 1);
}

TEST_CASE("extend_vocab needs pair frequency >= 2") {
    // Every word unique: no pair reaches the merge floor.
    const auto ext = extend_vocab({chunk_of("c", "甲乙 丙丁 戊己")}, {"基"}, 10);
    CHECK(ext.new_tokens.empty());
}

TEST_CASE("extend_vocab rejects an empty base vocabulary") {
    CHECK_THROWS_AS(extend_vocab({chunk_of("c", "甲乙 甲乙")}, {}, 10), ConfigError);
}

TEST_CASE("read_vocab_file skips blanks") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "finforge_vocab_test.txt";
    {
        std::ofstream out(path);
        out << "alpha\n\n市盈率\n";
    }
    const auto vocab = read_vocab_file(path.string());
    CHECK(vocab == std::set<std::string>{"alpha", "市盈率"});
    fs::remove(path);
}
