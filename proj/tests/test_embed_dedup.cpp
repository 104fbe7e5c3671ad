#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "finforge/embed_dedup.hpp"
#include "finforge/errors.hpp"
#include "finforge/hash.hpp"
#include "finforge/providers.hpp"
#include "finforge/records.hpp"

using namespace finforge;

namespace {

EmbeddingVector unit2(double angle_deg) {
    const double rad = angle_deg * M_PI / 180.0;
    return EmbeddingVector{{std::cos(rad), std::sin(rad)}};
}

InstructionRecord rec_with_ifd(const std::string& id, std::optional<double> ifd) {
    InstructionRecord r;
    r.id = id;
    r.question = "问" + id;
    r.annotations.ifd_score = ifd;
    return r;
}

// Independent oracle: all-pairs similarity then BFS connected components —
// a different clustering algorithm than the union-find under test.
std::set<std::vector<std::string>> brute_clusters(
    const std::map<std::string, EmbeddingVector>& vectors, double threshold) {
    std::vector<std::string> ids;
    for (const auto& [id, _] : vectors) ids.push_back(id);
    const std::size_t n = ids.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (cosine_similarity(vectors.at(ids[i]), vectors.at(ids[j])) >= threshold) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
        }
    }
    std::set<std::vector<std::string>> clusters;
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i]) continue;
        std::vector<std::size_t> stack{i}, component;
        seen[i] = true;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            component.push_back(cur);
            for (std::size_t nb : adj[cur]) {
                if (!seen[nb]) {
                    seen[nb] = true;
                    stack.push_back(nb);
                }
            }
        }
        if (component.size() < 2) continue;
        std::vector<std::string> members;
        for (std::size_t k : component) members.push_back(ids[k]);
        std::sort(members.begin(), members.end());
        clusters.insert(std::move(members));
    }
    return clusters;
}

std::set<std::vector<std::string>> cluster_set(const std::vector<DupCluster>& clusters) {
    std::set<std::vector<std::string>> out;
    for (const auto& c : clusters) out.insert(c.member_ids);
    return out;
}

// Random corpus in 8 dimensions with planted near-duplicate pairs.
std::map<std::string, EmbeddingVector> random_corpus(std::size_t n, std::size_t planted,
                                                     std::uint64_t seed) {
    std::map<std::string, EmbeddingVector> vectors;
    std::uint64_t state = seed;
    auto random_unit = [&state] {
        EmbeddingVector v;
        v.values.resize(8);
        double norm = 0.0;
        for (double& x : v.values) {
            x = splitmix_unit(state) * 2.0 - 1.0;
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v.values) x /= norm;
        return v;
    };
    char id[16];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(id, sizeof(id), "r%03zu", i);
        vectors[id] = random_unit();
    }
    for (std::size_t p = 0; p < planted; ++p) {
        std::snprintf(id, sizeof(id), "r%03zu", p);
        EmbeddingVector v = vectors[id];
        double norm = 0.0;
        for (double& x : v.values) {
            x += (splitmix_unit(state) - 0.5) * 0.05;  // tiny nudge, stays very similar
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v.values) x /= norm;
        std::snprintf(id, sizeof(id), "p%03zu", p);
        vectors[id] = v;
    }
    return vectors;
}

}  // namespace

TEST_CASE("EmbedDedupConfig validation") {
    EmbedDedupConfig cfg;
    cfg.validate();
    cfg.threshold = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lsh_prefilter = true;
    cfg.lsh_planes = 33;  // not a multiple of 16 bands
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.lsh_prefilter = false;
    cfg.validate();  // planes ignored without the prefilter
    cfg = {};
    cfg.jobs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("embed_records embeds the prompt and rejects duplicate ids") {
    StubEmbedder emb;
    InstructionRecord a = rec_with_ifd("a", std::nullopt);
    InstructionRecord b = rec_with_ifd("b", std::nullopt);
    const auto vectors = embed_records({a, b}, emb);
    REQUIRE(vectors.size() == 2);
    CHECK(vectors.at("a").dim() == StubEmbedder::kDim);
    // the embedded text is instruction + "\n" + question
    const auto direct = emb.embed({record_prompt(a)})[0];
    CHECK(cosine_similarity(vectors.at("a"), direct) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(embed_records({a, a}, emb), DataError);
}

TEST_CASE("find_near_duplicates: hand-built geometry") {
    std::map<std::string, EmbeddingVector> vectors{
        {"a", unit2(0)}, {"b", unit2(15)}, {"c", unit2(90)}, {"d", unit2(10)}};
    const auto clusters = find_near_duplicates(vectors, 0.9);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].representative_id == "a");
    CHECK(clusters[0].member_ids == std::vector<std::string>{"a", "b", "d"});
    // a-b, a-d, b-d all pass 0.9; c joins nothing
    CHECK(clusters[0].pair_similarities.size() == 3);
    for (double s : clusters[0].pair_similarities) CHECK(s >= 0.9);
}

TEST_CASE("find_near_duplicates: chains merge transitively") {
    // 0-25 and 25-50 pass cos(30) ~ 0.866 but 0-50 does not; union-find
    // still joins all three through the middle vector
    std::map<std::string, EmbeddingVector> vectors{
        {"x0", unit2(0)}, {"x1", unit2(25)}, {"x2", unit2(50)}};
    const double threshold = std::cos(30.0 * M_PI / 180.0);
    REQUIRE(cosine_similarity(vectors.at("x0"), vectors.at("x2")) < threshold);
    const auto clusters = find_near_duplicates(vectors, threshold);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].member_ids == std::vector<std::string>{"x0", "x1", "x2"});
}

TEST_CASE("find_near_duplicates matches a brute-force oracle on a random corpus") {
    const auto vectors = random_corpus(120, 15, 0xD00D);
    const double threshold = 0.85;
    const auto expected = brute_clusters(vectors, threshold);
    CHECK(!expected.empty());  // planted pairs must show up

    const auto exact = find_near_duplicates(vectors, threshold);
    CHECK(cluster_set(exact) == expected);

    SUBCASE("LSH prefilter reproduces the exact clusters") {
        EmbedDedupConfig cfg;
        cfg.lsh_prefilter = true;
        const auto lsh = find_near_duplicates(vectors, threshold, cfg);
        CHECK(cluster_set(lsh) == expected);
    }
    SUBCASE("thread count does not change the result") {
        EmbedDedupConfig cfg;
        cfg.jobs = 4;
        const auto parallel = find_near_duplicates(vectors, threshold, cfg);
        REQUIRE(parallel.size() == exact.size());
        for (std::size_t i = 0; i < exact.size(); ++i) {
            CHECK(parallel[i].representative_id == exact[i].representative_id);
            CHECK(parallel[i].member_ids == exact[i].member_ids);
            CHECK(parallel[i].pair_similarities == exact[i].pair_similarities);
        }
    }
    SUBCASE("raising the threshold never enlarges clusters") {
        std::size_t prev = SIZE_MAX;
        for (const double t : {0.6, 0.76, 0.9}) {
            std::size_t members = 0;
            for (const auto& c : find_near_duplicates(vectors, t)) {
                members += c.member_ids.size();
            }
            CHECK(members <= prev);
            prev = members;
        }
    }
}

TEST_CASE("find_near_duplicates input validation") {
    CHECK_THROWS_AS(find_near_duplicates({}, 0.76), DataError);
    std::map<std::string, EmbeddingVector> bad{
        {"a", EmbeddingVector{{1.0, 0.0}}}, {"b", EmbeddingVector{{1.0, 0.0, 0.0}}}};
    CHECK_THROWS_AS(find_near_duplicates(bad, 0.76), DataError);
    std::map<std::string, EmbeddingVector> ok{{"a", unit2(0)}, {"b", unit2(80)}};
    CHECK(find_near_duplicates(ok, 0.76).empty());  // nothing similar, no clusters
}

TEST_CASE("collapse_clusters: lowest id wins without scores") {
    std::vector<InstructionRecord> records{
        rec_with_ifd("m", std::nullopt), rec_with_ifd("b", std::nullopt),
        rec_with_ifd("z", std::nullopt), rec_with_ifd("solo", std::nullopt)};
    std::vector<DupCluster> clusters{{"b", {"b", "m", "z"}, {}}};
    const auto [kept, removed] = collapse_clusters(records, clusters);

    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == "b");  // input order preserved: b came before solo
    CHECK(kept[1].id == "solo");
    CHECK(*kept[0].annotations.cluster_id == "b");
    CHECK_FALSE(kept[1].annotations.cluster_id.has_value());

    REQUIRE(removed.size() == 2);
    CHECK(removed[0].id == "m");
    CHECK(removed[1].id == "z");
    CHECK(*removed[0].annotations.cluster_id == "b");
    CHECK(*removed[1].annotations.cluster_id == "b");
}

TEST_CASE("collapse_clusters: highest ifd overrides the representative") {
    std::vector<InstructionRecord> records{
        rec_with_ifd("a", 0.4), rec_with_ifd("b", 0.9), rec_with_ifd("c", 0.7)};
    std::vector<DupCluster> clusters{{"a", {"a", "b", "c"}, {}}};
    const auto [kept, removed] = collapse_clusters(records, clusters);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == "b");
    CHECK(clusters[0].representative_id == "b");  // updated in place
    REQUIRE(removed.size() == 2);
    CHECK(removed[0].id == "a");
    CHECK(removed[1].id == "c");

    SUBCASE("score ties fall back to the lowest id") {
        std::vector<InstructionRecord> tied{rec_with_ifd("p", 0.5), rec_with_ifd("q", 0.5)};
        std::vector<DupCluster> tc{{"p", {"p", "q"}, {}}};
        const auto [tk, tr] = collapse_clusters(tied, tc);
        CHECK(tk[0].id == "p");
    }
    SUBCASE("one unscored member disables the override") {
        std::vector<InstructionRecord> part{rec_with_ifd("a", std::nullopt),
                                            rec_with_ifd("b", 0.99)};
        std::vector<DupCluster> pc{{"a", {"a", "b"}, {}}};
        const auto [pk, pr] = collapse_clusters(part, pc);
        CHECK(pk[0].id == "a");  // lowest id, despite b's high score
    }
}

TEST_CASE("collapse_clusters rejects unknown member ids") {
    std::vector<InstructionRecord> records{rec_with_ifd("a", std::nullopt)};
    std::vector<DupCluster> clusters{{"a", {"a", "ghost"}, {}}};
    CHECK_THROWS_AS(collapse_clusters(records, clusters), DataError);
}
