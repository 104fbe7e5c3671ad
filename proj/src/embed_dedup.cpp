#include "finforge/embed_dedup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "finforge/errors.hpp"
#include "finforge/hash.hpp"
#include "finforge/parallel.hpp"

namespace finforge {

void EmbedDedupConfig::validate() const {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw ConfigError("dedup threshold must be in (0, 1)");
    }
    if (lsh_prefilter) {
        if (lsh_planes == 0 || lsh_bands == 0 || lsh_planes % lsh_bands != 0) {
            throw ConfigError("lsh_planes must be a positive multiple of lsh_bands");
        }
    }
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

std::map<std::string, EmbeddingVector> embed_records(
    const std::vector<InstructionRecord>& records, EmbeddingProvider& provider) {
    std::vector<std::string> texts;
    texts.reserve(records.size());
    for (const auto& rec : records) texts.push_back(record_prompt(rec));
    const auto vectors = provider.embed(texts);
    std::map<std::string, EmbeddingVector> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!out.emplace(records[i].id, vectors[i]).second) {
            throw DataError("duplicate record id: " + records[i].id);
        }
    }
    return out;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Edge {
    std::size_t a, b;
    double similarity;
};

// Gaussian via Box-Muller over splitmix64 — avoids the unspecified stdlib
// normal_distribution algorithm so plane geometry is platform-stable.
double gaussian(std::uint64_t& state) {
    double u1 = splitmix_unit(state);
    const double u2 = splitmix_unit(state);
    if (u1 <= 0.0) u1 = 5e-324;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<std::vector<std::size_t>> lsh_candidate_rows(
    const std::vector<const EmbeddingVector*>& vecs, const EmbedDedupConfig& cfg) {
    const std::size_t n = vecs.size();
    const std::size_t dim = vecs.empty() ? 0 : vecs[0]->dim();
    std::uint64_t state = cfg.lsh_seed;
    std::vector<std::vector<double>> planes(cfg.lsh_planes, std::vector<double>(dim));
    for (auto& plane : planes) {
        for (double& x : plane) x = gaussian(state);
    }
    std::vector<std::vector<bool>> bits(n, std::vector<bool>(cfg.lsh_planes));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < cfg.lsh_planes; ++p) {
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += planes[p][d] * vecs[i]->values[d];
            bits[i][p] = dot >= 0.0;
        }
    }
    const std::size_t band_width = cfg.lsh_planes / cfg.lsh_bands;
    std::vector<std::set<std::size_t>> candidates(n);
    for (std::size_t band = 0; band < cfg.lsh_bands; ++band) {
        std::map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t key = 0;
            for (std::size_t w = 0; w < band_width; ++w) {
                key = key << 1 | (bits[i][band * band_width + w] ? 1 : 0);
            }
            buckets[key].push_back(i);
        }
        for (const auto& [key, members] : buckets) {
            for (std::size_t x = 0; x < members.size(); ++x) {
                for (std::size_t y = x + 1; y < members.size(); ++y) {
                    candidates[members[y]].insert(members[x]);
                }
            }
        }
    }
    std::vector<std::vector<std::size_t>> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i].assign(candidates[i].begin(), candidates[i].end());
    return rows;
}

}  // namespace

std::vector<DupCluster> find_near_duplicates(
    const std::map<std::string, EmbeddingVector>& vectors, double threshold,
    const EmbedDedupConfig& cfg) {
    EmbedDedupConfig effective = cfg;
    effective.threshold = threshold;
    effective.validate();
    if (vectors.empty()) throw DataError("no vectors to deduplicate");

    std::vector<std::string> ids;
    std::vector<const EmbeddingVector*> vecs;
    ids.reserve(vectors.size());
    for (const auto& [id, vec] : vectors) {
        if (!vecs.empty() && vec.dim() != vecs.front()->dim()) {
            throw DataError("embedding dimension mismatch at id " + id);
        }
        ids.push_back(id);
        vecs.push_back(&vec);
    }
    const std::size_t n = ids.size();

    // Candidate lists per row: every earlier index (exact mode) or the LSH
    // bucket mates. Rows are computed in parallel; the union pass below is
    // sequential in row order, so thread count never changes the result.
    std::vector<std::vector<std::size_t>> candidate_rows;
    if (cfg.lsh_prefilter) {
        candidate_rows = lsh_candidate_rows(vecs, effective);
    }

    std::vector<std::vector<Edge>> row_edges(n);
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
        const auto score = [&](std::size_t j) {
            const double sim = cosine_similarity(*vecs[i], *vecs[j]);
            if (sim >= threshold) row_edges[i].push_back({j, i, sim});
        };
        if (cfg.lsh_prefilter) {
            for (std::size_t j : candidate_rows[i]) score(j);
        } else {
            for (std::size_t j = 0; j < i; ++j) score(j);
        }
    });

    UnionFind uf(n);
    for (const auto& edges : row_edges) {
        for (const auto& e : edges) uf.unite(e.a, e.b);
    }

    std::map<std::size_t, DupCluster> clusters;
    for (std::size_t i = 0; i < n; ++i) {
        clusters[uf.find(i)].member_ids.push_back(ids[i]);
    }
    for (const auto& edges : row_edges) {
        for (const auto& e : edges) {
            clusters[uf.find(e.a)].pair_similarities.push_back(e.similarity);
        }
    }
    std::vector<DupCluster> out;
    for (auto& [root, cluster] : clusters) {
        if (cluster.member_ids.size() < 2) continue;
        std::sort(cluster.member_ids.begin(), cluster.member_ids.end());
        cluster.representative_id = cluster.member_ids.front();
        out.push_back(std::move(cluster));
    }
    std::sort(out.begin(), out.end(), [](const DupCluster& a, const DupCluster& b) {
        return a.representative_id < b.representative_id;
    });
    return out;
}

std::pair<std::vector<InstructionRecord>, std::vector<InstructionRecord>> collapse_clusters(
    const std::vector<InstructionRecord>& records, std::vector<DupCluster>& clusters) {
    std::map<std::string, const InstructionRecord*> by_id;
    for (const auto& rec : records) by_id[rec.id] = &rec;

    std::map<std::string, std::string> cluster_of;  // member id -> representative id
    std::set<std::string> removed_ids;
    for (auto& cluster : clusters) {
        bool all_scored = true;
        for (const auto& id : cluster.member_ids) {
            const auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw DataError("cluster references unknown record id: " + id);
            }
            all_scored = all_scored && it->second->annotations.ifd_score.has_value();
        }
        if (all_scored) {
            // Highest ifd wins; ties fall back to lowest id (members sorted).
            const std::string* best = nullptr;
            double best_score = 0.0;
            for (const auto& id : cluster.member_ids) {
                const double score = *by_id[id]->annotations.ifd_score;
                if (!best || score > best_score) {
                    best = &id;
                    best_score = score;
                }
            }
            cluster.representative_id = *best;
        }
        for (const auto& id : cluster.member_ids) {
            cluster_of[id] = cluster.representative_id;
            if (id != cluster.representative_id) removed_ids.insert(id);
        }
    }

    std::vector<InstructionRecord> kept;
    std::vector<InstructionRecord> removed;
    for (const auto& rec : records) {
        const auto it = cluster_of.find(rec.id);
        if (it == cluster_of.end()) {
            kept.push_back(rec);
            continue;
        }
        InstructionRecord annotated = rec;
        annotated.annotations.cluster_id = it->second;
        if (removed_ids.count(rec.id)) {
            removed.push_back(std::move(annotated));
        } else {
            kept.push_back(std::move(annotated));
        }
    }
    return {std::move(kept), std::move(removed)};
}

}  // namespace finforge
