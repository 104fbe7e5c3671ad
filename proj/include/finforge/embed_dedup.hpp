#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finforge/providers.hpp"
#include "finforge/records.hpp"

namespace finforge {

struct DupCluster {
    std::string representative_id;  // lowest id; ifd override in collapse_clusters
    std::vector<std::string> member_ids;  // sorted ascending, representative included
    std::vector<double> pair_similarities;  // union edges, all >= threshold
};

struct EmbedDedupConfig {
    double threshold = 0.76;  // cosine similarity at or above => duplicate
    bool lsh_prefilter = false;
    std::size_t lsh_planes = 32;  // random hyperplanes (signature bits)
    std::size_t lsh_bands = 16;   // bands over the signature; planes % bands == 0
    std::uint64_t lsh_seed = 42;
    std::size_t jobs = 1;

    void validate() const;
};

// Embeds instruction + "\n" + question for every record. Duplicate record
// ids are an error (the map would silently drop one).
std::map<std::string, EmbeddingVector> embed_records(
    const std::vector<InstructionRecord>& records, EmbeddingProvider& provider);

// Pairwise cosine similarity >= threshold joined with union-find; clusters
// of size >= 2 returned, ordered by representative id. Exact O(n^2) search
// by default; cfg.lsh_prefilter switches to a random-hyperplane candidate
// filter that must produce a superset of the exact candidate pairs.
std::vector<DupCluster> find_near_duplicates(
    const std::map<std::string, EmbeddingVector>& vectors, double threshold,
    const EmbedDedupConfig& cfg = {});

// Keeps one representative per cluster (highest ifd score when every member
// is scored, otherwise lowest id) and annotates both kept representatives
// and removed members with the cluster id. Updates clusters in place when
// the ifd override changes a representative. Input order is preserved.
std::pair<std::vector<InstructionRecord>, std::vector<InstructionRecord>> collapse_clusters(
    const std::vector<InstructionRecord>& records, std::vector<DupCluster>& clusters);

}  // namespace finforge
