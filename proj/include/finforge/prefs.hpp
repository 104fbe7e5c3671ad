#pragma once

#include <map>
#include <string>
#include <vector>

#include "finforge/embed_dedup.hpp"
#include "finforge/providers.hpp"
#include "finforge/records.hpp"

namespace finforge {

struct PrefsResult {
    std::vector<PreferencePair> pairs;
    std::map<std::string, std::size_t> skips;  // reason -> count
};

// Star topology: every cluster member's answer is judged against the
// representative's, with the representative's answer as the judge
// reference. Ties and identical answers are skipped with a recorded
// reason. The prompt comes from the representative record.
PrefsResult pairs_from_clusters(const std::vector<DupCluster>& clusters,
                                const std::map<std::string, InstructionRecord>& records,
                                JudgeProvider& judge);

// Ground truth vs current model: the model answers each record's question
// (instruction as system text); outputs matching the ground truth after
// whitespace normalization are skipped, everything else becomes a pair with
// the ground truth chosen.
PrefsResult pairs_from_model_outputs(const std::vector<InstructionRecord>& records,
                                     ChatProvider& model);

}  // namespace finforge
