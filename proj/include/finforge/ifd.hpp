#pragma once

#include <utility>
#include <vector>

#include "finforge/providers.hpp"
#include "finforge/records.hpp"

namespace finforge {

struct IFDScore {
    double conditioned_nll = 0.0;    // mean nats/token of answer given prompt
    double unconditioned_nll = 0.0;  // mean nats/token of answer alone
    double ifd = 1.0;                // exp(conditioned_nll - unconditioned_nll)
};

// Scores one record and writes annotations.ifd_score. The answer must be
// non-empty.
IFDScore ifd_score(InstructionRecord& record, LogprobProvider& provider);

// Batch scorer; provider calls may run concurrently up to jobs.
void ifd_score_all(std::vector<InstructionRecord>& records, LogprobProvider& provider,
                   std::size_t jobs = 1);

// Sorts by ifd descending (ties by id ascending) and keeps the first
// floor(fraction * N) records, minimum 1. Both lists come back in score
// order. Unscored records are an error.
std::pair<std::vector<InstructionRecord>, std::vector<InstructionRecord>>
filter_top_fraction(std::vector<InstructionRecord> records, double fraction);

struct BandSplit {
    std::vector<InstructionRecord> low;
    std::vector<InstructionRecord> mid;
    std::vector<InstructionRecord> high;
};

// Tertile split by ifd ascending (ties by id): [0, N/3) low, [N/3, 2N/3)
// mid, [2N/3, N) high — remainders land in high. Band annotations written.
BandSplit band_partition(std::vector<InstructionRecord> records);

}  // namespace finforge
