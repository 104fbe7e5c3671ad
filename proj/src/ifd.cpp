#include "finforge/ifd.hpp"

#include <algorithm>
#include <cmath>

#include "finforge/errors.hpp"
#include "finforge/parallel.hpp"

namespace finforge {

namespace {

double mean_nll(const std::vector<std::pair<std::string, double>>& logprobs) {
    if (logprobs.empty()) throw DataError("provider returned zero answer tokens");
    double total = 0.0;
    for (const auto& [token, lp] : logprobs) total += lp;
    return -total / static_cast<double>(logprobs.size());
}

}  // namespace

IFDScore ifd_score(InstructionRecord& record, LogprobProvider& provider) {
    if (record.answer.empty()) {
        throw DataError("record " + record.id + " has an empty answer; cannot score");
    }
    IFDScore score;
    score.conditioned_nll = mean_nll(provider.token_logprobs(record_prompt(record), record.answer));
    score.unconditioned_nll = mean_nll(provider.token_logprobs(std::string(), record.answer));
    score.ifd = std::exp(score.conditioned_nll - score.unconditioned_nll);
    record.annotations.ifd_score = score.ifd;
    return score;
}

void ifd_score_all(std::vector<InstructionRecord>& records, LogprobProvider& provider,
                   std::size_t jobs) {
    parallel_for(records.size(), jobs,
                 [&](std::size_t i) { ifd_score(records[i], provider); });
}

namespace {

// Shared ordering primitive: ifd then id. Throws on unscored records.
void sort_by_ifd(std::vector<InstructionRecord>& records, bool descending) {
    for (const auto& rec : records) {
        if (!rec.annotations.ifd_score) {
            throw DataError("record " + rec.id + " has no ifd score");
        }
    }
    std::sort(records.begin(), records.end(),
              [descending](const InstructionRecord& a, const InstructionRecord& b) {
                  const double sa = *a.annotations.ifd_score;
                  const double sb = *b.annotations.ifd_score;
                  if (sa != sb) return descending ? sa > sb : sa < sb;
                  return a.id < b.id;
              });
}

}  // namespace

std::pair<std::vector<InstructionRecord>, std::vector<InstructionRecord>>
filter_top_fraction(std::vector<InstructionRecord> records, double fraction) {
    if (fraction <= 0.0 || fraction > 1.0) {
        throw ConfigError("keep fraction must be in (0, 1]");
    }
    if (records.empty()) return {{}, {}};
    sort_by_ifd(records, /*descending=*/true);
    // The epsilon guards floor against cases like 0.7*10 landing just under 7.
    std::size_t keep = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(records.size()) + 1e-9));
    keep = std::max<std::size_t>(1, std::min(keep, records.size()));
    std::vector<InstructionRecord> kept(records.begin(), records.begin() + keep);
    std::vector<InstructionRecord> rest(records.begin() + keep, records.end());
    return {std::move(kept), std::move(rest)};
}

BandSplit band_partition(std::vector<InstructionRecord> records) {
    sort_by_ifd(records, /*descending=*/false);
    const std::size_t n = records.size();
    const std::size_t first = n / 3;
    const std::size_t second = 2 * n / 3;
    BandSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        const Band band = i < first ? Band::low : i < second ? Band::mid : Band::high;
        records[i].annotations.band = band;
        switch (band) {
            case Band::low: split.low.push_back(std::move(records[i])); break;
            case Band::mid: split.mid.push_back(std::move(records[i])); break;
            case Band::high: split.high.push_back(std::move(records[i])); break;
        }
    }
    return split;
}

}  // namespace finforge
