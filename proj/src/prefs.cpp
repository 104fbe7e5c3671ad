#include "finforge/prefs.hpp"

#include "finforge/errors.hpp"
#include "finforge/textutil.hpp"

namespace finforge {

PrefsResult pairs_from_clusters(const std::vector<DupCluster>& clusters,
                                const std::map<std::string, InstructionRecord>& records,
                                JudgeProvider& judge) {
    PrefsResult result;
    for (const auto& cluster : clusters) {
        if (cluster.member_ids.size() < 2) {
            ++result.skips["singleton_cluster"];
            continue;
        }
        const auto rep_it = records.find(cluster.representative_id);
        if (rep_it == records.end()) {
            throw DataError("cluster representative not resolvable: " +
                            cluster.representative_id);
        }
        const InstructionRecord& rep = rep_it->second;
        const std::string prompt = record_prompt(rep);
        for (const auto& member_id : cluster.member_ids) {
            if (member_id == cluster.representative_id) continue;
            const auto member_it = records.find(member_id);
            if (member_it == records.end()) {
                throw DataError("cluster member not resolvable: " + member_id);
            }
            const InstructionRecord& member = member_it->second;
            if (rep.answer.empty() || member.answer.empty()) {
                ++result.skips["empty_answer"];
                continue;
            }
            if (collapse_whitespace(rep.answer) == collapse_whitespace(member.answer)) {
                ++result.skips["identical_answers"];
                continue;
            }
            const Verdict verdict =
                judge.judge_pair(prompt, rep.answer, member.answer, rep.answer);
            if (verdict == Verdict::tie) {
                ++result.skips["tie"];
                continue;
            }
            PreferencePair pair;
            pair.id = rep.id + "-vs-" + member.id;
            pair.prompt = prompt;
            if (verdict == Verdict::first) {
                pair.chosen = rep.answer;
                pair.rejected = member.answer;
            } else {
                pair.chosen = member.answer;
                pair.rejected = rep.answer;
            }
            pair.source = PairSource::judged_cluster;
            pair.judge_meta["verdict"] = to_string(verdict);
            pair.judge_meta["cluster_id"] = cluster.representative_id;
            result.pairs.push_back(std::move(pair));
        }
    }
    return result;
}

PrefsResult pairs_from_model_outputs(const std::vector<InstructionRecord>& records,
                                     ChatProvider& model) {
    PrefsResult result;
    for (const auto& rec : records) {
        if (rec.answer.empty()) {
            throw DataError("record " + rec.id + " lacks a ground-truth answer");
        }
        const std::string output =
            model.chat_complete(rec.instruction, {{"user", rec.question}});
        if (collapse_whitespace(output) == collapse_whitespace(rec.answer)) {
            ++result.skips["model_matches_truth"];
            continue;
        }
        if (trim(output).empty()) {
            ++result.skips["empty_model_output"];
            continue;
        }
        PreferencePair pair;
        pair.id = rec.id + "-contrast";
        pair.prompt = record_prompt(rec);
        pair.chosen = rec.answer;
        pair.rejected = output;
        pair.source = PairSource::model_contrast;
        result.pairs.push_back(std::move(pair));
    }
    return result;
}

}  // namespace finforge
