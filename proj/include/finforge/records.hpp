#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace finforge {

enum class Source {
    finance_news,
    paper,
    report,
    policy,
    law,
    general_zh,
    general_en,
};

const char* to_string(Source s);
Source source_from_string(const std::string& s);

struct DocumentRecord {
    std::string id;
    Source source = Source::finance_news;
    std::string text;
    std::map<std::string, std::string> meta;
};

struct Chunk {
    std::string id;
    std::vector<std::string> doc_ids;
    std::string text;
    std::size_t char_len = 0;        // codepoints, not bytes
    std::size_t token_estimate = 0;  // ceil(char_len / 1.6) heuristic
};

struct CleanReport {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::map<std::string, std::size_t> reasons;
};

enum class Task {
    qa_choice,
    qa_open,
    mrc,
    summarize,
    compute,
    sentiment,
    relation_extraction,
};

const char* to_string(Task t);
Task task_from_string(const std::string& s);

enum class Origin {
    seed,
    generated,
    context_driven,
    evolved,
};

const char* to_string(Origin o);
Origin origin_from_string(const std::string& s);

enum class Band { low, mid, high };

const char* to_string(Band b);
Band band_from_string(const std::string& s);

struct Annotations {
    std::optional<double> ifd_score;
    std::optional<std::string> cluster_id;
    std::optional<Band> band;
};

struct InstructionRecord {
    std::string id;
    Task task = Task::qa_open;
    std::string instruction;
    std::string question;
    std::string answer;
    Origin origin = Origin::seed;
    Annotations annotations;
};

enum class PairSource { judged_cluster, model_contrast };

const char* to_string(PairSource s);
PairSource pair_source_from_string(const std::string& s);

struct PreferencePair {
    std::string id;
    std::string prompt;  // instruction + "\n" + question
    std::string chosen;
    std::string rejected;
    PairSource source = PairSource::judged_cluster;
    std::map<std::string, std::string> judge_meta;
};

struct McqItem {
    std::string id;
    std::string question;
    std::vector<std::pair<char, std::string>> choices;  // ordered, 'A'..'E'
    char gold = 'A';
    std::string category;
};

// Token estimate used until real tokenization happens in the mix planner:
// ceil(char_len / 1.6), in exact integer arithmetic.
inline std::size_t estimate_tokens(std::size_t char_len) {
    return (char_len * 5 + 7) / 8;
}

// Prompt fed to chat/judge providers for an instruction record.
std::string record_prompt(const InstructionRecord& rec);

}  // namespace finforge
