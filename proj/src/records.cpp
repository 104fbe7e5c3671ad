#include "finforge/records.hpp"

#include "finforge/errors.hpp"

namespace finforge {

const char* to_string(Source s) {
    switch (s) {
        case Source::finance_news: return "finance_news";
        case Source::paper: return "paper";
        case Source::report: return "report";
        case Source::policy: return "policy";
        case Source::law: return "law";
        case Source::general_zh: return "general_zh";
        case Source::general_en: return "general_en";
    }
    return "finance_news";
}

Source source_from_string(const std::string& s) {
    if (s == "finance_news") return Source::finance_news;
    if (s == "paper") return Source::paper;
    if (s == "report") return Source::report;
    if (s == "policy") return Source::policy;
    if (s == "law") return Source::law;
    if (s == "general_zh") return Source::general_zh;
    if (s == "general_en") return Source::general_en;
    throw DataError("unknown source: " + s);
}

const char* to_string(Task t) {
    switch (t) {
        case Task::qa_choice: return "qa_choice";
        case Task::qa_open: return "qa_open";
        case Task::mrc: return "mrc";
        case Task::summarize: return "summarize";
        case Task::compute: return "compute";
        case Task::sentiment: return "sentiment";
        case Task::relation_extraction: return "relation_extraction";
    }
    return "qa_open";
}

Task task_from_string(const std::string& s) {
    if (s == "qa_choice") return Task::qa_choice;
    if (s == "qa_open") return Task::qa_open;
    if (s == "mrc") return Task::mrc;
    if (s == "summarize") return Task::summarize;
    if (s == "compute") return Task::compute;
    if (s == "sentiment") return Task::sentiment;
    if (s == "relation_extraction") return Task::relation_extraction;
    throw DataError("unknown task: " + s);
}

const char* to_string(Origin o) {
    switch (o) {
        case Origin::seed: return "seed";
        case Origin::generated: return "generated";
        case Origin::context_driven: return "context_driven";
        case Origin::evolved: return "evolved";
    }
    return "seed";
}

Origin origin_from_string(const std::string& s) {
    if (s == "seed") return Origin::seed;
    if (s == "generated") return Origin::generated;
    if (s == "context_driven") return Origin::context_driven;
    if (s == "evolved") return Origin::evolved;
    throw DataError("unknown origin: " + s);
}

const char* to_string(Band b) {
    switch (b) {
        case Band::low: return "low";
        case Band::mid: return "mid";
        case Band::high: return "high";
    }
    return "low";
}

Band band_from_string(const std::string& s) {
    if (s == "low") return Band::low;
    if (s == "mid") return Band::mid;
    if (s == "high") return Band::high;
    throw DataError("unknown band: " + s);
}

const char* to_string(PairSource s) {
    switch (s) {
        case PairSource::judged_cluster: return "judged_cluster";
        case PairSource::model_contrast: return "model_contrast";
    }
    return "judged_cluster";
}

PairSource pair_source_from_string(const std::string& s) {
    if (s == "judged_cluster") return PairSource::judged_cluster;
    if (s == "model_contrast") return PairSource::model_contrast;
    throw DataError("unknown pair source: " + s);
}

std::string record_prompt(const InstructionRecord& rec) {
    return rec.instruction + "\n" + rec.question;
}

}  // namespace finforge
