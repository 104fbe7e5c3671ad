#include "finforge/jsonl.hpp"

#include <fstream>

#include "finforge/errors.hpp"

namespace finforge {

json to_json(const DocumentRecord& r) {
    json j{{"id", r.id}, {"source", to_string(r.source)}, {"text", r.text}};
    if (!r.meta.empty()) j["meta"] = r.meta;
    return j;
}

DocumentRecord document_from_json(const json& j) {
    DocumentRecord r;
    r.id = j.at("id").get<std::string>();
    if (r.id.empty()) throw DataError("document with empty id");
    r.source = source_from_string(j.value("source", "finance_news"));
    r.text = j.at("text").get<std::string>();
    if (j.contains("meta")) r.meta = j["meta"].get<std::map<std::string, std::string>>();
    return r;
}

json to_json(const Chunk& c) {
    return json{{"id", c.id},
                {"doc_ids", c.doc_ids},
                {"text", c.text},
                {"char_len", c.char_len},
                {"token_estimate", c.token_estimate}};
}

Chunk chunk_from_json(const json& j) {
    Chunk c;
    c.id = j.at("id").get<std::string>();
    c.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    c.text = j.at("text").get<std::string>();
    c.char_len = j.at("char_len").get<std::size_t>();
    c.token_estimate = j.at("token_estimate").get<std::size_t>();
    return c;
}

json to_json(const InstructionRecord& r) {
    json ann = json::object();
    if (r.annotations.ifd_score) ann["ifd_score"] = *r.annotations.ifd_score;
    if (r.annotations.cluster_id) ann["cluster_id"] = *r.annotations.cluster_id;
    if (r.annotations.band) ann["band"] = to_string(*r.annotations.band);
    json j{{"id", r.id},          {"task", to_string(r.task)},
           {"instruction", r.instruction}, {"question", r.question},
           {"answer", r.answer}, {"origin", to_string(r.origin)}};
    if (!ann.empty()) j["annotations"] = ann;
    return j;
}

Annotations annotations_from_json(const json& ann) {
    Annotations a;
    if (ann.contains("ifd_score")) a.ifd_score = ann["ifd_score"].get<double>();
    if (ann.contains("cluster_id")) a.cluster_id = ann["cluster_id"].get<std::string>();
    if (ann.contains("band")) a.band = band_from_string(ann["band"].get<std::string>());
    return a;
}

InstructionRecord instruction_from_json(const json& j) {
    InstructionRecord r;
    r.id = j.at("id").get<std::string>();
    r.task = task_from_string(j.value("task", "qa_open"));
    r.instruction = j.at("instruction").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.answer = j.value("answer", "");
    r.origin = origin_from_string(j.value("origin", "seed"));
    if (j.contains("annotations")) r.annotations = annotations_from_json(j["annotations"]);
    return r;
}

json to_json(const PreferencePair& p) {
    json j{{"id", p.id},         {"prompt", p.prompt},
           {"chosen", p.chosen}, {"rejected", p.rejected},
           {"source", to_string(p.source)}};
    if (!p.judge_meta.empty()) j["judge_meta"] = p.judge_meta;
    return j;
}

PreferencePair pair_from_json(const json& j) {
    PreferencePair p;
    p.id = j.at("id").get<std::string>();
    p.prompt = j.at("prompt").get<std::string>();
    p.chosen = j.at("chosen").get<std::string>();
    p.rejected = j.at("rejected").get<std::string>();
    p.source = pair_source_from_string(j.value("source", "judged_cluster"));
    if (j.contains("judge_meta"))
        p.judge_meta = j["judge_meta"].get<std::map<std::string, std::string>>();
    return p;
}

json to_json(const McqItem& m) {
    json choices = json::object();
    for (const auto& [letter, text] : m.choices) choices[std::string(1, letter)] = text;
    return json{{"id", m.id},
                {"question", m.question},
                {"choices", choices},
                {"gold", std::string(1, m.gold)},
                {"category", m.category}};
}

McqItem mcq_from_json(const json& j) {
    McqItem m;
    m.id = j.at("id").get<std::string>();
    m.question = j.at("question").get<std::string>();
    for (char letter = 'A'; letter <= 'E'; ++letter) {
        const std::string key(1, letter);
        if (j.at("choices").contains(key))
            m.choices.emplace_back(letter, j["choices"][key].get<std::string>());
    }
    const auto gold = j.at("gold").get<std::string>();
    if (gold.size() != 1) throw DataError("mcq item " + m.id + ": bad gold letter");
    m.gold = gold[0];
    m.category = j.value("category", "default");
    if (m.choices.size() < 2) throw DataError("mcq item " + m.id + ": needs >= 2 choices");
    bool gold_present = false;
    for (const auto& [letter, _] : m.choices) gold_present |= (letter == m.gold);
    if (!gold_present) throw DataError("mcq item " + m.id + ": gold not among choices");
    return m;
}

json to_json(const CleanReport& r) {
    return json{{"kept", r.kept}, {"dropped", r.dropped}, {"reasons", r.reasons}};
}

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& j : rows) out << j.dump() << "\n";
}

std::vector<DocumentRecord> read_documents(const std::string& path) {
    return read_jsonl_as<DocumentRecord>(path, document_from_json);
}

std::vector<Chunk> read_chunks(const std::string& path) {
    return read_jsonl_as<Chunk>(path, chunk_from_json);
}

std::vector<InstructionRecord> read_instructions(const std::string& path) {
    return read_jsonl_as<InstructionRecord>(path, instruction_from_json);
}

std::vector<McqItem> read_mcq_items(const std::string& path) {
    return read_jsonl_as<McqItem>(path, mcq_from_json);
}

template <typename T>
static void write_records(const std::string& path, const std::vector<T>& v) {
    std::vector<json> rows;
    rows.reserve(v.size());
    for (const auto& r : v) rows.push_back(to_json(r));
    write_jsonl(path, rows);
}

void write_documents(const std::string& path, const std::vector<DocumentRecord>& v) {
    write_records(path, v);
}
void write_chunks(const std::string& path, const std::vector<Chunk>& v) {
    write_records(path, v);
}
void write_instructions(const std::string& path, const std::vector<InstructionRecord>& v) {
    write_records(path, v);
}
void write_pairs(const std::string& path, const std::vector<PreferencePair>& v) {
    write_records(path, v);
}

}  // namespace finforge
