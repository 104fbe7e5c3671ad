#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "finforge/records.hpp"

namespace finforge {

using json = nlohmann::json;

json to_json(const DocumentRecord& r);
DocumentRecord document_from_json(const json& j);

json to_json(const Chunk& c);
Chunk chunk_from_json(const json& j);

json to_json(const InstructionRecord& r);
InstructionRecord instruction_from_json(const json& j);
Annotations annotations_from_json(const json& ann);

json to_json(const PreferencePair& p);
PreferencePair pair_from_json(const json& j);

json to_json(const McqItem& m);
McqItem mcq_from_json(const json& j);

json to_json(const CleanReport& r);

// One JSON object per line. Blank lines are skipped; a malformed line
// raises DataError naming the line number.
std::vector<json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<json>& rows);

template <typename T, typename FromJson>
std::vector<T> read_jsonl_as(const std::string& path, FromJson from) {
    std::vector<T> out;
    for (const auto& j : read_jsonl(path)) out.push_back(from(j));
    return out;
}

std::vector<DocumentRecord> read_documents(const std::string& path);
std::vector<Chunk> read_chunks(const std::string& path);
std::vector<InstructionRecord> read_instructions(const std::string& path);
std::vector<McqItem> read_mcq_items(const std::string& path);

void write_documents(const std::string& path, const std::vector<DocumentRecord>& v);
void write_chunks(const std::string& path, const std::vector<Chunk>& v);
void write_instructions(const std::string& path, const std::vector<InstructionRecord>& v);
void write_pairs(const std::string& path, const std::vector<PreferencePair>& v);

}  // namespace finforge
