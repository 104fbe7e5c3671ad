#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "finforge/jsonl.hpp"
#include "finforge/records.hpp"

namespace finforge {

// Templates for uniform-format defaults and Context-Driven construction.
struct TemplateSet {
    std::string default_instruction = "请回答下面的问题。";
    std::string summarize_instruction = "为以下内容生成摘要/标题";
    std::string qa_question_prefix = "什么是";
    std::string qa_question_suffix = "？";
    std::string mrc_instruction_prefix = "阅读以下材料，回答问题。\n材料：";
};

// Converts a loosely-structured record into the uniform
// instruction/question/answer format. mapping is uniform-field -> raw-field;
// an unmapped field falls back to its own name in the raw record, which
// makes the conversion idempotent on already-uniform rows. A missing
// question (or missing id with no fallback_id) is a schema error naming the
// field. All text fields are normalized and trimmed.
InstructionRecord to_uniform_format(const json& raw,
                                    const std::map<std::string, std::string>& mapping,
                                    const std::string& fallback_id = std::string(),
                                    const TemplateSet& templates = {});

struct SftCleanRules {
    std::vector<std::string> inappropriate_terms;
    std::size_t min_answer_len = 2;  // codepoints, answer-required records only

    static SftCleanRules load(const std::string& path);
    static SftCleanRules parse(const std::string& text);
};

// Drops records with empty questions, unresolved {{...}} placeholders,
// inappropriate terms, too-short answers (context_driven records still
// waiting for generation are exempt), and compute answers whose calculator
// markers fail verification.
std::pair<std::vector<InstructionRecord>, CleanReport> clean_instruction(
    const std::vector<InstructionRecord>& records, const SftCleanRules& rules);

// Deterministic template fill for task in {summarize, qa_open, mrc}.
// summarize/mrc require >= 100 codepoints of chunk text; qa_open expects a
// concept chunk "概念：解释" and splits on the first colon.
InstructionRecord context_to_instruction(const Chunk& chunk, Task task,
                                         const TemplateSet& templates = {});

enum class EvolKind { constraint_format, constraint_length, role_persona, what_if };

const char* to_string(EvolKind k);
EvolKind evol_kind_from_string(const std::string& s);

struct EvolSpec {
    EvolKind kind = EvolKind::constraint_length;
    std::map<std::string, std::string> params;
    // constraint_length: n (positive integer)
    // constraint_format: format in {numbered_list, json}
    // role_persona: role
    // what_if: scenario
};

// Complicates the prompt per the spec kind; the answer is never touched.
// Output has origin=evolved and the kind appended to the id.
InstructionRecord evolve_prompt(const InstructionRecord& record, const EvolSpec& spec);

// "uniform_field = raw_field" lines; '#' comments and blanks ignored.
std::map<std::string, std::string> read_field_map(const std::string& path);

}  // namespace finforge
