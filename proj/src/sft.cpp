#include "finforge/sft.hpp"

#include <fstream>

#include "finforge/errors.hpp"
#include "finforge/pretrain.hpp"
#include "finforge/textutil.hpp"
#include "finforge/toolrt.hpp"

namespace finforge {

namespace {

std::string clean_field(const std::string& raw) {
    return trim(normalize_text(raw));
}

// Uniform-name lookup with fallback to the field's own name.
const json* resolve_field(const json& raw, const std::string& uniform_name,
                          const std::map<std::string, std::string>& mapping) {
    if (const auto it = mapping.find(uniform_name); it != mapping.end()) {
        if (raw.contains(it->second)) return &raw.at(it->second);
    }
    if (raw.contains(uniform_name)) return &raw.at(uniform_name);
    return nullptr;
}

std::string field_label(const std::string& uniform_name,
                        const std::map<std::string, std::string>& mapping) {
    if (const auto it = mapping.find(uniform_name); it != mapping.end()) {
        return it->second;
    }
    return uniform_name;
}

}  // namespace

InstructionRecord to_uniform_format(const json& raw,
                                    const std::map<std::string, std::string>& mapping,
                                    const std::string& fallback_id,
                                    const TemplateSet& templates) {
    if (!raw.is_object()) throw DataError("record is not a JSON object");
    InstructionRecord rec;

    if (const json* id = resolve_field(raw, "id", mapping); id && id->is_string()) {
        rec.id = id->get<std::string>();
    } else if (!fallback_id.empty()) {
        rec.id = fallback_id;
    } else {
        throw DataError("schema error: missing field '" + field_label("id", mapping) + "'");
    }

    if (const json* instr = resolve_field(raw, "instruction", mapping)) {
        if (!instr->is_string()) throw DataError("schema error: 'instruction' must be a string");
        rec.instruction = clean_field(instr->get<std::string>());
    }
    if (rec.instruction.empty()) rec.instruction = templates.default_instruction;

    const json* question = resolve_field(raw, "question", mapping);
    if (!question || !question->is_string()) {
        throw DataError("schema error: missing field '" + field_label("question", mapping) +
                        "'");
    }
    rec.question = clean_field(question->get<std::string>());

    if (const json* answer = resolve_field(raw, "answer", mapping)) {
        if (!answer->is_string()) throw DataError("schema error: 'answer' must be a string");
        rec.answer = clean_field(answer->get<std::string>());
    }

    if (const json* task = resolve_field(raw, "task", mapping); task && task->is_string()) {
        rec.task = task_from_string(task->get<std::string>());
    }
    if (const json* origin = resolve_field(raw, "origin", mapping);
        origin && origin->is_string()) {
        rec.origin = origin_from_string(origin->get<std::string>());
    }
    if (raw.contains("annotations") && raw.at("annotations").is_object()) {
        rec.annotations = annotations_from_json(raw.at("annotations"));
    }
    return rec;
}

SftCleanRules SftCleanRules::parse(const std::string& text) {
    SftCleanRules rules;
    for (const auto& raw_line : split(text, '\n')) {
        const std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed rule line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "inappropriate_terms") {
            for (const auto& term : split(value, ',')) {
                const std::string t = trim(term);
                if (!t.empty()) rules.inappropriate_terms.push_back(t);
            }
        } else if (key == "min_answer_len") {
            rules.min_answer_len = static_cast<std::size_t>(std::stoull(value));
        } else {
            throw ConfigError("unknown rule key: " + key);
        }
    }
    return rules;
}

SftCleanRules SftCleanRules::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open rules file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
}

namespace {

bool has_unresolved_placeholder(const std::string& s) {
    const auto open = s.find("{{");
    return open != std::string::npos && s.find("}}", open + 2) != std::string::npos;
}

bool contains_term(const InstructionRecord& rec, const std::string& term) {
    return rec.instruction.find(term) != std::string::npos ||
           rec.question.find(term) != std::string::npos ||
           rec.answer.find(term) != std::string::npos;
}

}  // namespace

std::pair<std::vector<InstructionRecord>, CleanReport> clean_instruction(
    const std::vector<InstructionRecord>& records, const SftCleanRules& rules) {
    std::vector<InstructionRecord> kept;
    CleanReport report;
    for (const auto& rec : records) {
        std::string reason;
        if (trim(rec.question).empty()) {
            reason = "empty_question";
        } else if (has_unresolved_placeholder(rec.instruction) ||
                   has_unresolved_placeholder(rec.question) ||
                   has_unresolved_placeholder(rec.answer)) {
            reason = "unresolved_template";
        } else {
            for (const auto& term : rules.inappropriate_terms) {
                if (contains_term(rec, term)) {
                    reason = "inappropriate_term";
                    break;
                }
            }
        }
        if (reason.empty()) {
            // context_driven records may legitimately await answer generation
            const bool awaiting_fill =
                rec.origin == Origin::context_driven && rec.answer.empty();
            if (!awaiting_fill && codepoint_count(rec.answer) < rules.min_answer_len) {
                reason = "short_answer";
            }
        }
        if (reason.empty() && rec.task == Task::compute && !rec.answer.empty()) {
            const auto outcomes = verify_examples({rec});
            if (outcomes.front().status != VerifyStatus::ok) {
                reason = "calc_verify_failed";
            }
        }
        if (reason.empty()) {
            kept.push_back(rec);
            ++report.kept;
        } else {
            ++report.dropped;
            ++report.reasons[reason];
        }
    }
    return {std::move(kept), report};
}

InstructionRecord context_to_instruction(const Chunk& chunk, Task task,
                                         const TemplateSet& templates) {
    if (task != Task::summarize && task != Task::qa_open && task != Task::mrc) {
        throw ConfigError("context task must be summarize, qa_open or mrc");
    }
    const std::size_t len = codepoint_count(chunk.text);
    if ((task == Task::summarize || task == Task::mrc) && len < 100) {
        throw DataError("chunk " + chunk.id + " too short for " +
                        std::string(to_string(task)) + ": " + std::to_string(len) +
                        " chars (need 100)");
    }
    InstructionRecord rec;
    rec.id = chunk.id + "-" + to_string(task);
    rec.task = task;
    rec.origin = Origin::context_driven;
    switch (task) {
        case Task::summarize:
            rec.instruction = templates.summarize_instruction;
            rec.question = chunk.text;
            break;
        case Task::mrc:
            rec.instruction = templates.mrc_instruction_prefix + chunk.text;
            // question and answer filled later by the chat provider
            break;
        case Task::qa_open: {
            // concept chunk: "市盈率：股价与每股收益之比"
            auto colon = chunk.text.find("：");
            std::size_t skip = 3;  // UTF-8 bytes of fullwidth colon
            if (colon == std::string::npos) {
                colon = chunk.text.find(':');
                skip = 1;
            }
            if (colon == std::string::npos) {
                throw DataError("chunk " + chunk.id + " is not a concept chunk (no colon)");
            }
            const std::string concept_text = trim(chunk.text.substr(0, colon));
            const std::string explanation = trim(chunk.text.substr(colon + skip));
            if (concept_text.empty() || concept_text.find('\n') != std::string::npos) {
                throw DataError("chunk " + chunk.id + " has no usable concept line");
            }
            if (explanation.empty()) {
                throw DataError("chunk " + chunk.id + " has an empty explanation");
            }
            rec.instruction = templates.default_instruction;
            rec.question = templates.qa_question_prefix + concept_text + templates.qa_question_suffix;
            rec.answer = explanation;
            break;
        }
        default:
            break;
    }
    return rec;
}

const char* to_string(EvolKind k) {
    switch (k) {
        case EvolKind::constraint_format: return "constraint_format";
        case EvolKind::constraint_length: return "constraint_length";
        case EvolKind::role_persona: return "role_persona";
        case EvolKind::what_if: return "what_if";
    }
    return "constraint_length";
}

EvolKind evol_kind_from_string(const std::string& s) {
    if (s == "constraint_format") return EvolKind::constraint_format;
    if (s == "constraint_length") return EvolKind::constraint_length;
    if (s == "role_persona") return EvolKind::role_persona;
    if (s == "what_if") return EvolKind::what_if;
    throw ConfigError("unknown evolution kind: " + s);
}

namespace {

const std::string& require_param(const EvolSpec& spec, const std::string& key) {
    const auto it = spec.params.find(key);
    if (it == spec.params.end() || it->second.empty()) {
        throw ConfigError(std::string("evolution kind ") + to_string(spec.kind) +
                          " requires param '" + key + "'");
    }
    return it->second;
}

}  // namespace

InstructionRecord evolve_prompt(const InstructionRecord& record, const EvolSpec& spec) {
    InstructionRecord out = record;
    switch (spec.kind) {
        case EvolKind::constraint_length: {
            const std::string& n_str = require_param(spec, "n");
            long n = 0;
            try {
                n = std::stol(n_str);
            } catch (const std::exception&) {
                throw ConfigError("constraint_length param n must be an integer");
            }
            if (n <= 0) throw ConfigError("constraint_length limit must be positive");
            out.instruction += "请将回答控制在" + std::to_string(n) + "字以内";
            break;
        }
        case EvolKind::constraint_format: {
            const auto it = spec.params.find("format");
            const std::string format = it == spec.params.end() ? "numbered_list" : it->second;
            if (format == "numbered_list") {
                out.instruction += "请以编号列表的形式输出。";
            } else if (format == "json") {
                out.instruction += "请以JSON格式输出。";
            } else {
                throw ConfigError("unknown output format: " + format);
            }
            break;
        }
        case EvolKind::role_persona:
            out.instruction = "假设你是一名" + require_param(spec, "role") + "，" +
                              out.instruction;
            break;
        case EvolKind::what_if:
            out.question = "假如" + require_param(spec, "scenario") + "，" + out.question;
            break;
    }
    out.origin = Origin::evolved;
    out.id = record.id + "-" + to_string(spec.kind);
    return out;
}

std::map<std::string, std::string> read_field_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open field map: " + path);
    std::map<std::string, std::string> mapping;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("malformed field map line " + std::to_string(line_no) + ": " + t);
        }
        mapping[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return mapping;
}

}  // namespace finforge
