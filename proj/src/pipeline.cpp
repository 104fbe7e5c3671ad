#include "finforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "finforge/embed_dedup.hpp"
#include "finforge/errors.hpp"
#include "finforge/ifd.hpp"
#include "finforge/prefs.hpp"
#include "finforge/pretrain.hpp"
#include "finforge/providers.hpp"
#include "finforge/sft.hpp"
#include "finforge/simhash.hpp"
#include "finforge/textutil.hpp"
#include "finforge/toolrt.hpp"

namespace finforge {

namespace {

struct StageCounts {
    std::size_t in = 0;
    std::size_t out = 0;
    std::map<std::string, std::size_t> drops;
};

using StageFn = std::function<StageCounts(const StageSpec&, const StageContext&)>;

// --- option helpers -----------------------------------------------------

double opt_number(const json& options, const char* key, double fallback) {
    if (!options.contains(key)) return fallback;
    const json& v = options.at(key);
    if (!v.is_number()) throw ConfigError(std::string("option '") + key + "' must be a number");
    return v.get<double>();
}

std::size_t opt_size(const json& options, const char* key, std::size_t fallback) {
    const double v = opt_number(options, key, static_cast<double>(fallback));
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw ConfigError(std::string("option '") + key + "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

std::string opt_string(const json& options, const char* key, const std::string& fallback) {
    if (!options.contains(key)) return fallback;
    const json& v = options.at(key);
    if (!v.is_string()) throw ConfigError(std::string("option '") + key + "' must be a string");
    return v.get<std::string>();
}

// --- provider construction ---------------------------------------------

bool use_http(const json& options) {
    const std::string provider = opt_string(options, "provider", "stub");
    if (provider == "http") return true;
    if (provider != "stub") throw ConfigError("option 'provider' must be stub or http");
    return false;
}

// --- stages -------------------------------------------------------------

StageCounts stage_chunk(const StageSpec& spec, const StageContext&) {
    const auto raw = read_documents(spec.input);
    std::vector<DocumentRecord> docs;
    docs.reserve(raw.size());
    for (const auto& d : raw) docs.push_back(normalize_document(d));
    const auto chunks = chunk_documents(docs, opt_size(spec.options, "max_length", kDefaultChunkLength));
    write_chunks(spec.output, chunks);
    return {docs.size(), chunks.size(), {}};
}

RuleSet rules_from_options(const json& options) {
    RuleSet rules;
    if (options.contains("rules")) rules = RuleSet::load(options.at("rules").get<std::string>());
    rules.min_content_ratio = opt_number(options, "min_content_ratio", rules.min_content_ratio);
    return rules;
}

StageCounts stage_clean(const StageSpec& spec, const StageContext&) {
    const auto chunks = read_chunks(spec.input);
    const auto [kept, report] = apply_clean_rules(chunks, rules_from_options(spec.options));
    write_chunks(spec.output, kept);
    return {chunks.size(), kept.size(), report.reasons};
}

StageCounts stage_dedup_simhash(const StageSpec& spec, const StageContext& ctx) {
    const auto chunks = read_chunks(spec.input);
    DedupConfig cfg;
    cfg.ngram = opt_size(spec.options, "ngram", cfg.ngram);
    cfg.hamming_threshold =
        static_cast<unsigned>(opt_size(spec.options, "hamming_threshold", cfg.hamming_threshold));
    cfg.bands = static_cast<unsigned>(opt_size(spec.options, "bands", cfg.bands));
    cfg.jobs = ctx.jobs;
    const auto result = dedup_chunks(chunks, cfg);
    write_chunks(spec.output, result.kept);
    StageCounts counts{chunks.size(), result.kept.size(), {}};
    if (!result.dropped_pairs.empty()) {
        counts.drops["near_duplicate"] = result.dropped_pairs.size();
    }
    return counts;
}

StageCounts stage_sft_format(const StageSpec& spec, const StageContext&) {
    const auto rows = read_jsonl(spec.input);
    std::map<std::string, std::string> mapping;
    if (spec.options.contains("field_map")) {
        mapping = read_field_map(spec.options.at("field_map").get<std::string>());
    }
    if (spec.options.contains("mapping")) {
        for (const auto& [k, v] : spec.options.at("mapping").items()) {
            mapping[k] = v.get<std::string>();
        }
    }
    std::vector<InstructionRecord> records;
    records.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        records.push_back(to_uniform_format(rows[i], mapping, "rec-" + std::to_string(i)));
    }
    write_instructions(spec.output, records);
    return {rows.size(), records.size(), {}};
}

StageCounts stage_sft_from_context(const StageSpec& spec, const StageContext&) {
    const auto chunks = read_chunks(spec.input);
    const Task task = task_from_string(opt_string(spec.options, "task", "qa_open"));
    std::vector<InstructionRecord> records;
    StageCounts counts{chunks.size(), 0, {}};
    for (const auto& chunk : chunks) {
        // qa_open works per concept paragraph; longer-form tasks take the
        // chunk whole.
        std::vector<Chunk> units;
        if (task == Task::qa_open) {
            std::size_t p = 0;
            std::size_t start = 0;
            while (start <= chunk.text.size()) {
                std::size_t cut = chunk.text.find("\n\n", start);
                if (cut == std::string::npos) cut = chunk.text.size();
                const std::string para = trim(chunk.text.substr(start, cut - start));
                if (!para.empty()) {
                    Chunk unit;
                    unit.id = chunk.id + "-p" + std::to_string(p++);
                    unit.doc_ids = chunk.doc_ids;
                    unit.text = para;
                    unit.char_len = codepoint_count(para);
                    unit.token_estimate = estimate_tokens(unit.char_len);
                    units.push_back(std::move(unit));
                }
                start = cut + 2;
            }
        } else {
            units.push_back(chunk);
        }
        bool produced = false;
        for (const auto& unit : units) {
            try {
                records.push_back(context_to_instruction(unit, task));
                produced = true;
            } catch (const DataError&) {
                // Unit does not fit the task template; fall through.
            }
        }
        if (!produced) ++counts.drops["unusable_context"];
    }
    write_instructions(spec.output, records);
    counts.out = records.size();
    return counts;
}

StageCounts stage_sft_clean(const StageSpec& spec, const StageContext&) {
    const auto records = read_instructions(spec.input);
    SftCleanRules rules;
    if (spec.options.contains("rules")) {
        rules = SftCleanRules::load(spec.options.at("rules").get<std::string>());
    }
    rules.min_answer_len = opt_size(spec.options, "min_answer_len", rules.min_answer_len);
    const auto [kept, report] = clean_instruction(records, rules);
    write_instructions(spec.output, kept);
    return {records.size(), kept.size(), report.reasons};
}

StageCounts stage_sft_evolve(const StageSpec& spec, const StageContext&) {
    const auto records = read_instructions(spec.input);
    EvolSpec evol;
    evol.kind = evol_kind_from_string(opt_string(spec.options, "kind", "constraint_length"));
    if (spec.options.contains("params")) {
        for (const auto& [k, v] : spec.options.at("params").items()) {
            evol.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    std::vector<InstructionRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(evolve_prompt(rec, evol));
    write_instructions(spec.output, out);
    return {records.size(), out.size(), {}};
}

StageCounts stage_dedup_embed(const StageSpec& spec, const StageContext& ctx) {
    const auto records = read_instructions(spec.input);
    EmbedDedupConfig cfg;
    cfg.threshold = opt_number(spec.options, "threshold", cfg.threshold);
    cfg.lsh_prefilter = spec.options.value("lsh_prefilter", cfg.lsh_prefilter);
    cfg.lsh_seed = opt_size(spec.options, "lsh_seed", ctx.seed);
    cfg.jobs = ctx.jobs;
    cfg.validate();

    std::map<std::string, EmbeddingVector> vectors;
    if (use_http(spec.options)) {
        HttpEmbedder provider(provider_config_from_env("FINFORGE_EMBED_URL"));
        vectors = embed_records(records, provider);
    } else {
        StubEmbedder provider;
        vectors = embed_records(records, provider);
    }
    auto clusters = find_near_duplicates(vectors, cfg.threshold, cfg);
    const auto [kept, removed] = collapse_clusters(records, clusters);
    write_instructions(spec.output, kept);
    write_instructions(spec.output + ".removed.jsonl", removed);
    StageCounts counts{records.size(), kept.size(), {}};
    if (!removed.empty()) counts.drops["near_duplicate"] = removed.size();
    return counts;
}

StageCounts stage_ifd_score(const StageSpec& spec, const StageContext& ctx) {
    auto records = read_instructions(spec.input);
    if (use_http(spec.options)) {
        HttpLogprobLm provider(provider_config_from_env("FINFORGE_LOGPROB_URL"));
        ifd_score_all(records, provider, ctx.jobs);
    } else {
        StubBigramLm lm;
        for (const auto& rec : records) lm.observe(record_prompt(rec) + "\n" + rec.answer);
        ifd_score_all(records, lm, ctx.jobs);
    }
    write_instructions(spec.output, records);
    return {records.size(), records.size(), {}};
}

StageCounts stage_ifd_filter(const StageSpec& spec, const StageContext&) {
    const auto records = read_instructions(spec.input);
    const double fraction = opt_number(spec.options, "fraction", 0.7);
    const auto [kept, rest] = filter_top_fraction(records, fraction);
    write_instructions(spec.output, kept);
    StageCounts counts{records.size(), kept.size(), {}};
    if (!rest.empty()) counts.drops["low_ifd"] = rest.size();
    return counts;
}

StageCounts stage_ifd_bands(const StageSpec& spec, const StageContext&) {
    const auto records = read_instructions(spec.input);
    auto split = band_partition(records);
    std::vector<InstructionRecord> all;
    all.reserve(records.size());
    for (const auto* band : {&split.low, &split.mid, &split.high}) {
        all.insert(all.end(), band->begin(), band->end());
    }
    write_instructions(spec.output, all);
    write_instructions(spec.output + ".low.jsonl", split.low);
    write_instructions(spec.output + ".mid.jsonl", split.mid);
    write_instructions(spec.output + ".high.jsonl", split.high);
    return {records.size(), all.size(), {}};
}

StageCounts stage_build_prefs(const StageSpec& spec, const StageContext&) {
    auto records = read_instructions(spec.input);
    // Removed near-duplicates carry the cluster annotations too; fold them
    // back in so clusters are complete.
    std::string removed_path = opt_string(spec.options, "removed", spec.input + ".removed.jsonl");
    if (std::filesystem::exists(removed_path)) {
        for (auto& rec : read_instructions(removed_path)) records.push_back(std::move(rec));
    }
    const std::size_t in_count = records.size();

    const std::string mode = opt_string(spec.options, "mode", "clusters");
    PrefsResult result;
    if (mode == "clusters") {
        std::map<std::string, DupCluster> clusters_by_rep;
        std::map<std::string, InstructionRecord> by_id;
        for (const auto& rec : records) {
            if (!by_id.emplace(rec.id, rec).second) {
                throw DataError("duplicate record id " + rec.id);
            }
            if (rec.annotations.cluster_id) {
                auto& cluster = clusters_by_rep[*rec.annotations.cluster_id];
                cluster.representative_id = *rec.annotations.cluster_id;
                cluster.member_ids.push_back(rec.id);
            }
        }
        std::vector<DupCluster> clusters;
        for (auto& [rep, cluster] : clusters_by_rep) {
            std::sort(cluster.member_ids.begin(), cluster.member_ids.end());
            clusters.push_back(std::move(cluster));
        }
        if (use_http(spec.options)) {
            HttpJudge judge(provider_config_from_env("FINFORGE_JUDGE_URL"));
            result = pairs_from_clusters(clusters, by_id, judge);
        } else {
            StubJudge judge;
            result = pairs_from_clusters(clusters, by_id, judge);
        }
    } else if (mode == "model-contrast") {
        if (use_http(spec.options)) {
            HttpChat model(provider_config_from_env("FINFORGE_CHAT_URL"));
            result = pairs_from_model_outputs(records, model);
        } else {
            EchoChat model;
            result = pairs_from_model_outputs(records, model);
        }
    } else {
        throw ConfigError("option 'mode' must be clusters or model-contrast");
    }
    write_pairs(spec.output, result.pairs);
    return {in_count, result.pairs.size(), result.skips};
}

StageCounts stage_calc_verify(const StageSpec& spec, const StageContext&) {
    const auto records = read_instructions(spec.input);
    const auto outcomes = verify_examples(records);
    std::vector<json> rows;
    rows.reserve(outcomes.size());
    std::map<std::string, std::size_t> statuses;
    for (const auto& o : outcomes) {
        json row{{"record_id", o.record_id}, {"status", to_string(o.status)}};
        if (o.expected) row["expected"] = *o.expected;
        if (o.found) row["found"] = *o.found;
        if (o.abs_diff) row["abs_diff"] = *o.abs_diff;
        rows.push_back(std::move(row));
        if (o.status != VerifyStatus::ok) ++statuses[to_string(o.status)];
    }
    write_jsonl(spec.output, rows);
    return {records.size(), rows.size(), statuses};
}

const std::map<std::string, StageFn>& stage_registry() {
    static const std::map<std::string, StageFn> registry = {
        {"chunk", stage_chunk},
        {"clean", stage_clean},
        {"dedup-simhash", stage_dedup_simhash},
        {"sft-format", stage_sft_format},
        {"sft-from-context", stage_sft_from_context},
        {"sft-clean", stage_sft_clean},
        {"sft-evolve", stage_sft_evolve},
        {"dedup-embed", stage_dedup_embed},
        {"ifd-score", stage_ifd_score},
        {"ifd-filter", stage_ifd_filter},
        {"ifd-bands", stage_ifd_bands},
        {"build-prefs", stage_build_prefs},
        {"calc-verify", stage_calc_verify},
    };
    return registry;
}

}  // namespace

PipelineManifest manifest_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
    PipelineManifest m;
    m.run_id = j.value("run_id", m.run_id);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer()) throw ConfigError("manifest seed must be an integer");
        m.seed = j.at("seed").get<std::uint64_t>();
    }
    if (!j.contains("stages") || !j.at("stages").is_array()) {
        throw ConfigError("manifest must carry a 'stages' array");
    }
    for (const auto& s : j.at("stages")) {
        StageSpec spec;
        spec.name = s.value("name", "");
        spec.input = s.value("input", "");
        spec.output = s.value("output", "");
        if (s.contains("options")) {
            if (!s.at("options").is_object()) {
                throw ConfigError("stage options must be an object (stage " + spec.name + ")");
            }
            spec.options = s.at("options");
        }
        m.stages.push_back(std::move(spec));
    }
    return m;
}

PipelineManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("manifest " + path + ": " + e.what());
    }
    return manifest_from_json(j);
}

void validate_manifest(const PipelineManifest& m) {
    if (m.stages.empty()) throw ConfigError("manifest has no stages");
    std::set<std::string> produced;
    for (const auto& spec : m.stages) {
        if (!stage_registry().count(spec.name)) {
            throw ConfigError("unknown stage '" + spec.name + "'");
        }
        if (spec.input.empty() || spec.output.empty()) {
            throw ConfigError("stage " + spec.name + " needs input and output paths");
        }
        if (!produced.count(spec.input) && !std::filesystem::exists(spec.input)) {
            throw ConfigError("stage " + spec.name + " input " + spec.input +
                              " neither exists nor is produced by an earlier stage");
        }
        produced.insert(spec.output);
    }
}

std::vector<std::string> known_stage_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : stage_registry()) names.push_back(name);
    return names;
}

StageReport run_stage(const StageSpec& spec, const StageContext& ctx) {
    const auto it = stage_registry().find(spec.name);
    if (it == stage_registry().end()) throw ConfigError("unknown stage '" + spec.name + "'");
    const auto parent = std::filesystem::path(spec.output).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const auto start = std::chrono::steady_clock::now();
    const StageCounts counts = it->second(spec, ctx);
    const auto end = std::chrono::steady_clock::now();
    StageReport report;
    report.name = spec.name;
    report.in_count = counts.in;
    report.out_count = counts.out;
    report.drops = counts.drops;
    report.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
    return report;
}

RunReport run_pipeline(const PipelineManifest& manifest, std::size_t jobs) {
    validate_manifest(manifest);
    RunReport report;
    report.run_id = manifest.run_id;
    StageContext ctx{manifest.seed, jobs == 0 ? 1 : jobs};
    for (const auto& spec : manifest.stages) {
        try {
            report.stages.push_back(run_stage(spec, ctx));
        } catch (const std::exception& e) {
            report.ok = false;
            report.failed_stage = spec.name;
            report.error = e.what();
            break;
        }
    }
    return report;
}

json to_json(const StageReport& r) {
    json drops = json::object();
    for (const auto& [reason, count] : r.drops) drops[reason] = count;
    return json{{"name", r.name},
                {"in_count", r.in_count},
                {"out_count", r.out_count},
                {"drops", drops},
                {"wall_ms", r.wall_ms}};
}

json to_json(const RunReport& r) {
    json stages = json::array();
    for (const auto& s : r.stages) stages.push_back(to_json(s));
    json out{{"run_id", r.run_id}, {"ok", r.ok}, {"stages", stages}};
    if (!r.ok) {
        out["failed_stage"] = r.failed_stage;
        out["error"] = r.error;
    }
    return out;
}

}  // namespace finforge
