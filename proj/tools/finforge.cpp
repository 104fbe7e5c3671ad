#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finforge/calc.hpp"
#include "finforge/corpus_plan.hpp"
#include "finforge/dpo.hpp"
#include "finforge/errors.hpp"
#include "finforge/evalh.hpp"
#include "finforge/jsonl.hpp"
#include "finforge/pipeline.hpp"
#include "finforge/pretrain.hpp"
#include "finforge/providers.hpp"
#include "finforge/toolrt.hpp"

namespace {

using finforge::json;

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

struct Globals {
    std::string config_path;
    std::size_t jobs = 1;
    LogLevel level = LogLevel::info;
    json config = json::object();
    int exit_code = 0;

    void load_config() {
        if (config_path.empty()) return;
        std::ifstream in(config_path);
        if (!in) throw finforge::ConfigError("cannot open config " + config_path);
        try {
            in >> config;
        } catch (const json::parse_error& e) {
            throw finforge::ConfigError("config " + config_path + ": " + e.what());
        }
        if (!config.is_object()) throw finforge::ConfigError("config must be a JSON object");
    }
};

void log_info(const Globals& g, const std::string& msg) {
    if (g.level >= LogLevel::info) std::cerr << msg << '\n';
}

void log_debug(const Globals& g, const std::string& msg) {
    if (g.level >= LogLevel::debug) std::cerr << msg << '\n';
}

std::string drops_summary(const std::map<std::string, std::size_t>& drops) {
    if (drops.empty()) return "none";
    std::string out;
    for (const auto& [reason, count] : drops) {
        if (!out.empty()) out += ", ";
        out += reason + "=" + std::to_string(count);
    }
    return out;
}

// Option precedence: explicit flag > --config stage default > built-in.
json stage_options(const Globals& g, const std::string& stage) {
    if (!g.config.contains(stage)) return json::object();
    const json& defaults = g.config.at(stage);
    if (!defaults.is_object()) {
        throw finforge::ConfigError("config entry for '" + stage + "' must be an object");
    }
    return defaults;
}

void run_stage_command(Globals& g, const std::string& stage, const std::string& input,
                       const std::string& output, json overrides,
                       std::uint64_t seed = 42) {
    json options = stage_options(g, stage);
    for (const auto& [k, v] : overrides.items()) options[k] = v;
    finforge::StageSpec spec{stage, input, output, options};
    log_debug(g, stage + " options: " + options.dump());
    const auto report = finforge::run_stage(spec, {seed, g.jobs});
    log_info(g, stage + ": in=" + std::to_string(report.in_count) +
                    " out=" + std::to_string(report.out_count) +
                    " drops: " + drops_summary(report.drops));
}

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw finforge::DataError("cannot write " + path);
    out << text;
}

json mix_plan_json(const finforge::MixPlan& plan) {
    json per_source = json::object();
    for (const auto& [k, v] : plan.per_source_tokens) per_source[k] = v;
    json weights = json::object();
    for (const auto& [k, v] : plan.sampling_weights) weights[k] = v;
    json factors = json::object();
    for (const auto& [k, v] : plan.resample_factors) factors[k] = v;
    return json{{"per_source_tokens", per_source},
                {"domain_total", plan.domain_total},
                {"general_total", plan.general_total},
                {"ratio", std::to_string(plan.ratio.first) + ":" + std::to_string(plan.ratio.second)},
                {"sampling_weights", weights},
                {"resample_factors", factors}};
}

json eval_report_json(const finforge::EvalReport& report) {
    json per_category = json::object();
    for (const auto& [cat, stats] : report.per_category) {
        per_category[cat] = {{"n", stats.n}, {"correct", stats.correct}, {"accuracy", stats.accuracy()}};
    }
    json items = json::array();
    for (const auto& item : report.items) {
        json row{{"id", item.id},
                 {"category", item.category},
                 {"gold", std::string(1, item.gold)},
                 {"correct", item.correct},
                 {"errored", item.errored}};
        if (item.extracted) row["extracted"] = std::string(1, *item.extracted);
        items.push_back(std::move(row));
    }
    return json{{"overall_accuracy", report.overall_accuracy},
                {"n_items", report.n_items},
                {"n_unparseable", report.n_unparseable},
                {"n_errored", report.n_errored},
                {"per_category", per_category},
                {"items", items}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finforge: data engineering for a financial LLM"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    // Subcommand bodies run after parsing so --config is loaded first.
    std::map<const CLI::App*, std::function<void()>> actions;
    app.add_option("--config", g.config_path, "JSON file with per-subcommand option defaults");
    app.add_option("--jobs", g.jobs, "worker cap for parallel stages")->check(CLI::PositiveNumber);
    std::map<std::string, LogLevel> level_names{
        {"quiet", LogLevel::quiet}, {"info", LogLevel::info}, {"debug", LogLevel::debug}};
    app.add_option("--log-level", g.level, "quiet|info|debug")
        ->transform(CLI::CheckedTransformer(level_names, CLI::ignore_case));

    // --- pre-training stages -------------------------------------------

    {
        auto* sub = app.add_subcommand("chunk", "normalize documents and chunk to a length budget");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto max_length = std::make_shared<std::size_t>(finforge::kDefaultChunkLength);
        sub->add_option("--input", *input, "documents JSONL")->required();
        sub->add_option("--output", *output, "chunks JSONL")->required();
        auto* o_len = sub->add_option("--max-length", *max_length, "chunk budget in codepoints");
        actions[sub] = [&g, sub, input, output, max_length, o_len] {
            json overrides = json::object();
            if (o_len->count()) overrides["max_length"] = *max_length;
            run_stage_command(g, "chunk", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("clean", "rule-based chunk filtering");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto rules = std::make_shared<std::string>();
        auto ratio = std::make_shared<double>(0.3);
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_rules = sub->add_option("--rules", *rules, "rule file (key = value lines)");
        auto* o_ratio = sub->add_option("--min-content-ratio", *ratio);
        actions[sub] = [&g, input, output, rules, ratio, o_rules, o_ratio] {
            json overrides = json::object();
            if (o_rules->count()) overrides["rules"] = *rules;
            if (o_ratio->count()) overrides["min_content_ratio"] = *ratio;
            run_stage_command(g, "clean", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("dedup-simhash", "near-duplicate chunk removal (SimHash)");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto ngram = std::make_shared<std::size_t>(3);
        auto hamming = std::make_shared<std::size_t>(3);
        auto bands = std::make_shared<std::size_t>(4);
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_ngram = sub->add_option("--ngram", *ngram);
        auto* o_hamming = sub->add_option("--hamming-threshold", *hamming);
        auto* o_bands = sub->add_option("--bands", *bands);
        actions[sub] = [&g, input, output, ngram, hamming, bands, o_ngram, o_hamming, o_bands] {
            json overrides = json::object();
            if (o_ngram->count()) overrides["ngram"] = *ngram;
            if (o_hamming->count()) overrides["hamming_threshold"] = *hamming;
            if (o_bands->count()) overrides["bands"] = *bands;
            run_stage_command(g, "dedup-simhash", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("plan-mix", "domain/general token budget and ratio plan");
        auto domain = std::make_shared<std::string>();
        auto general = std::make_shared<std::vector<std::string>>();
        auto ratio = std::make_shared<std::string>("1:3");
        auto output = std::make_shared<std::string>();
        sub->add_option("--domain", *domain, "domain token count, e.g. 25e9")->required();
        sub->add_option("--general", *general, "general-source token count (repeatable)")
            ->required();
        sub->add_option("--ratio", *ratio, "target domain:general ratio");
        sub->add_option("--output", *output, "write JSON here instead of stdout");
        actions[sub] = [domain, general, ratio, output] {
            std::vector<std::int64_t> general_tokens;
            for (const auto& s : *general) general_tokens.push_back(finforge::parse_token_count(s));
            const auto plan = finforge::plan_mix(finforge::parse_token_count(*domain),
                                                 general_tokens, finforge::parse_ratio(*ratio));
            write_or_print(*output, mix_plan_json(plan).dump(2) + "\n");
        };
    }

    {
        auto* sub = app.add_subcommand("extend-vocab", "learn domain subword tokens from chunks");
        auto input = std::make_shared<std::string>();
        auto base = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto scores_path = std::make_shared<std::string>();
        auto max_new = std::make_shared<std::size_t>(7689);
        sub->add_option("--input", *input, "chunks JSONL")->required();
        sub->add_option("--base-vocab", *base, "one token per line");
        sub->add_option("--max-new", *max_new, "token budget");
        sub->add_option("--output", *output, "new tokens, one per line")->required();
        sub->add_option("--scores", *scores_path, "optional token<TAB>score listing");
        actions[sub] = [input, base, output, scores_path, max_new] {
            const auto chunks = finforge::read_chunks(*input);
            std::set<std::string> base_vocab;
            if (!base->empty()) base_vocab = finforge::read_vocab_file(*base);
            const auto ext = finforge::extend_vocab(chunks, base_vocab, *max_new);
            std::string tokens;
            for (const auto& t : ext.new_tokens) tokens += t + "\n";
            write_or_print(*output, tokens);
            if (!scores_path->empty()) {
                std::string lines;
                for (const auto& t : ext.new_tokens) {
                    lines += t + "\t" + std::to_string(ext.scores.at(t)) + "\n";
                }
                write_or_print(*scores_path, lines);
            }
        };
    }

    // --- SFT stages -----------------------------------------------------

    {
        auto* sub = app.add_subcommand("sft-format", "convert raw rows to the uniform format");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto field_map = std::make_shared<std::string>();
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_map = sub->add_option("--field-map", *field_map, "uniform_field = raw_field lines");
        actions[sub] = [&g, input, output, field_map, o_map] {
            json overrides = json::object();
            if (o_map->count()) overrides["field_map"] = *field_map;
            run_stage_command(g, "sft-format", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("sft-from-context", "template instructions from chunks");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto task = std::make_shared<std::string>("qa_open");
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_task = sub->add_option("--task", *task, "qa_open|summarize|mrc");
        actions[sub] = [&g, input, output, task, o_task] {
            json overrides = json::object();
            if (o_task->count()) overrides["task"] = *task;
            run_stage_command(g, "sft-from-context", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("sft-clean", "instruction-quality filtering");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto rules = std::make_shared<std::string>();
        auto min_len = std::make_shared<std::size_t>(2);
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_rules = sub->add_option("--rules", *rules);
        auto* o_len = sub->add_option("--min-answer-len", *min_len);
        actions[sub] = [&g, input, output, rules, min_len, o_rules, o_len] {
            json overrides = json::object();
            if (o_rules->count()) overrides["rules"] = *rules;
            if (o_len->count()) overrides["min_answer_len"] = *min_len;
            run_stage_command(g, "sft-clean", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("sft-evolve", "prompt complication passes");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto kind = std::make_shared<std::string>("constraint_length");
        auto params = std::make_shared<std::vector<std::string>>();
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        sub->add_option("--kind", *kind, "constraint_format|constraint_length|role_persona|what_if");
        sub->add_option("--param", *params, "key=value (repeatable)");
        actions[sub] = [&g, input, output, kind, params] {
            json overrides{{"kind", *kind}};
            json p = json::object();
            for (const auto& kv : *params) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    throw finforge::ConfigError("--param expects key=value, got '" + kv + "'");
                }
                p[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            if (!p.empty()) overrides["params"] = p;
            run_stage_command(g, "sft-evolve", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("dedup-embed", "semantic near-duplicate removal");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto threshold = std::make_shared<double>(0.76);
        auto lsh = std::make_shared<bool>(false);
        auto seed = std::make_shared<std::uint64_t>(42);
        auto provider = std::make_shared<std::string>("stub");
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output, "kept records; removed go to <output>.removed.jsonl")
            ->required();
        auto* o_thr = sub->add_option("--threshold", *threshold, "cosine similarity cutoff");
        auto* o_lsh = sub->add_flag("--lsh", *lsh, "hyperplane candidate prefilter");
        auto* o_seed = sub->add_option("--seed", *seed, "LSH plane seed");
        auto* o_prov = sub->add_option("--provider", *provider, "stub|http");
        actions[sub] = [&g, input, output, threshold, lsh, seed, provider, o_thr, o_lsh, o_seed,
                       o_prov] {
            json overrides = json::object();
            if (o_thr->count()) overrides["threshold"] = *threshold;
            if (o_lsh->count()) overrides["lsh_prefilter"] = *lsh;
            if (o_prov->count()) overrides["provider"] = *provider;
            run_stage_command(g, "dedup-embed", *input, *output, overrides,
                              o_seed->count() ? *seed : 42);
        };
    }

    {
        auto* sub = app.add_subcommand("ifd-score", "instruction-following difficulty scores");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto provider = std::make_shared<std::string>("stub");
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_prov = sub->add_option("--provider", *provider, "stub|http");
        actions[sub] = [&g, input, output, provider, o_prov] {
            json overrides = json::object();
            if (o_prov->count()) overrides["provider"] = *provider;
            run_stage_command(g, "ifd-score", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("ifd-filter", "keep the hardest fraction by IFD");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto fraction = std::make_shared<double>(0.7);
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_frac = sub->add_option("--fraction", *fraction);
        actions[sub] = [&g, input, output, fraction, o_frac] {
            json overrides = json::object();
            if (o_frac->count()) overrides["fraction"] = *fraction;
            run_stage_command(g, "ifd-filter", *input, *output, overrides);
        };
    }

    {
        auto* sub = app.add_subcommand("ifd-bands", "tertile difficulty bands");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output, "banded records; also writes .low/.mid/.high.jsonl")
            ->required();
        actions[sub] = [&g, input, output] {
            run_stage_command(g, "ifd-bands", *input, *output, json::object());
        };
    }

    {
        auto* sub = app.add_subcommand("build-prefs", "preference pairs from clusters or contrast");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto removed = std::make_shared<std::string>();
        auto mode = std::make_shared<std::string>("clusters");
        auto provider = std::make_shared<std::string>("stub");
        sub->add_option("--input", *input)->required();
        sub->add_option("--output", *output)->required();
        auto* o_removed = sub->add_option("--removed", *removed, "removed-duplicates sidecar");
        auto* o_mode = sub->add_option("--mode", *mode, "clusters|model-contrast");
        auto* o_prov = sub->add_option("--provider", *provider, "stub|http");
        actions[sub] = [&g, input, output, removed, mode, provider, o_removed, o_mode, o_prov] {
            json overrides = json::object();
            if (o_removed->count()) overrides["removed"] = *removed;
            if (o_mode->count()) overrides["mode"] = *mode;
            if (o_prov->count()) overrides["provider"] = *provider;
            run_stage_command(g, "build-prefs", *input, *output, overrides);
        };
    }

    // --- calculator and tool runtime -----------------------------------

    {
        auto* sub = app.add_subcommand("calc", "evaluate a calculator expression");
        auto expr = std::make_shared<std::string>();
        auto marker = std::make_shared<bool>(false);
        sub->add_option("expression", *expr)->required();
        sub->add_flag("--marker", *marker, "print the full [Calculator(...)->...] form");
        actions[sub] = [expr, marker] {
            const auto result = finforge::calc::eval(*expr);
            if (*marker) {
                std::cout << finforge::calc::format_marker(*expr, result) << '\n';
            } else {
                std::cout << result.display << '\n';
            }
        };
    }

    {
        auto* sub = app.add_subcommand("calc-verify", "re-check calculator markers in answers");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        sub->add_option("--input", *input, "instruction JSONL")->required();
        sub->add_option("--output", *output, "verification outcomes JSONL")->required();
        actions[sub] = [&g, input, output] {
            run_stage_command(g, "calc-verify", *input, *output, json::object());
        };
    }

    {
        auto* sub = app.add_subcommand("tool-run", "drive the calculator chat protocol");
        auto message = std::make_shared<std::string>();
        auto script = std::make_shared<std::string>();
        auto provider = std::make_shared<std::string>();
        auto rounds = std::make_shared<std::size_t>(4);
        sub->add_option("--message", *message, "user message")->required();
        sub->add_option("--script", *script, "scripted-chat fixture (JSON)");
        sub->add_option("--provider", *provider, "script|echo|http");
        sub->add_option("--max-rounds", *rounds);
        actions[sub] = [&g, message, script, provider, rounds] {
            std::unique_ptr<finforge::ChatProvider> model;
            std::string mode = provider->empty() ? (script->empty() ? "echo" : "script")
                                                 : *provider;
            if (mode == "script") {
                auto scripted = std::make_unique<finforge::ScriptedChat>();
                if (script->empty()) throw finforge::ConfigError("--provider script needs --script");
                scripted->load_script(*script);
                model = std::move(scripted);
            } else if (mode == "echo") {
                model = std::make_unique<finforge::EchoChat>();
            } else if (mode == "http") {
                model = std::make_unique<finforge::HttpChat>(
                    finforge::provider_config_from_env("FINFORGE_CHAT_URL"));
            } else {
                throw finforge::ConfigError("--provider must be script, echo, or http");
            }
            const auto result = finforge::tool_chat_loop(*message, *model, *rounds);
            for (const auto& entry : result.transcript) {
                log_info(g, "calc " + entry.expr_src + " -> " + entry.result);
            }
            log_info(g, "model calls: " + std::to_string(result.model_calls));
            std::cout << result.final_text << '\n';
        };
    }

    // --- numerics -------------------------------------------------------

    {
        auto* sub = app.add_subcommand("dpo-loss", "DPO loss/gradient for one pair");
        auto x = std::make_shared<finforge::DpoInputs>();
        sub->add_option("--policy-chosen", x->logp_policy_chosen)->required();
        sub->add_option("--policy-rejected", x->logp_policy_rejected)->required();
        sub->add_option("--ref-chosen", x->logp_ref_chosen)->required();
        sub->add_option("--ref-rejected", x->logp_ref_rejected)->required();
        sub->add_option("--beta", x->beta);
        actions[sub] = [x] {
            x->validate();
            const auto [g_chosen, g_rejected] = finforge::dpo_grad(*x);
            const json out{{"z", finforge::dpo_z(*x)},
                           {"loss", finforge::dpo_loss(*x)},
                           {"grad_policy_chosen", g_chosen},
                           {"grad_policy_rejected", g_rejected}};
            std::cout << out.dump(2) << '\n';
        };
    }

    {
        auto* sub = app.add_subcommand("lr", "warmup + cosine learning-rate schedule");
        auto sched = std::make_shared<finforge::LrSchedule>();
        auto step = std::make_shared<std::size_t>(0);
        auto every = std::make_shared<std::size_t>(1);
        auto csv = std::make_shared<bool>(false);
        sub->add_option("--peak", sched->peak_lr);
        sub->add_option("--warmup", sched->warmup_steps);
        sub->add_option("--total", sched->total_steps);
        sub->add_option("--floor", sched->floor_lr);
        auto* o_step = sub->add_option("--step", *step, "print the LR at one step");
        sub->add_flag("--csv", *csv, "print step,lr for the whole schedule");
        sub->add_option("--every", *every, "CSV stride")->check(CLI::PositiveNumber);
        actions[sub] = [sched, step, every, csv, o_step] {
            sched->validate();
            if (*csv) {
                std::string out = "step,lr\n";
                for (std::size_t s = 0; s <= sched->total_steps; s += *every) {
                    out += std::to_string(s) + "," + json(finforge::lr_at_step(s, *sched)).dump() + "\n";
                }
                std::cout << out;
            } else if (o_step->count()) {
                std::cout << json(finforge::lr_at_step(*step, *sched)).dump() << '\n';
            } else {
                throw finforge::ConfigError("lr needs --step or --csv");
            }
        };
    }

    // --- evaluation -----------------------------------------------------

    {
        auto* sub = app.add_subcommand("eval", "multiple-choice accuracy harness");
        auto items = std::make_shared<std::string>();
        auto provider = std::make_shared<std::string>();
        auto script = std::make_shared<std::string>();
        auto tmpl = std::make_shared<std::string>(finforge::kDefaultMcqTemplate);
        auto output = std::make_shared<std::string>();
        sub->add_option("--items", *items, "MCQ items JSONL")->required();
        sub->add_option("--provider", *provider, "script|echo|http");
        sub->add_option("--script", *script, "scripted-chat fixture (JSON)");
        sub->add_option("--template", *tmpl, "prompt template with {question} and {choices}");
        sub->add_option("--output", *output, "write the report JSON here instead of stdout");
        actions[sub] = [&g, items, provider, script, tmpl, output] {
            const auto mcq = finforge::read_mcq_items(*items);
            std::unique_ptr<finforge::ChatProvider> model;
            std::string mode = provider->empty() ? (script->empty() ? "echo" : "script")
                                                 : *provider;
            if (mode == "script") {
                auto scripted = std::make_unique<finforge::ScriptedChat>();
                if (script->empty()) throw finforge::ConfigError("--provider script needs --script");
                scripted->load_script(*script);
                model = std::move(scripted);
            } else if (mode == "echo") {
                model = std::make_unique<finforge::EchoChat>();
            } else if (mode == "http") {
                model = std::make_unique<finforge::HttpChat>(
                    finforge::provider_config_from_env("FINFORGE_CHAT_URL"));
            } else {
                throw finforge::ConfigError("--provider must be script, echo, or http");
            }
            const auto report = finforge::evaluate_mcq(mcq, *model, *tmpl, g.jobs);
            write_or_print(*output, eval_report_json(report).dump(2) + "\n");
            log_info(g, "accuracy " + json(report.overall_accuracy).dump() + " over " +
                            std::to_string(report.n_items) + " items");
        };
    }

    // --- pipeline -------------------------------------------------------

    {
        auto* sub = app.add_subcommand("pipeline", "run a declarative stage manifest");
        auto manifest_path = std::make_shared<std::string>();
        auto report_path = std::make_shared<std::string>();
        sub->add_option("--manifest", *manifest_path)->required();
        sub->add_option("--report", *report_path, "write the run report JSON here");
        actions[sub] = [&g, manifest_path, report_path] {
            const auto manifest = finforge::load_manifest(*manifest_path);
            const auto report = finforge::run_pipeline(manifest, g.jobs);
            write_or_print(*report_path, finforge::to_json(report).dump(2) + "\n");
            for (const auto& s : report.stages) {
                log_info(g, s.name + ": in=" + std::to_string(s.in_count) +
                                " out=" + std::to_string(s.out_count) +
                                " drops: " + drops_summary(s.drops));
            }
            if (!report.ok) {
                std::cerr << "stage " << report.failed_stage << " failed: " << report.error
                          << '\n';
                g.exit_code = 1;
            }
        };
    }

    try {
        app.parse(argc, argv);
        g.load_config();
        for (const auto* sub : app.get_subcommands()) actions.at(sub)();
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const finforge::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const finforge::CalcError& e) {
        std::cerr << "calc error: " << finforge::calc_error_tag(e.kind) << ": " << e.what()
                  << '\n';
        return 1;
    } catch (const finforge::ToolTruncationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        std::cout << e.partial << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return g.exit_code;
}
