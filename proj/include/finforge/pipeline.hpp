#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finforge/jsonl.hpp"

namespace finforge {

struct StageSpec {
    std::string name;
    std::string input;
    std::string output;
    json options = json::object();  // stage-specific overrides
};

struct PipelineManifest {
    std::string run_id = "run";
    std::uint64_t seed = 42;
    std::vector<StageSpec> stages;
};

PipelineManifest manifest_from_json(const json& j);
PipelineManifest load_manifest(const std::string& path);

// Throws ConfigError before anything executes: empty stage list, unknown
// stage name, missing paths, or an input that neither exists on disk nor
// is produced by an earlier stage.
void validate_manifest(const PipelineManifest& m);

struct StageReport {
    std::string name;
    std::size_t in_count = 0;
    std::size_t out_count = 0;
    std::map<std::string, std::size_t> drops;
    double wall_ms = 0.0;
};

struct RunReport {
    std::string run_id;
    std::vector<StageReport> stages;
    bool ok = true;
    std::string failed_stage;
    std::string error;
};

json to_json(const StageReport& r);
json to_json(const RunReport& r);

struct StageContext {
    std::uint64_t seed = 42;  // feeds every randomized choice (LSH planes)
    std::size_t jobs = 1;
};

std::vector<std::string> known_stage_names();

// Executes one stage by name. The same function backs the CLI subcommands
// and run_pipeline, so both produce byte-identical output files.
StageReport run_stage(const StageSpec& spec, const StageContext& ctx = {});

// Validates, then runs stages in order. A stage error stops the run with
// earlier outputs preserved and the failing stage named in the report.
RunReport run_pipeline(const PipelineManifest& manifest, std::size_t jobs = 1);

}  // namespace finforge
