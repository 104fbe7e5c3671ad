#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "finforge/providers.hpp"
#include "finforge/records.hpp"

namespace finforge {

// Answer-letter extraction, in precedence order:
//   1. letter following 答案是 / 答案为 / 正确答案 (case-insensitive letter)
//   2. first standalone uppercase valid letter bounded by non-alphanumerics
//   3. output text equal to a choice text (trailing 。 stripped)
// Total: never throws, returns nullopt when nothing matches.
std::optional<char> extract_choice(const std::string& model_output,
                                   const std::set<char>& valid,
                                   const std::vector<std::pair<char, std::string>>& choices = {});

inline constexpr const char* kDefaultMcqTemplate =
    "以下是一道单项选择题，请直接给出正确选项。\n题目：{question}\n{choices}\n答案：";

// Renders {question} and {choices} slots; choices as "A. text" lines.
std::string render_mcq_prompt(const McqItem& item, const std::string& prompt_template);

struct EvalItemResult {
    std::string id;
    std::string category;
    char gold = 'A';
    std::optional<char> extracted;
    bool correct = false;
    bool errored = false;
};

struct CategoryStats {
    std::size_t n = 0;
    std::size_t correct = 0;

    double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }
};

struct EvalReport {
    std::map<std::string, CategoryStats> per_category;
    double overall_accuracy = 0.0;
    std::size_t n_items = 0;
    std::size_t n_unparseable = 0;
    std::size_t n_errored = 0;
    std::vector<EvalItemResult> items;
};

// Renders each item, queries the model under the general system prompt,
// extracts and scores. Model failures mark the item errored (scored
// incorrect); more than 10% errored fails the run.
EvalReport evaluate_mcq(const std::vector<McqItem>& items, ChatProvider& model,
                        const std::string& prompt_template = kDefaultMcqTemplate,
                        std::size_t jobs = 1);

// Accuracy grid in the two-group benchmark-table layout: one row per model,
// dataset columns split into groups by a double separator.
struct ResultsGrid {
    std::vector<std::string> models;
    std::vector<std::vector<std::string>> dataset_groups;
    std::map<std::string, std::map<std::string, double>> scores;  // model -> dataset
};

std::string render_results_grid(const ResultsGrid& grid);

// Checkpoint sweep CSV: header "checkpoint,<dataset...>", one row per entry.
std::string render_checkpoint_csv(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& series);

}  // namespace finforge
