#include "finforge/evalh.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "finforge/errors.hpp"
#include "finforge/parallel.hpp"
#include "finforge/textutil.hpp"
#include "finforge/toolrt.hpp"

namespace finforge {

namespace {

bool is_ascii_alnum_byte(char c) {
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

// Filler tokens allowed between an answer keyword and the letter.
const char* kFillers[] = {" ", "\t", ":", "：", "是", "为", "选项", "选", "项",
                          "(", "（", "\"", "“", "'", "*"};

std::optional<char> letter_after_keyword(const std::string& text, std::size_t from,
                                         const std::set<char>& valid) {
    std::size_t i = from;
    for (int hops = 0; hops < 8 && i < text.size(); ++hops) {
        bool skipped = false;
        for (const char* filler : kFillers) {
            const std::size_t len = std::char_traits<char>::length(filler);
            if (text.compare(i, len, filler) == 0) {
                i += len;
                skipped = true;
                break;
            }
        }
        if (!skipped) break;
    }
    if (i < text.size()) {
        const char c = text[i];
        if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) {
            const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            // The letter must stand alone, not open a word ("A股", "BofA").
            const bool next_ok = i + 1 >= text.size() || !is_ascii_alnum_byte(text[i + 1]);
            if (valid.count(upper) && next_ok) return upper;
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<char> extract_choice(const std::string& model_output,
                                   const std::set<char>& valid,
                                   const std::vector<std::pair<char, std::string>>& choices) {
    if (valid.empty()) return std::nullopt;

    // Rule 1: letter after an answer keyword (earliest keyword wins).
    static const char* kKeywords[] = {"答案是", "答案为", "正确答案"};
    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    for (const char* kw : kKeywords) {
        const std::size_t pos = model_output.find(kw);
        if (pos != std::string::npos && pos < best_pos) {
            best_pos = pos;
            best_len = std::char_traits<char>::length(kw);
        }
    }
    if (best_pos != std::string::npos) {
        if (const auto letter = letter_after_keyword(model_output, best_pos + best_len, valid)) {
            return letter;
        }
    }

    // Rule 2: first standalone uppercase valid letter.
    for (std::size_t i = 0; i < model_output.size(); ++i) {
        const char c = model_output[i];
        if (c < 'A' || c > 'Z' || !valid.count(c)) continue;
        const bool prev_ok = i == 0 || !is_ascii_alnum_byte(model_output[i - 1]);
        const bool next_ok = i + 1 >= model_output.size() || !is_ascii_alnum_byte(model_output[i + 1]);
        if (prev_ok && next_ok) return c;
    }

    // Rule 3: output text equals a choice text.
    std::string t = trim(model_output);
    if (ends_with(t, "。")) t = trim(t.substr(0, t.size() - 3));
    for (const auto& [letter, text] : choices) {
        if (!t.empty() && t == trim(text) && valid.count(letter)) return letter;
    }
    return std::nullopt;
}

std::string render_mcq_prompt(const McqItem& item, const std::string& prompt_template) {
    const std::size_t q_slot = prompt_template.find("{question}");
    const std::size_t c_slot = prompt_template.find("{choices}");
    if (q_slot == std::string::npos || c_slot == std::string::npos) {
        throw ConfigError("prompt template must contain {question} and {choices}");
    }
    std::string choices;
    for (const auto& [letter, text] : item.choices) {
        if (!choices.empty()) choices.push_back('\n');
        choices.push_back(letter);
        choices += ". ";
        choices += text;
    }
    std::string out = prompt_template;
    out.replace(out.find("{question}"), 10, item.question);
    out.replace(out.find("{choices}"), 9, choices);
    return out;
}

EvalReport evaluate_mcq(const std::vector<McqItem>& items, ChatProvider& model,
                        const std::string& prompt_template, std::size_t jobs) {
    EvalReport report;
    report.n_items = items.size();
    report.items.resize(items.size());
    if (items.empty()) return report;

    for (const auto& item : items) {
        bool gold_found = false;
        for (const auto& [letter, text] : item.choices) gold_found |= letter == item.gold;
        if (!gold_found) {
            throw DataError("item " + item.id + ": gold letter not among choices");
        }
    }

    parallel_for(items.size(), jobs, [&](std::size_t i) {
        const McqItem& item = items[i];
        EvalItemResult& r = report.items[i];
        r.id = item.id;
        r.category = item.category;
        r.gold = item.gold;
        std::set<char> valid;
        for (const auto& [letter, text] : item.choices) valid.insert(letter);
        try {
            const std::string output = model.chat_complete(
                kGeneralSystemPrompt, {{"user", render_mcq_prompt(item, prompt_template)}});
            r.extracted = extract_choice(output, valid, item.choices);
            r.correct = r.extracted && *r.extracted == item.gold;
        } catch (const ProviderError&) {
            r.errored = true;
        }
    });

    std::size_t correct_total = 0;
    for (const auto& r : report.items) {
        auto& cat = report.per_category[r.category];
        ++cat.n;
        if (r.correct) {
            ++cat.correct;
            ++correct_total;
        }
        if (r.errored) {
            ++report.n_errored;
        } else if (!r.extracted) {
            ++report.n_unparseable;
        }
    }
    report.overall_accuracy =
        static_cast<double>(correct_total) / static_cast<double>(report.n_items);
    if (report.n_errored * 10 > report.n_items) {
        throw ProviderError("evaluation failed: " + std::to_string(report.n_errored) + "/" +
                            std::to_string(report.n_items) + " items errored (>10%)");
    }
    return report;
}

namespace {

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

}  // namespace

std::string render_results_grid(const ResultsGrid& grid) {
    std::size_t model_width = std::char_traits<char>::length("Model");
    for (const auto& m : grid.models) model_width = std::max(model_width, m.size());

    std::vector<std::vector<std::size_t>> widths;
    for (const auto& group : grid.dataset_groups) {
        std::vector<std::size_t> w;
        for (const auto& name : group) w.push_back(std::max<std::size_t>(name.size(), 6));
        widths.push_back(std::move(w));
    }

    std::string out = pad_right("Model", model_width);
    for (std::size_t g = 0; g < grid.dataset_groups.size(); ++g) {
        out += " |";
        for (std::size_t c = 0; c < grid.dataset_groups[g].size(); ++c) {
            out += "  " + pad_left(grid.dataset_groups[g][c], widths[g][c]);
        }
    }
    out.push_back('\n');

    std::string rule(model_width, '-');
    for (std::size_t g = 0; g < grid.dataset_groups.size(); ++g) {
        rule += "-+";
        for (std::size_t c = 0; c < grid.dataset_groups[g].size(); ++c) {
            rule += std::string(widths[g][c] + 2, '-');
        }
    }
    out += rule;
    out.push_back('\n');

    for (const auto& model : grid.models) {
        out += pad_right(model, model_width);
        const auto row = grid.scores.find(model);
        for (std::size_t g = 0; g < grid.dataset_groups.size(); ++g) {
            out += " |";
            for (std::size_t c = 0; c < grid.dataset_groups[g].size(); ++c) {
                std::string cell = "-";
                if (row != grid.scores.end()) {
                    const auto score = row->second.find(grid.dataset_groups[g][c]);
                    if (score != row->second.end()) cell = percent(score->second);
                }
                out += "  " + pad_left(cell, widths[g][c]);
            }
        }
        out.push_back('\n');
    }
    return out;
}

std::string render_checkpoint_csv(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& series) {
    std::set<std::string> datasets;
    for (const auto& [label, scores] : series) {
        for (const auto& [name, value] : scores) datasets.insert(name);
    }
    std::string out = "checkpoint";
    for (const auto& name : datasets) out += "," + name;
    out.push_back('\n');
    for (const auto& [label, scores] : series) {
        out += label;
        for (const auto& name : datasets) {
            out.push_back(',');
            const auto it = scores.find(name);
            if (it != scores.end()) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.4f", it->second);
                out += buf;
            }
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace finforge
