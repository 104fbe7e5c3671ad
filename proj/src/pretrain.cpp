#include "finforge/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "finforge/errors.hpp"
#include "finforge/textutil.hpp"

namespace finforge {

namespace {

std::string nfc(const std::string& utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw DataError("ICU NFC unavailable");
    icu::UnicodeString src = icu::UnicodeString::fromUTF8(utf8);
    icu::UnicodeString dst = norm->normalize(src, status);
    if (U_FAILURE(status)) throw DataError("NFC normalization failed");
    std::string out;
    dst.toUTF8String(out);
    return out;
}

bool is_control(char32_t cp) {
    return (cp < 0x20 && cp != U'\n' && cp != U'\t') || (cp >= 0x7F && cp <= 0x9F);
}

// Collapse runs of more than two blank lines down to two.
std::vector<char32_t> collapse_blank_lines(const std::vector<char32_t>& cps) {
    std::vector<char32_t> out;
    out.reserve(cps.size());
    std::size_t newline_run = 0;
    for (char32_t cp : cps) {
        if (cp == U'\n') {
            ++newline_run;
            if (newline_run <= 3) out.push_back(cp);  // 3 newlines == 2 blank lines
        } else {
            newline_run = 0;
            out.push_back(cp);
        }
    }
    return out;
}

}  // namespace

std::string normalize_text(const std::string& text) {
    const auto raw = decode_utf8(text);
    std::vector<char32_t> cps;
    cps.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char32_t cp = raw[i];
        if (cp == U'\r') {
            if (i + 1 < raw.size() && raw[i + 1] == U'\n') continue;  // CRLF -> LF
            continue;  // stray CR is a control character
        }
        if (is_control(cp)) continue;
        if (cp == 0x3000) cp = U' ';  // ideographic space
        cps.push_back(cp);
    }
    cps = collapse_blank_lines(cps);
    // NFC last: removals above can juxtapose base chars and combining marks.
    return nfc(encode_utf8(cps));
}

DocumentRecord normalize_document(const DocumentRecord& raw) {
    DocumentRecord out = raw;
    try {
        out.text = normalize_text(raw.text);
    } catch (const DataError& e) {
        throw DataError("document " + raw.id + ": " + e.what());
    }
    return out;
}

namespace {

enum class CutTier { paragraph, sentence, none };

bool is_sentence_end(char32_t cp) {
    return cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F ||  // 。！？
           cp == U'.' || cp == U'!' || cp == U'?';
}

// Best cut position within [lo, hi] near target: paragraph break first,
// then sentence end, else the target itself. Cutting at p splits [0,p)/[p,n).
std::size_t pick_cut(const std::vector<char32_t>& cps, std::size_t lo, std::size_t hi,
                     std::size_t target) {
    std::size_t best_para = 0, best_sent = 0;
    std::size_t dist_para = SIZE_MAX, dist_sent = SIZE_MAX;
    for (std::size_t p = lo; p <= hi; ++p) {
        const std::size_t d = p > target ? p - target : target - p;
        if (p >= 2 && cps[p - 1] == U'\n' && cps[p - 2] == U'\n') {
            if (d < dist_para) { dist_para = d; best_para = p; }
        } else if (is_sentence_end(cps[p - 1])) {
            if (d < dist_sent) { dist_sent = d; best_sent = p; }
        }
    }
    if (dist_para != SIZE_MAX) return best_para;
    if (dist_sent != SIZE_MAX) return best_sent;
    return std::clamp(target, lo, hi);
}

Chunk make_chunk(std::string id, std::vector<std::string> doc_ids, std::string text) {
    Chunk c;
    c.id = std::move(id);
    c.doc_ids = std::move(doc_ids);
    c.char_len = codepoint_count(text);
    c.token_estimate = estimate_tokens(c.char_len);
    c.text = std::move(text);
    return c;
}

// Balanced split into k = ceil(len/max_length) pieces. Cut positions stay
// inside the feasible window that keeps every piece within max_length.
void split_document(const DocumentRecord& doc, std::size_t max_length,
                    std::vector<Chunk>& out) {
    const auto cps = decode_utf8(doc.text);
    const std::size_t len = cps.size();
    const std::size_t k = (len + max_length - 1) / max_length;
    const std::size_t window = std::max<std::size_t>(1, max_length / 5);

    std::size_t prev = 0;
    for (std::size_t i = 1; i <= k; ++i) {
        std::size_t cut;
        if (i == k) {
            cut = len;
        } else {
            // round-half-up of i*len/k
            const std::size_t target = (2 * i * len + k) / (2 * k);
            const std::size_t remaining = k - i;
            std::size_t lo = prev + 1;
            if (len > remaining * max_length)
                lo = std::max(lo, len - remaining * max_length);
            const std::size_t hi = std::min(prev + max_length, len - 1);
            const std::size_t slo = std::max(lo, target > window ? target - window : 1);
            const std::size_t shi = std::min(hi, target + window);
            cut = slo <= shi ? pick_cut(cps, slo, shi, target)
                             : std::clamp(target, lo, hi);
        }
        std::vector<char32_t> piece(cps.begin() + static_cast<std::ptrdiff_t>(prev),
                                    cps.begin() + static_cast<std::ptrdiff_t>(cut));
        out.push_back(make_chunk(doc.id + "#" + std::to_string(i - 1), {doc.id},
                                 encode_utf8(piece)));
        prev = cut;
    }
}

struct ConcatBuffer {
    std::string text;
    std::size_t char_len = 0;
    std::vector<std::string> doc_ids;
    Source source = Source::finance_news;

    bool empty() const { return doc_ids.empty(); }

    void flush(std::vector<Chunk>& out) {
        if (empty()) return;
        std::string id = doc_ids.front();
        if (doc_ids.size() > 1) id += "+" + std::to_string(doc_ids.size());
        out.push_back(make_chunk(std::move(id), std::move(doc_ids), std::move(text)));
        text.clear();
        doc_ids.clear();
        char_len = 0;
    }
};

}  // namespace

std::vector<Chunk> chunk_documents(const std::vector<DocumentRecord>& docs,
                                   std::size_t max_length) {
    if (max_length < kMinChunkLength) {
        throw ConfigError("max_length must be >= " + std::to_string(kMinChunkLength));
    }
    std::vector<Chunk> out;
    ConcatBuffer buf;
    for (const auto& doc : docs) {
        const std::size_t len = codepoint_count(doc.text);
        if (len == 0) continue;
        if (len > max_length) {
            buf.flush(out);
            split_document(doc, max_length, out);
            continue;
        }
        const bool joinable = !buf.empty() && buf.source == doc.source &&
                              buf.char_len + 2 + len <= max_length;
        if (!joinable) buf.flush(out);
        if (buf.empty()) {
            buf.source = doc.source;
            buf.text = doc.text;
            buf.char_len = len;
        } else {
            buf.text += "\n\n";
            buf.text += doc.text;
            buf.char_len += 2 + len;
        }
        buf.doc_ids.push_back(doc.id);
    }
    buf.flush(out);
    return out;
}

double content_ratio(const std::string& text) {
    const auto cps = decode_utf8(text);
    std::size_t content = 0, total = 0;
    for (char32_t cp : cps) {
        if (is_unicode_space(cp)) continue;
        ++total;
        if (is_ascii_alnum(cp) || is_cjk(cp)) ++content;
    }
    return total == 0 ? 0.0 : static_cast<double>(content) / static_cast<double>(total);
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct Span {
    std::size_t begin, end;
};

// Regex matches with manual digit-boundary checks; std::regex (ECMAScript)
// has no lookbehind.
std::vector<Span> find_bounded(const std::string& text, const std::regex& re,
                               bool digit_bounded) {
    std::vector<Span> spans;
    auto begin = std::sregex_iterator(text.begin(), text.end(), re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::size_t pos = static_cast<std::size_t>(it->position());
        const std::size_t end = pos + static_cast<std::size_t>(it->length());
        if (digit_bounded) {
            if (pos > 0 && is_digit(text[pos - 1])) continue;
            if (end < text.size() && is_digit(text[end])) continue;
        }
        spans.push_back({pos, end});
    }
    return spans;
}

const std::regex& id_regex() {
    static const std::regex re("[0-9]{17}[0-9Xx]");
    return re;
}
const std::regex& phone_regex() {
    static const std::regex re("1[3-9][0-9]{9}");
    return re;
}
const std::regex& email_regex() {
    static const std::regex re("[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\\.[A-Za-z]{2,}");
    return re;
}

std::string redact_spans(const std::string& text, std::vector<Span> spans) {
    if (spans.empty()) return text;
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
        return a.begin < b.begin;
    });
    std::string out;
    std::size_t pos = 0;
    for (const auto& s : spans) {
        if (s.begin < pos) continue;  // overlap already handled
        out += text.substr(pos, s.begin - pos);
        out += "[REDACTED]";
        pos = s.end;
    }
    out += text.substr(pos);
    return out;
}

bool has_repeated_ngram(const std::string& text, std::size_t n, std::size_t limit) {
    const auto cps = decode_utf8(text);
    if (cps.size() < n) return false;
    std::unordered_map<std::u32string, std::size_t> counts;
    std::u32string gram(cps.begin(), cps.begin() + static_cast<std::ptrdiff_t>(n));
    if (++counts[gram] >= limit) return true;
    for (std::size_t i = n; i < cps.size(); ++i) {
        gram.erase(gram.begin());
        gram.push_back(cps[i]);
        if (++counts[gram] >= limit) return true;
    }
    return false;
}

}  // namespace

RuleSet RuleSet::parse(const std::string& text) {
    RuleSet rules;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("rules: expected key = value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "mode") {
            if (value == "drop") rules.mode = PrivacyMode::drop;
            else if (value == "redact") rules.mode = PrivacyMode::redact;
            else throw ConfigError("rules: mode must be drop or redact");
        } else if (key == "privacy_id") {
            rules.privacy_id = (value == "true" || value == "1");
        } else if (key == "privacy_phone") {
            rules.privacy_phone = (value == "true" || value == "1");
        } else if (key == "privacy_email") {
            rules.privacy_email = (value == "true" || value == "1");
        } else if (key == "min_content_ratio") {
            rules.min_content_ratio = std::stod(value);
        } else if (key == "repeat_ngram") {
            rules.repeat_ngram = std::stoul(value);
        } else if (key == "repeat_limit") {
            rules.repeat_limit = std::stoul(value);
        } else if (key == "sensitive_terms") {
            for (auto& term : split(value, ',')) {
                auto t = trim(term);
                if (!t.empty()) rules.sensitive_terms.push_back(std::move(t));
            }
        } else if (starts_with(key, "pattern.")) {
            const std::string name = key.substr(8);
            try {
                rules.extra_patterns.emplace_back(name, std::regex(value));
            } catch (const std::regex_error&) {
                throw ConfigError("rules: malformed regex in rule " + name);
            }
        } else {
            throw ConfigError("rules: unknown key " + key);
        }
    }
    return rules;
}

RuleSet RuleSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rules file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::pair<std::vector<Chunk>, CleanReport> apply_clean_rules(
    const std::vector<Chunk>& chunks, const RuleSet& rules) {
    std::vector<Chunk> kept;
    CleanReport report;
    for (const auto& chunk : chunks) {
        std::string reason;
        std::vector<Span> privacy_spans;

        if (rules.privacy_id) {
            auto spans = find_bounded(chunk.text, id_regex(), true);
            if (!spans.empty()) {
                reason = "privacy_id";
                privacy_spans.insert(privacy_spans.end(), spans.begin(), spans.end());
            }
        }
        if (reason.empty() && rules.privacy_phone) {
            auto spans = find_bounded(chunk.text, phone_regex(), true);
            if (!spans.empty()) {
                reason = "privacy_phone";
                privacy_spans.insert(privacy_spans.end(), spans.begin(), spans.end());
            }
        }
        if (reason.empty() && rules.privacy_email) {
            auto spans = find_bounded(chunk.text, email_regex(), false);
            if (!spans.empty()) {
                reason = "privacy_email";
                privacy_spans.insert(privacy_spans.end(), spans.begin(), spans.end());
            }
        }

        if (!reason.empty() && rules.mode == PrivacyMode::redact) {
            Chunk redacted = chunk;
            redacted.text = redact_spans(chunk.text, std::move(privacy_spans));
            redacted.char_len = codepoint_count(redacted.text);
            redacted.token_estimate = estimate_tokens(redacted.char_len);
            ++report.reasons["redacted_" + reason];
            kept.push_back(std::move(redacted));
            ++report.kept;
            continue;
        }

        if (reason.empty()) {
            for (const auto& term : rules.sensitive_terms) {
                if (chunk.text.find(term) != std::string::npos) {
                    reason = "sensitive_term";
                    break;
                }
            }
        }
        if (reason.empty()) {
            for (const auto& [name, re] : rules.extra_patterns) {
                if (std::regex_search(chunk.text, re)) {
                    reason = name;
                    break;
                }
            }
        }
        if (reason.empty() && content_ratio(chunk.text) < rules.min_content_ratio) {
            reason = "low_content_ratio";
        }
        if (reason.empty() &&
            has_repeated_ngram(chunk.text, rules.repeat_ngram, rules.repeat_limit)) {
            reason = "repeat_ngram";
        }

        if (reason.empty()) {
            kept.push_back(chunk);
            ++report.kept;
        } else {
            ++report.dropped;
            ++report.reasons[reason];
        }
    }
    return {std::move(kept), report};
}

}  // namespace finforge
